"""
Shared fixtures for the torsion test suite
"""
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.complexes import (  # noqa: E402
    circle_cw,
    circle_representation,
    default_chirality,
    hermitian_chirality_complex,
    lens_cw,
    character_representation,
    scalar_witness,
    twist,
)
from src.core.oddsig import assemble  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(12345)


@pytest.fixture
def witness():
    """Odd signature operator of d = 2i, Gamma = 1"""
    tc, ch = scalar_witness(2.0)
    return assemble(tc, ch)


@pytest.fixture
def circle_z2():
    """Finite circle model with monodromy 2"""
    tc = twist(circle_cw(), circle_representation(2.0))
    return assemble(tc, default_chirality(tc))


@pytest.fixture
def lens_5_1():
    """L(5, 1) with the character t -> exp(2 pi i / 5)"""
    cw = lens_cw(5, 1)
    rep = character_representation(5, 1, cw.presentation)
    return cw, rep


@pytest.fixture
def hermitian_n3():
    """Self-adjoint n = 3 model with dims (2, 4, 4, 2)"""
    tc, ch = hermitian_chirality_complex(3, (2, 4, 4, 2), seed=3)
    return assemble(tc, ch)
