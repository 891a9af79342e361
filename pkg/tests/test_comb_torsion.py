"""
Tests for combinatorial torsion and Euler structures
"""
import cmath
import math

import numpy as np
import pytest

from src.core.comb_torsion import (
    EulerStructure,
    change_euler,
    comb_torsion,
    flip_orientation,
    lens_reidemeister_modulus,
    minor_torsion,
    torsion_of_based_complex,
    valid_subsets,
)
from src.core.complexes import character_representation, circle_cw, circle_representation, default_chirality, lens_cw, twist
from src.core.errors import AssumptionViolation, ValidationError
from src.core.linalg import choose_agmon
from src.core.oddsig import Provenance, assemble, graded_det


class TestBasedComplex:
    """Test torsion of explicit based complexes"""

    def test_single_differential(self):
        assert torsion_of_based_complex([np.array([[3.0]])]) == pytest.approx(3.0)

    def test_subset_independence(self, rng):
        """Test every admissible subset choice gives the same torsion"""
        d0 = rng.normal(size=(2, 1))
        d1 = rng.normal(size=(1, 2))
        d1 -= (d1 @ d0) / (d0.T @ d0) * d0.T
        values = [torsion_of_based_complex([d0, d1], s) for s in valid_subsets([d0, d1])]
        assert len(values) > 1
        for v in values:
            assert v == pytest.approx(values[0], rel=1e-10)

    def test_minor_parity(self, rng):
        """Test the signed minor product reproduces the full-determinant value"""
        d0 = rng.normal(size=(2, 1))
        d1 = rng.normal(size=(1, 2))
        d1 -= (d1 @ d0) / (d0.T @ d0) * d0.T
        for subsets in valid_subsets([d0, d1]):
            product = minor_torsion([d0, d1], subsets)
            assert product.value == pytest.approx(torsion_of_based_complex([d0, d1], subsets), rel=1e-10)

    def test_not_acyclic(self):
        with pytest.raises(AssumptionViolation):
            torsion_of_based_complex([np.zeros((1, 1))])

    def test_bad_subset(self):
        with pytest.raises(ValidationError):
            torsion_of_based_complex([np.array([[3.0]])], [[0, 0], []])


class TestCombTorsion:
    """Test twisted CW torsion on the circle and lens spaces"""

    def test_circle(self):
        """Test the circle with monodromy alpha gives alpha - 1"""
        cw = circle_cw()
        value = comb_torsion(cw, circle_representation(2.5), EulerStructure.trivial(cw))
        assert value.value == pytest.approx(1.5)
        assert value.provenance is Provenance.COMBINATORIAL

    def test_lifted_circle(self):
        """Test lifting the 1-cell by t gives 1 - 1/alpha"""
        cw = circle_cw()
        eu = EulerStructure({"e0": "1", "e1": "t"})
        assert comb_torsion(cw, circle_representation(4.0), eu).value == pytest.approx(0.75)

    @pytest.mark.parametrize("p,q,k", [(5, 1, 1), (5, 2, 3), (7, 3, 2), (3, 1, 1)])
    def test_lens_modulus(self, p, q, k):
        cw = lens_cw(p, q)
        rep = character_representation(p, k, cw.presentation)
        zeta = cmath.exp(2j * math.pi * k / p)
        value = comb_torsion(cw, rep, EulerStructure.trivial(cw)).value
        assert value == pytest.approx((zeta - 1) * (zeta ** q - 1))
        assert abs(value) == pytest.approx(lens_reidemeister_modulus(p, q, k))

    def test_lens_matches_finite_graded_det(self, lens_5_1):
        """Test the finite lens model reproduces d_0 d_2"""
        cw, rep = lens_5_1
        tc = twist(cw, rep)
        os = assemble(tc, default_chirality(tc))
        det = graded_det(os, choose_agmon(os.spectrum))
        comb = comb_torsion(cw, rep, EulerStructure.trivial(cw)).value
        assert abs(det) == pytest.approx(abs(comb))

    def test_trivial_representation(self):
        cw = circle_cw()
        with pytest.raises(AssumptionViolation):
            comb_torsion(cw, circle_representation(1.0), EulerStructure.trivial(cw))

    def test_trivial_character_modulus(self):
        with pytest.raises(AssumptionViolation):
            lens_reidemeister_modulus(5, 1, 0)


class TestEulerStructure:
    """Test Euler structure changes and orientation"""

    def test_identity_change(self):
        cw = circle_cw()
        eu = EulerStructure.trivial(cw)
        rep = circle_representation(2.0)
        assert comb_torsion(cw, rep, change_euler(eu, "e1", "1")).value == pytest.approx(
            comb_torsion(cw, rep, eu).value)

    def test_lift_on_one_cell(self):
        """Test lifting the 1-cell by t divides by alpha"""
        cw = circle_cw()
        rep = circle_representation(3.0)
        eu = EulerStructure.trivial(cw)
        base = comb_torsion(cw, rep, eu).value
        moved = comb_torsion(cw, rep, change_euler(eu, "e1", "t")).value
        assert moved == pytest.approx(base / 3.0)

    def test_lift_on_zero_cell(self):
        """Test lifting the 0-cell by t multiplies by alpha"""
        cw = circle_cw()
        rep = circle_representation(3.0)
        eu = EulerStructure.trivial(cw)
        moved = comb_torsion(cw, rep, change_euler(eu, "e0", "t^2")).value
        assert moved == pytest.approx(comb_torsion(cw, rep, eu).value * 9.0)

    def test_flip_negates(self):
        cw = circle_cw()
        rep = circle_representation(2.0)
        eu = EulerStructure.trivial(cw)
        assert comb_torsion(cw, rep, flip_orientation(eu)).value == pytest.approx(-1.0)

    def test_unknown_cell(self):
        with pytest.raises(ValidationError):
            change_euler(EulerStructure.trivial(circle_cw()), "e7", "t")

    def test_validate_missing_lift(self):
        with pytest.raises(ValidationError):
            EulerStructure({"e0": "1"}).validate(circle_cw())
