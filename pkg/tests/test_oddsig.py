"""
Tests for the odd signature operator and its invariants
"""
import cmath
import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from src.config.settings import MAX_CONDITION
from src.core.complexes import random_chirality_complex, scalar_witness
from src.core.errors import AssumptionViolation, ValidationError
from src.core.linalg import AgmonAngle, Spectrum, choose_agmon
from src.core.oddsig import (
    Ambiguity,
    Provenance,
    TorsionValue,
    analytic_report,
    assemble,
    eta,
    graded_det,
    identity_residual,
    modulus_residual,
    refined_torsion,
    rs_torsion,
    split,
    xi,
)


@pytest.fixture
def random_n3():
    return assemble(*random_chirality_complex(3, (2, 4, 4, 2), seed=21))


class TestAssemble:
    """Test operator assembly and Assumption checks"""

    def test_witness_operator(self, witness):
        """Test d = 2i, Gamma = 1 gives B = 2"""
        np.testing.assert_allclose(witness.b_even, [[2.0]], atol=1e-15)
        assert witness.b_minus.shape == (0, 0)

    def test_circle_operator(self, circle_z2):
        np.testing.assert_allclose(circle_z2.b_even, [[-1j]], atol=1e-15)

    def test_zero_differential_violates_bijectivity(self):
        tc, ch = scalar_witness(0.0)
        with pytest.raises(AssumptionViolation) as exc:
            assemble(tc, ch)
        assert exc.value.assumption == "II"
        assert exc.value.exit_code == 3

    def test_random_splitting_dimensions(self, random_n3):
        """Test plus and minus parts fill the even degrees"""
        b_plus, b_minus = split(random_n3)
        assert b_plus.shape[0] + b_minus.shape[0] == random_n3.dimension == 2 + 4
        for k in range(4):
            assert random_n3.plus_bases[k].shape[1] + random_n3.minus_bases[k].shape[1] == (2, 4, 4, 2)[k]

    def test_projectors(self, random_n3):
        p, q = random_n3.projector_plus, random_n3.projector_minus
        np.testing.assert_allclose(p @ p, p, atol=1e-9)
        np.testing.assert_allclose(p + q, np.eye(p.shape[0]), atol=1e-12)
        np.testing.assert_allclose(p @ random_n3.b_even, random_n3.b_even @ p, atol=1e-8)

    def test_self_adjoint_witness(self, hermitian_n3):
        assert hermitian_n3.is_self_adjoint()
        p = hermitian_n3.projector_plus
        np.testing.assert_allclose(p, p.conj().T, atol=1e-8)


class TestInvariants:
    """Test graded determinant, xi and eta"""

    def test_witness_values(self, witness):
        theta = choose_agmon(witness.spectrum)
        assert graded_det(witness, theta) == pytest.approx(2.0)
        assert xi(witness, theta) == pytest.approx(math.log(2.0))
        assert eta(witness, theta).value == 0
        assert rs_torsion(witness, theta) == pytest.approx(2.0)

    def test_unit_witness_has_zero_xi(self):
        os = assemble(*scalar_witness(1.0))
        assert xi(os, choose_agmon(os.spectrum)) == pytest.approx(0.0, abs=1e-15)
        assert rs_torsion(os, choose_agmon(os.spectrum)) == pytest.approx(1.0)

    def test_circle_graded_det(self, circle_z2):
        assert graded_det(circle_z2, choose_agmon(circle_z2.spectrum)) == pytest.approx(-1j)

    def test_ratio_of_determinants(self, witness):
        """Test Det_gr is Det(B_plus) / Det(B_minus) for B_plus = 1, B_minus = 2"""
        toy = dataclasses.replace(witness, plus_spectrum=Spectrum.from_values([1.0]),
                                  minus_spectrum=Spectrum.from_values([2.0]))
        theta = AgmonAngle(-math.pi / 4, True, True, math.pi / 4)
        assert graded_det(toy, theta) == pytest.approx(0.5)

    def test_empty_spectrum_eta(self, witness):
        toy = dataclasses.replace(witness, spectrum=Spectrum(()))
        assert eta(toy, AgmonAngle(-math.pi / 4, True, True, math.pi)).value == 0

    def test_eta_counts(self, random_n3):
        theta = choose_agmon(random_n3.spectrum)
        value = eta(random_n3, theta)
        assert value.m_plus + value.m_minus == random_n3.dimension
        assert value.value == pytest.approx(-value.m_minus)
        assert value.asymmetry == value.m_plus - value.m_minus

    def test_identity(self, random_n3):
        """Test Det_gr = e^xi e^(-i pi eta) and the modulus relation"""
        theta = choose_agmon(random_n3.spectrum)
        assert identity_residual(random_n3, theta) < 1e-10
        assert modulus_residual(random_n3, theta) < 1e-10

    def test_symmetric_pair_eta(self, witness):
        """Test spectrum {2, -2} gives eta = -1 and e^(-i pi eta) = -1"""
        toy = dataclasses.replace(witness, spectrum=Spectrum.from_values([2.0, -2.0]))
        value = eta(toy, AgmonAngle(-math.pi / 4, True, True, math.pi / 4))
        assert (value.m_plus, value.m_minus) == (1, 1)
        assert value.value == -1
        assert value.phase_factor() == pytest.approx(-1.0)

    @pytest.mark.parametrize("n,dims,seed", [(1, (10, 10), 600114), (3, (8, 14, 14, 8), 1400215)])
    def test_identity_on_generated_models(self, n, dims, seed):
        """Test generated models are conditioned well enough for the identity to 1e-10"""
        os = assemble(*random_chirality_complex(n, dims, seed))
        assert np.linalg.cond(os.b_even) <= MAX_CONDITION
        theta = choose_agmon(os.spectrum)
        assert identity_residual(os, theta) < 1e-10
        assert modulus_residual(os, theta) < 1e-10

    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_hermitian_invariants(self, seed):
        from src.core.complexes import hermitian_chirality_complex
        os = assemble(*hermitian_chirality_complex(1, (4, 4), seed))
        theta = choose_agmon(os.spectrum)
        value = xi(os, theta)
        assert abs(value.imag / math.pi - round(value.imag / math.pi)) < 1e-9
        assert abs(eta(os, theta).value.imag) < 1e-12
        det = graded_det(os, theta)
        assert rs_torsion(os, theta) == pytest.approx(abs(det), rel=1e-10)

    def test_similarity_invariance(self, rng):
        from src.core.complexes import random_well_conditioned, transport
        tc, ch = random_chirality_complex(1, (3, 3), seed=8)
        frames = [random_well_conditioned(3, 3, rng, 10.0) for _ in range(2)]
        os = assemble(tc, ch)
        moved = assemble(*transport(tc, ch, frames))
        theta = choose_agmon(os.spectrum)
        assert graded_det(moved, theta) == pytest.approx(graded_det(os, theta), rel=1e-8)
        assert cmath.exp(xi(moved, theta)) == pytest.approx(cmath.exp(xi(os, theta)), rel=1e-8)
        assert eta(moved, theta).value == eta(os, theta).value


class TestRefinedTorsion:
    """Test the refined torsion and its ambiguity"""

    def test_circle_exact(self, circle_z2):
        value = refined_torsion(circle_z2, choose_agmon(circle_z2.spectrum))
        assert value.value == pytest.approx(-1j)
        assert value.ambiguity is Ambiguity.EXACT
        assert value.provenance is Provenance.ANALYTIC

    def test_zero_correction(self, random_n3):
        theta = choose_agmon(random_n3.spectrum)
        g = graded_det(random_n3, theta)
        value = refined_torsion(random_n3, theta, rank_e=1, l_integral=0)
        assert value.value == pytest.approx(g)
        assert value.ambiguity is Ambiguity.FOURTH_ROOTS
        assert value.to_dict()["rank_e"] == 1

    def test_rank_four_half(self, random_n3):
        """Test rank 4 with L = 1/2 multiplies by e^(i pi) exactly"""
        theta = choose_agmon(random_n3.spectrum)
        g = graded_det(random_n3, theta)
        value = refined_torsion(random_n3, theta, rank_e=4, l_integral=Fraction(1, 2))
        assert value.value == pytest.approx(-g)
        assert value.ambiguity is Ambiguity.EXACT

    def test_even_rank_sign(self, random_n3):
        theta = choose_agmon(random_n3.spectrum)
        assert refined_torsion(random_n3, theta, 2, 0).ambiguity is Ambiguity.SIGN

    def test_missing_l_integral(self, random_n3):
        with pytest.raises(ValidationError):
            refined_torsion(random_n3, choose_agmon(random_n3.spectrum), 1, None)

    def test_report_defaults_l_integral(self, random_n3):
        report = analytic_report(random_n3, choose_agmon(random_n3.spectrum))
        assert report.torsion.value == pytest.approx(report.graded_det)
        payload = report.to_dict()
        assert set(payload) == {"theta", "graded_det", "xi", "eta", "rs_torsion", "torsion", "dims"}
        assert payload["theta"]["ag1"] in (True, False)

    def test_zero_torsion_rejected(self):
        with pytest.raises(ValidationError):
            TorsionValue(0j, Ambiguity.EXACT, Provenance.ANALYTIC)

    def test_identity_on_witness(self, witness):
        theta = choose_agmon(witness.spectrum)
        predicted = cmath.exp(xi(witness, theta)) * eta(witness, theta).phase_factor()
        assert predicted == pytest.approx(graded_det(witness, theta))
