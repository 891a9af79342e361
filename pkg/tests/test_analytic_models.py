"""
Tests for the circle closed forms, Cauchy-Riemann residuals and sweeps
"""
import cmath
import csv
import io
import json
import math

import numpy as np
import pytest

from src.core.analytic_models import (
    CSV_COLUMNS,
    CircleBundle,
    Grid,
    annulus_grid,
    arc_grid,
    arg_pairing,
    circle_closed_form,
    circle_log_det,
    circle_point,
    circle_spectrum_truncated,
    circle_sweep,
    convergence_order,
    cr_residual,
    holomorphy_orders,
    hurwitz_oracle_residuals,
    lens_family_sweep,
    polar_cr_residual,
    square_family_grid,
    square_grid,
    sweep,
    truncation_convergence,
)
from src.core.complexes import character_representation, circle_representation
from src.core.errors import AssumptionViolation, ValidationError


def unitary(a: float) -> complex:
    return cmath.exp(2j * math.pi * a)


class TestCircleBundle:
    """Test the continuum circle operator"""

    def test_truncated_spectrum(self):
        values = circle_spectrum_truncated(CircleBundle(unitary(0.3)), 1)
        np.testing.assert_allclose(values, [-0.7, 0.3, 1.3], atol=1e-12)

    def test_truncated_half_integers(self):
        values = circle_spectrum_truncated(CircleBundle(-1.0), 2)
        np.testing.assert_allclose(values, [-1.5, -0.5, 0.5, 1.5, 2.5], atol=1e-12)

    def test_zero_mode(self):
        with pytest.raises(AssumptionViolation):
            circle_spectrum_truncated(CircleBundle(1.0), 3)

    def test_monodromy_is_inverse_twist(self):
        cb = CircleBundle.from_monodromy(2.0)
        assert cb.z == pytest.approx(0.5)
        assert cb.monodromy == pytest.approx(2.0)

    def test_zero_monodromy(self):
        with pytest.raises(ValidationError):
            CircleBundle.from_monodromy(0)


class TestClosedForm:
    """Test Det, eta and xi of the circle operator"""

    def test_symmetric_spectrum(self):
        """Test z = -1 has eta = 0 and e^xi = 2"""
        det, eta_value, xi_value = circle_closed_form(CircleBundle(-1.0))
        assert eta_value.value == pytest.approx(0.0, abs=1e-15)
        assert cmath.exp(xi_value) == pytest.approx(2.0)
        assert det == pytest.approx(2.0)

    @pytest.mark.parametrize("z", [unitary(0.3), 1.2 * unitary(0.3), 0.5, 3.0 - 2.0j])
    def test_det_is_one_minus_z(self, z):
        det, _, _ = circle_closed_form(CircleBundle(z))
        assert det == pytest.approx(1 - z, rel=1e-12)

    @pytest.mark.parametrize("a", [0.1, 0.3, 0.5, 0.9])
    def test_unitary_asymmetry(self, a):
        _, eta_value, _ = circle_closed_form(CircleBundle(unitary(a)))
        assert eta_value.asymmetry == pytest.approx(1 - 2 * a, abs=1e-12)
        assert abs(eta_value.value.imag) < 1e-12

    def test_identity_holds(self):
        """Test Det = e^xi e^(-i pi eta) for a non-unitary twist"""
        det, eta_value, xi_value = circle_closed_form(CircleBundle(0.7 * unitary(0.2)))
        assert cmath.exp(xi_value) * eta_value.phase_factor() == pytest.approx(det, rel=1e-12)

    def test_log_det_angle_independent_value(self):
        cb = CircleBundle(unitary(0.4))
        assert cmath.exp(circle_log_det(cb, -0.3)) == pytest.approx(cmath.exp(circle_log_det(cb, -1.2)))

    def test_truncation_converges(self):
        """Test the exact Hurwitz tails leave only rounding error"""
        rows = truncation_convergence(CircleBundle(1.1 * unitary(0.3)), [10, 100])
        assert rows[0].error < 1e-10
        assert rows[1].error < 1e-10

    @pytest.mark.parametrize("a", [0.1, 0.5, 0.9])
    def test_hurwitz_oracle(self, a):
        value_gap, prime_gap = hurwitz_oracle_residuals(a)
        assert value_gap < 1e-10
        assert prime_gap < 1e-10


class TestArgPairing:
    """Test the Arg class pairing"""

    def test_unitary_vanishes(self):
        assert arg_pairing(circle_representation(unitary(0.3)), {"t": 1}) == pytest.approx(0.0, abs=1e-15)

    def test_real_two(self):
        assert arg_pairing(circle_representation(2.0), {"t": 1}) == pytest.approx(-0.5 * math.log(2.0))

    def test_lens_zero_coefficient(self):
        assert arg_pairing(character_representation(5, 2), {"t": 0}) == 0.0

    def test_missing_coefficient(self):
        with pytest.raises(ValidationError):
            arg_pairing(circle_representation(2.0), {})


class TestCauchyRiemann:
    """Test d/dz-bar residuals"""

    def test_holomorphic_square(self):
        grid, h = square_grid(0.3 + 0.2j, 0.5, 7)
        assert cr_residual(grid ** 2, h).max_norm < 1e-12

    def test_anti_holomorphic(self):
        grid, h = square_grid(0.0, 1.0, 5)
        np.testing.assert_allclose(np.abs(cr_residual(np.conj(grid), h).field), 1.0, atol=1e-12)

    def test_polar_grid(self):
        grid = annulus_grid(0.8, 1.25, 9, 128)
        values = np.array(grid.points).reshape(grid.shape) ** 2
        assert polar_cr_residual(values, np.array(grid.radii), np.array(grid.angles)).max_norm < 1e-2

    def test_small_grid_rejected(self):
        with pytest.raises(ValidationError):
            cr_residual(np.zeros((2, 2)), 0.1)

    def test_nan_rejected(self):
        samples = np.zeros((3, 3), dtype=complex)
        samples[1, 1] = np.nan
        with pytest.raises(ValidationError):
            cr_residual(samples, 0.1)

    def test_second_order(self):
        residuals, orders = holomorphy_orders(lambda a: 1 - 1 / a, 0.8, 1.2, 5, 32, 3, exclude=1.0)
        assert len(residuals) == 3
        assert min(orders) >= 1.8

    def test_anti_holomorphic_has_no_order(self):
        residuals, _ = holomorphy_orders(np.conj, 0.8, 1.2, 5, 16, 2)
        assert min(residuals) > 0.5

    def test_grid_through_excluded_point(self):
        """Test 4 radial intervals of [0.8, 1.25] put a node at alpha = 1"""
        with pytest.raises(ValidationError):
            holomorphy_orders(lambda a: 1 - 1 / a, 0.8, 1.25, 5, 16, 2, exclude=1.0)

    def test_convergence_order(self):
        assert convergence_order([1.0, 0.25]) == pytest.approx([2.0])


class TestSweeps:
    """Test grid sweeps and their tables"""

    def test_circle_point(self):
        """Test monodromy 2: T = 1/2, ratio 1 and matching log moduli"""
        row = circle_point(2.0)
        assert row.torsion == pytest.approx(0.5)
        assert row.comb == pytest.approx(0.5)
        assert row.ratio == pytest.approx(1.0)
        assert row.log_modulus == pytest.approx(-0.5 * math.log(2.0))
        assert row.log_modulus_eta == pytest.approx(row.log_modulus_arg)

    def test_trivial_point_flagged(self):
        row = circle_point(1.0)
        assert not row.computed
        assert row.flags == ["inadmissible"]

    def test_unitary_arc(self):
        table = circle_sweep(arc_grid(9))
        assert all(r.computed for r in table.rows)
        for row in table.rows:
            assert abs(row.torsion) == pytest.approx(row.rs_torsion, abs=1e-8)

    def test_grid_through_one(self):
        """Test the center z = 1 is flagged and the rest computed"""
        table = circle_sweep(square_family_grid(1.0, 0.1, 3))
        summary = table.summary()
        assert summary["points"] == 9
        assert summary["flagged"] == 1
        assert summary["computed"] == 8
        assert summary["cr_residual"] is None

    def test_annulus_comparison(self):
        table = circle_sweep(annulus_grid(0.8, 1.25, 4, 8))
        summary = table.summary()
        assert summary["max_comparison_gap"] < 1e-8
        assert summary["cr_residual"] is not None

    def test_csv_rows(self):
        table = circle_sweep(square_family_grid(1.0, 0.1, 3))
        rows = list(csv.reader(io.StringIO(table.to_csv())))
        assert rows[0] == CSV_COLUMNS
        assert len(rows) == 10
        flagged = rows[1 + 4]
        assert flagged[2:8] == [""] * 6
        assert flagged[8] == "inadmissible"

    def test_json_payload(self):
        payload = json.loads(circle_sweep(arc_grid(3)).to_json())
        assert payload["summary"]["points"] == 3
        assert len(payload["rows"]) == 3

    def test_parallel_order(self):
        grid = arc_grid(6)
        serial = circle_sweep(grid, jobs=1).to_csv()
        assert circle_sweep(grid, jobs=3).to_csv() == serial

    def test_empty_grid(self):
        with pytest.raises(ValidationError):
            sweep("circle", Grid("arc", (), (0,)), circle_point)
        with pytest.raises(ValidationError):
            arc_grid(0)

    def test_lens_family(self):
        table = lens_family_sweep(5, 1)
        assert len(table.rows) == 4
        for row in table.rows:
            assert row.computed
            assert "modulus-mismatch" not in row.flags
            assert row.ratio == pytest.approx(1.0)
            assert row.log_modulus_arg == 0.0
