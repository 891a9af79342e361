"""
Acceptance suites for the torsion invariants.

Each suite walks a list of cases, evaluates a single case at a time and
tallies per-property pass counts and worst residuals into a report.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.config.settings import CHECK_SUITES, DEFAULT_SEED
from src.core.analytic_models import (
    LIFTED_CIRCLE,
    CircleBundle,
    annulus_grid,
    arc_grid,
    circle_closed_form,
    circle_sweep,
    holomorphy_orders,
    hurwitz_oracle_residuals,
    lens_point,
    truncation_convergence,
)
from src.core.comb_torsion import (
    EulerStructure,
    change_euler,
    comb_torsion,
    flip_orientation,
    lens_reidemeister_modulus,
)
from src.core.complexes import (
    character_representation,
    circle_cw,
    circle_representation,
    default_chirality,
    hermitian_chirality_complex,
    lens_cw,
    random_chirality_complex,
    random_well_conditioned,
    scalar_witness,
    transport,
    twist,
)
from src.core.errors import TorsionError, ValidationError
from src.core.linalg import admissible_angles, choose_agmon, zeta_prime_zero
from src.core.oddsig import (
    assemble,
    eta,
    graded_det,
    identity_residual,
    modulus_residual,
    rs_torsion,
    xi,
)
from src.utils.helpers import performance_monitor

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-10
TRANSPORT_CONDITION = 10.0


@dataclass
class PropertyResult:
    """Pass count and worst residual for one property"""

    threshold: float
    passed: int = 0
    total: int = 0
    worst: float = 0.0
    errors: List[str] = field(default_factory=list)

    def record(self, residual: float) -> bool:
        self.total += 1
        ok = math.isfinite(residual) and residual <= self.threshold
        if ok:
            self.passed += 1
        self.worst = max(self.worst, residual) if math.isfinite(residual) else math.inf
        return ok

    def fail(self, error: str) -> None:
        self.total += 1
        self.errors.append(error)
        self.worst = math.inf

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def to_dict(self) -> dict:
        payload = {
            "passed": self.passed,
            "total": self.total,
            "worst": self.worst if math.isfinite(self.worst) else None,
            "threshold": self.threshold,
        }
        if self.errors:
            payload["errors"] = self.errors[:5]
        return payload


@dataclass
class SuiteReport:
    suite: str
    properties: Dict[str, PropertyResult] = field(default_factory=dict)
    elapsed_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return all(p.ok for p in self.properties.values())

    def prop(self, name: str, threshold: float) -> PropertyResult:
        return self.properties.setdefault(name, PropertyResult(threshold))

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.ok,
            "properties": {name: p.to_dict() for name, p in self.properties.items()},
        }


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _distance_to_pi_multiple(value: float) -> float:
    k = round(value / math.pi)
    return abs(value - k * math.pi)


def _distance_to_winding(delta: complex) -> float:
    """Distance of delta / (2 pi i) from the nearest integer"""
    q = delta / (2j * math.pi)
    return abs(q - round(q.real))


class CheckRunner:
    """Runs the named suites over seeded populations of models"""

    def __init__(self, seed: int = DEFAULT_SEED, trials: Optional[int] = None,
                 tolerance: float = IDENTITY_TOLERANCE):
        self.seed = seed
        self.trials = trials
        self.tolerance = tolerance
        self.suites: Dict[str, Callable[[SuiteReport], None]] = {
            "witness": self.check_witness,
            "identity": self.check_identity,
            "angle-independence": self.check_angle_independence,
            "hermitian": self.check_hermitian,
            "similarity": self.check_similarity,
            "circle": self.check_circle,
            "eta-unitary": self.check_eta_unitary,
            "comparison": self.check_comparison,
            "holomorphy": self.check_holomorphy,
            "cheeger-muller": self.check_cheeger_muller,
            "turaev": self.check_turaev,
        }

    def _trials(self, default: int) -> int:
        return default if self.trials is None else self.trials

    def random_cases(self, count: int) -> List[Tuple[int, Tuple[int, ...], int]]:
        """(n, dims, seed) for random chirality complexes with even dimension at most 40"""
        rng = np.random.default_rng(self.seed)
        cases = []
        for i in range(count):
            if i % 2 == 0:
                m = int(rng.integers(1, 21))
                cases.append((1, (m, m), self.seed * 100003 + i))
            else:
                a = int(rng.integers(1, 9))
                b = a + int(rng.integers(0, 9))
                cases.append((3, (a, b, b, a), self.seed * 100003 + i))
        return cases

    def check_witness(self, report: SuiteReport) -> None:
        """Scalar model d = i t: B = t, eta = 0, e^xi = t and the identity to rounding"""
        identity = report.prop("identity", 1e-14)
        eta_zero = report.prop("eta_zero", 0.0)
        exp_xi = report.prop("exp_xi_equals_t", 1e-14)
        for t in (0.5, 1.0, 3.0):
            tc, ch = scalar_witness(t)
            os = assemble(tc, ch)
            theta = choose_agmon(os.spectrum)
            identity.record(identity_residual(os, theta))
            eta_zero.record(abs(eta(os, theta).value))
            exp_xi.record(_relative(cmath.exp(xi(os, theta)), t))
        circle = report.prop("circle_z2_det", 1e-14)
        tc = twist(circle_cw(), circle_representation(2.0))
        os = assemble(tc, default_chirality(tc))
        circle.record(abs(graded_det(os, choose_agmon(os.spectrum)) - (-1j)))

    def check_identity(self, report: SuiteReport) -> None:
        """Det_gr = e^xi e^(-i pi eta) and |Det_gr| = T_RS e^(pi Im eta) on random complexes"""
        identity = report.prop("det_xi_eta", self.tolerance)
        modulus = report.prop("modulus_rs", self.tolerance)
        for n, dims, seed in self.random_cases(self._trials(200)):
            try:
                os = assemble(*random_chirality_complex(n, dims, seed))
                theta = choose_agmon(os.spectrum)
                identity.record(identity_residual(os, theta))
                modulus.record(modulus_residual(os, theta))
            except TorsionError as e:
                identity.fail(f"n={n} dims={dims} seed={seed}: {e.detail}")

    def check_angle_independence(self, report: SuiteReport) -> None:
        """Det_gr agrees at one angle per ray gap; zeta'(0) moves by 2 pi i Z between gaps"""
        result = report.prop("graded_det", self.tolerance)
        winding = report.prop("zeta_prime_winding", 1e-9)
        for n, dims, seed in self.random_cases(self._trials(200)):
            try:
                os = assemble(*random_chirality_complex(n, dims, seed))
                angles = admissible_angles(os.spectrum)
                values = [graded_det(os, theta) for theta in angles]
                result.record(max((_relative(a, b) for a, b in combinations(values, 2)), default=0.0))
                for spectrum in (os.plus_spectrum, os.minus_spectrum):
                    if len(spectrum) == 0:
                        continue
                    zetas = [zeta_prime_zero(spectrum, theta.theta) for theta in angles]
                    winding.record(max(_distance_to_winding(z - zetas[0]) for z in zetas))
            except TorsionError as e:
                result.fail(f"n={n} dims={dims} seed={seed}: {e.detail}")

    def check_hermitian(self, report: SuiteReport) -> None:
        """Self-adjoint witnesses: Im xi in pi Z, real eta, |Det_gr| = e^(Re xi), orthogonal splitting"""
        im_xi = report.prop("im_xi_in_pi_z", 1e-9)
        eta_real = report.prop("eta_real", 1e-12)
        modulus = report.prop("modulus_rs", self.tolerance)
        orthogonal = report.prop("orthogonal_projectors", 1e-8)
        for n, dims, seed in self.random_cases(self._trials(100)):
            try:
                os = assemble(*hermitian_chirality_complex(n, dims, seed))
                theta = choose_agmon(os.spectrum)
                im_xi.record(_distance_to_pi_multiple(xi(os, theta).imag))
                eta_real.record(abs(eta(os, theta).value.imag))
                det = graded_det(os, theta)
                modulus.record(abs(abs(det) - rs_torsion(os, theta)) / abs(det))
                p = os.projector_plus
                orthogonal.record(float(np.max(np.abs(p - p.conj().T))) if p.size else 0.0)
            except TorsionError as e:
                modulus.fail(f"n={n} dims={dims} seed={seed}: {e.detail}")

    def check_similarity(self, report: SuiteReport) -> None:
        """Transport by block isomorphisms leaves Det_gr, xi and eta unchanged"""
        det_prop = report.prop("graded_det", 1e-8)
        xi_prop = report.prop("xi", 1e-8)
        eta_prop = report.prop("eta", 1e-8)
        for n, dims, seed in self.random_cases(self._trials(50)):
            try:
                tc, ch = random_chirality_complex(n, dims, seed)
                rng = np.random.default_rng(seed + 1)
                frames = [random_well_conditioned(c, c, rng, TRANSPORT_CONDITION) for c in dims]
                os = assemble(tc, ch)
                moved = assemble(*transport(tc, ch, frames))
                theta = choose_agmon(os.spectrum)
                det_prop.record(_relative(graded_det(os, theta), graded_det(moved, theta)))
                xi_prop.record(abs(cmath.exp(xi(os, theta)) - cmath.exp(xi(moved, theta)))
                               / abs(cmath.exp(xi(os, theta))))
                eta_prop.record(abs(eta(os, theta).value - eta(moved, theta).value))
            except TorsionError as e:
                det_prop.fail(f"n={n} dims={dims} seed={seed}: {e.detail}")

    def check_circle(self, report: SuiteReport) -> None:
        """Tail-corrected truncations against the closed form; Hurwitz oracle self-check"""
        truncation = report.prop("truncation_n10000", 1e-6)
        for z in (-1.0, cmath.exp(2j * math.pi * 0.3), 1.2 * cmath.exp(2j * math.pi * 0.3)):
            truncation.record(truncation_convergence(CircleBundle(z), [10_000])[-1].error)
        value = report.prop("hurwitz_value", 1e-10)
        derivative = report.prop("hurwitz_derivative", 1e-10)
        for k in range(1, 10):
            value_gap, prime_gap = hurwitz_oracle_residuals(k / 10)
            value.record(value_gap)
            derivative.record(prime_gap)

    def check_eta_unitary(self, report: SuiteReport) -> None:
        """Spectral asymmetry 1 - 2a of the unitary circle z = exp(2 pi i a)"""
        asymmetry = report.prop("asymmetry", 1e-9)
        real = report.prop("eta_real", 1e-12)
        for k in range(1, 10):
            a = k / 10
            _, eta_value, _ = circle_closed_form(CircleBundle(cmath.exp(2j * math.pi * a)))
            asymmetry.record(abs(eta_value.asymmetry - (1 - 2 * a)))
            real.record(abs(eta_value.value.imag))

    def check_comparison(self, report: SuiteReport) -> None:
        """pi Im eta against the Arg pairing over the annulus, and vanishing on the unitary arc"""
        table = circle_sweep(annulus_grid(0.8, 1.25, 21, 21))
        eta_vs_arg = report.prop("eta_vs_arg_pairing", 1e-8)
        direct_vs_arg = report.prop("log_modulus_vs_arg_pairing", 1e-8)
        for row in table.rows:
            if row.computed:
                eta_vs_arg.record(abs(row.log_modulus_eta - row.log_modulus_arg))
                direct_vs_arg.record(abs(row.log_modulus - row.log_modulus_arg))
        unitary = report.prop("unitary_arc_vanishes", 1e-8)
        for row in circle_sweep(arc_grid(9)).rows:
            unitary.record(abs(row.log_modulus))

    def check_holomorphy(self, report: SuiteReport) -> None:
        """Observed Cauchy-Riemann order of alpha -> T_alpha and alpha -> T_comb on nested annuli"""
        r_min, r_max, radial, angular = 0.8, 1.2, 5, 32

        def analytic(alpha: complex) -> complex:
            return circle_closed_form(CircleBundle.from_monodromy(alpha)).graded_det

        def combinatorial(alpha: complex) -> complex:
            return comb_torsion(circle_cw(), circle_representation(alpha), LIFTED_CIRCLE).value

        for name, f in (("analytic", analytic), ("combinatorial", combinatorial)):
            result = report.prop(f"{name}_order_deficit", 0.2)
            residuals, orders = holomorphy_orders(f, r_min, r_max, radial, angular, 3, exclude=1.0)
            logger.info(f"Holomorphy {name}: residuals {residuals}, orders {orders}")
            result.record(max(0.0, 2.0 - min(orders)))

    def check_cheeger_muller(self, report: SuiteReport) -> None:
        """| |T| - |T_comb| | on the unitary arc and the closed-form lens modulus"""
        arc = report.prop("unitary_arc_modulus", 1e-6)
        for row in circle_sweep(arc_grid(9)).rows:
            if row.computed:
                arc.record(abs(abs(row.torsion) - abs(row.comb)))
            else:
                arc.fail(";".join(row.flags))
        lens = report.prop("lens_reidemeister_modulus", 1e-10)
        analytic = report.prop("lens_analytic_modulus", 1e-10)
        for p in (3, 5, 7):
            for k in range(1, p):
                row = lens_point(p, 1, k)
                if not row.computed:
                    lens.fail(";".join(row.flags))
                    continue
                lens.record(abs(abs(row.comb) - lens_reidemeister_modulus(p, 1, k)))
                analytic.record(abs(abs(row.torsion) - abs(row.comb)))

    def check_turaev(self, report: SuiteReport) -> None:
        """Euler lift changes scale by det rep(g)^((-1)^k); flipping gro negates"""
        lift = report.prop("euler_lift_law", 1e-10)
        flip = report.prop("orientation_flip", 1e-10)
        rng = np.random.default_rng(self.seed)
        for i in range(self._trials(50)):
            if i % 2 == 0:
                cw = circle_cw()
                alpha = complex(*rng.uniform(0.5, 1.5, 2))
                rep = circle_representation(alpha)
            else:
                p = int(rng.choice([3, 5, 7]))
                cw = lens_cw(p, 1)
                rep = character_representation(p, int(rng.integers(1, p)), cw.presentation)
            eu = EulerStructure.trivial(cw)
            cell = cw.all_cells()[int(rng.integers(len(cw.all_cells())))]
            power = int(rng.integers(-3, 4))
            word = f"t^{power}"
            try:
                base = comb_torsion(cw, rep, eu).value
                moved = comb_torsion(cw, rep, change_euler(eu, cell, word)).value
                factor = complex(np.linalg.det(rep.evaluate(word))) ** ((-1) ** cw.degree_of(cell))
                lift.record(_relative(moved, base * factor))
                flip.record(_relative(comb_torsion(cw, rep, flip_orientation(eu)).value, -base))
            except TorsionError as e:
                lift.fail(e.detail)

    def run_suite(self, name: str) -> SuiteReport:
        """Run one suite and return its report"""
        if name not in self.suites:
            raise ValidationError(f"Unknown suite {name!r}; choose from {', '.join(CHECK_SUITES)}")
        report = SuiteReport(name)

        @performance_monitor.measure_time
        def execute():
            self.suites[name](report)

        _, report.elapsed_ms = execute()
        status = "passed" if report.ok else "FAILED"
        logger.info(f"Suite {name} {status} ({len(report.properties)} properties, {report.elapsed_ms:.0f}ms)")
        return report

    def run(self, name: str) -> List[SuiteReport]:
        """Run ``name`` or every suite for ``all``"""
        if name == "all":
            return [self.run_suite(suite) for suite in self.suites]
        return [self.run_suite(name)]
