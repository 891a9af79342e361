"""
Exactly solvable models and parameter sweeps.

The continuum circle model is the operator -i d/dx on sections of the flat
line bundle with Fourier twist z = exp(2 pi i w): its spectrum is n + w,
n in Z, and its parallel transport around the loop is alpha = 1/z. Closed
forms come from the Hurwitz zeta function through Lerch's formula.
"""
import cmath
import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import mpmath
import numpy as np

from src.config.settings import ADMISSIBILITY_FLOOR, DEFAULT_JOBS
from src.core.comb_torsion import EulerStructure, comb_torsion, lens_reidemeister_modulus
from src.core.complexes import (
    Representation,
    character_representation,
    circle_cw,
    circle_representation,
    default_chirality,
    lens_cw,
    twist,
)
from src.core.errors import AssumptionViolation, OnCutError, TorsionError, ValidationError
from src.core.linalg import Spectrum, branch_log, choose_agmon
from src.core.oddsig import EtaValue, analytic_report, assemble
from src.utils.helpers import number_formatter

logger = logging.getLogger(__name__)

WORKING_DPS = 30
LIFTED_CIRCLE = EulerStructure({"e0": "1", "e1": "t"})


@dataclass(frozen=True)
class CircleBundle:
    """Flat line bundle on the circle with Fourier twist ``z``"""

    z: complex

    def __post_init__(self):
        if self.z == 0:
            raise ValidationError("Holonomy must be nonzero")

    @classmethod
    def from_monodromy(cls, alpha: complex) -> "CircleBundle":
        if alpha == 0:
            raise ValidationError("Monodromy must be nonzero")
        return cls(1.0 / complex(alpha))

    @property
    def monodromy(self) -> complex:
        return 1.0 / complex(self.z)

    @property
    def w(self) -> complex:
        return cmath.log(self.z) / (2j * math.pi)

    @property
    def a(self) -> float:
        return self.w.real % 1.0

    @property
    def b(self) -> float:
        return self.w.imag

    def smallest_eigenvalue_modulus(self) -> float:
        return min(abs(complex(self.a, self.b)), abs(complex(self.a - 1.0, self.b)))

    def require_acyclic(self) -> None:
        if self.smallest_eigenvalue_modulus() == 0:
            raise AssumptionViolation("II", "z = 1 leaves a zero mode", 0.0)

    def representative(self, theta: float) -> complex:
        """Shift of w that is the first eigenvalue n + w in the half (theta, theta + pi)"""
        boundary = self.b * math.cos(theta) / math.sin(theta) - self.w.real
        shift = math.floor(boundary) + 1
        w0 = self.w + shift
        if abs(w0.real - 1.0 - (self.b * math.cos(theta) / math.sin(theta))) < 1e-14:
            raise OnCutError(f"Eigenvalue {w0 - 1} lies on the line through R_theta")
        return w0

    def representation(self) -> Representation:
        return circle_representation(self.monodromy)

    def to_dict(self) -> dict:
        return {"z": [self.z.real, self.z.imag]}


class ClosedForm(NamedTuple):
    graded_det: complex
    eta: EtaValue
    xi: complex


class TruncationRow(NamedTuple):
    n: int
    error: float


def circle_spectrum_truncated(cb: CircleBundle, n: int) -> np.ndarray:
    """Eigenvalues k + a + i b for |k| <= n, with a in [0, 1)"""
    cb.require_acyclic()
    if n < 1:
        raise ValidationError(f"Truncation order must be at least 1, got {n}")
    base = complex(cb.a, cb.b)
    return np.array([k + base for k in range(-n, n + 1)], dtype=complex)


def default_theta(cb: CircleBundle) -> float:
    """Agmon angle of maximal margin for the low modes of the circle operator"""
    return choose_agmon(Spectrum.from_values(circle_spectrum_truncated(cb, 8))).theta


def _hurwitz_prime_tail(x) -> mpmath.mpc:
    """zeta_H'(0, x), minus the regularized log-determinant of the modes k + x, k >= 0"""
    return mpmath.zeta(0, x, 1)


def circle_log_det(cb: CircleBundle, theta: Optional[float] = None) -> complex:
    """log Det_theta of the full circle operator: log 2 pi - log G(w0) - log G(1 - w0) + i pi (w0 - 1/2)"""
    cb.require_acyclic()
    theta = default_theta(cb) if theta is None else theta
    w0 = cb.representative(theta)
    with mpmath.workdps(WORKING_DPS):
        w = mpmath.mpc(w0.real, w0.imag)
        value = (mpmath.log(2 * mpmath.pi) - mpmath.loggamma(w) - mpmath.loggamma(1 - w)
                 + 1j * mpmath.pi * (w - mpmath.mpf(1) / 2))
        return complex(value)


def circle_closed_form(cb: CircleBundle, theta: Optional[float] = None) -> ClosedForm:
    """Regularized Det_gr, eta and xi of the untruncated circle operator.

    B_minus is empty on the circle, so Det_gr = Det_theta(B) = 1 - z. The
    eta value is (zeta_+(0) - zeta_-(0) - zeta_B(0)) / 2 = 1/2 - w0, and its
    asymmetry 1 - 2 w0 equals 1 - 2a on the unitary circle.
    """
    cb.require_acyclic()
    theta = default_theta(cb) if theta is None else theta
    w0 = cb.representative(theta)
    with mpmath.workdps(WORKING_DPS):
        w = mpmath.mpc(w0.real, w0.imag)
        xi_value = complex(mpmath.log(2 * mpmath.pi) - mpmath.loggamma(w) - mpmath.loggamma(1 - w))
    log_det = circle_log_det(cb, theta)
    eta_value = EtaValue(value=0.5 - w0, asymmetry=1.0 - 2.0 * w0, regularized=True)
    return ClosedForm(cmath.exp(log_det), eta_value, xi_value)


def truncation_convergence(cb: CircleBundle, n_list: Sequence[int],
                           theta: Optional[float] = None) -> List[TruncationRow]:
    """Tail-corrected truncated log-determinants against the closed form.

    The error at order N is |exp(S_N + tails - log Det) - 1|, where S_N sums
    branch logarithms of n + w0 over |n| <= N and the tails are the Hurwitz
    derivatives of the dropped modes.
    """
    cb.require_acyclic()
    theta = default_theta(cb) if theta is None else theta
    w0 = cb.representative(theta)
    target = circle_log_det(cb, theta)
    rows = []
    for n in n_list:
        if n < 1:
            raise ValidationError(f"Truncation order must be at least 1, got {n}")
        logs = [branch_log(k + w0, theta) for k in range(-n, n + 1)]
        partial = complex(math.fsum(v.real for v in logs), math.fsum(v.imag for v in logs))
        with mpmath.workdps(WORKING_DPS):
            w = mpmath.mpc(w0.real, w0.imag)
            upper = n + 1 + w
            lower = n + 1 - w
            tails = (-_hurwitz_prime_tail(upper) - _hurwitz_prime_tail(lower)
                     + 1j * mpmath.pi * (mpmath.mpf(1) / 2 - lower))
            delta = mpmath.mpc(partial) + tails - mpmath.mpc(target)
            error = float(abs(mpmath.exp(delta) - 1))
        logger.debug(f"Truncation N={n} error={error:.3e}")
        rows.append(TruncationRow(n, error))
    return rows


def hurwitz_zeta_em(s, a, terms: int = 20, order: int = 10) -> mpmath.mpc:
    """Hurwitz zeta by Euler-Maclaurin summation with ``terms`` explicit terms"""
    with mpmath.workdps(max(WORKING_DPS, mpmath.mp.dps)):
        s = mpmath.mpmathify(s)
        a = mpmath.mpmathify(a)
        x = terms + a
        total = mpmath.fsum((k + a) ** (-s) for k in range(terms))
        total += x ** (1 - s) / (s - 1) + x ** (-s) / 2
        for j in range(1, order + 1):
            total += (mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j)
                      * mpmath.rf(s, 2 * j - 1) * x ** (-s - 2 * j + 1))
        return total


def hurwitz_zeta_prime_em(a, terms: int = 20, order: int = 10) -> mpmath.mpc:
    """d/ds zeta_H(s, a) at s = 0 by differentiating the Euler-Maclaurin sum"""
    with mpmath.workdps(WORKING_DPS):
        return mpmath.diff(lambda s: hurwitz_zeta_em(s, a, terms, order), 0)


def hurwitz_oracle_residuals(a) -> Tuple[float, float]:
    """Gaps of the closed forms zeta_H(0, a) = 1/2 - a and zeta_H'(0, a) = log G(a) - log(2 pi)/2"""
    with mpmath.workdps(WORKING_DPS):
        value_gap = abs(hurwitz_zeta_em(0, a) - (mpmath.mpf(1) / 2 - a))
        prime_gap = abs(hurwitz_zeta_prime_em(a) - (mpmath.loggamma(a) - mpmath.log(2 * mpmath.pi) / 2))
        return float(value_gap), float(prime_gap)


@dataclass(frozen=True)
class ArgClass:
    """Arg(g) = log det rep(g) / (2 pi i) mod Z, per generator"""

    values: Dict[str, complex]

    def to_dict(self) -> dict:
        return {gen: [v.real, v.imag] for gen, v in self.values.items()}


def arg_class(rep: Representation) -> ArgClass:
    values = {}
    for gen, image in rep.images.items():
        arg = cmath.log(complex(np.linalg.det(image))) / (2j * math.pi)
        values[gen] = complex(arg.real % 1.0, arg.imag)
    return ArgClass(values)


def arg_pairing(rep: Representation, coefficients: Mapping[str, float]) -> float:
    """pi * sum_g c(g) Im Arg(g) with user supplied L-class coefficients"""
    missing = set(rep.presentation.generators) - set(coefficients)
    if missing:
        raise ValidationError(f"Missing L-class coefficients for {sorted(missing)}")
    args = arg_class(rep).values
    return math.pi * math.fsum(float(coefficients[g]) * args[g].imag for g in rep.presentation.generators)


@dataclass(frozen=True)
class CRResidual:
    field: np.ndarray
    max_norm: float
    l2_norm: float

    def to_dict(self) -> dict:
        return {"max": self.max_norm, "l2": self.l2_norm}


def _check_samples(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim != 2 or min(samples.shape) < 3:
        raise ValidationError(f"Cauchy-Riemann test needs at least a 3x3 grid, got {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("Samples contain non-finite values")
    return samples


def cr_residual(samples: np.ndarray, h: float) -> CRResidual:
    """Central-difference d/dz-bar = (f_x + i f_y) / 2 on interior nodes.

    ``samples[row, col]`` is taken at x = x0 + col * h, y = y0 + row * h.
    """
    f = _check_samples(samples)
    f_x = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * h)
    f_y = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * h)
    residual = 0.5 * (f_x + 1j * f_y)
    return CRResidual(residual, float(np.max(np.abs(residual))),
                      float(h * np.sqrt(np.sum(np.abs(residual) ** 2))))


def polar_cr_residual(samples: np.ndarray, radii: np.ndarray, angles: np.ndarray) -> CRResidual:
    """d/dz-bar = e^(i phi) (f_r + i f_phi / r) / 2 on a periodic polar grid ``samples[radius, angle]``"""
    f = _check_samples(samples)
    radii = np.asarray(radii, dtype=float)
    step = angles[1] - angles[0]
    h_minus = (radii[1:-1] - radii[:-2])[:, None]
    h_plus = (radii[2:] - radii[1:-1])[:, None]
    f_r = (h_minus ** 2 * f[2:] - h_plus ** 2 * f[:-2] + (h_plus ** 2 - h_minus ** 2) * f[1:-1]) / (
        h_plus * h_minus * (h_plus + h_minus))
    f_phi = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1))[1:-1] / (2 * step)
    residual = 0.5 * np.exp(1j * angles)[None, :] * (f_r + 1j * f_phi / radii[1:-1, None])
    cell = np.sqrt(np.mean(h_plus * h_minus) * step)
    return CRResidual(residual, float(np.max(np.abs(residual))),
                      float(cell * np.sqrt(np.sum(np.abs(residual) ** 2))))


def convergence_order(residuals: Sequence[float], ratio: float = 2.0) -> List[float]:
    """Observed orders log(r_i / r_(i+1)) / log(ratio) between successive refinements"""
    if len(residuals) < 2:
        raise ValidationError("Need at least two residuals to measure an order")
    return [math.log(r0 / r1) / math.log(ratio) for r0, r1 in zip(residuals, residuals[1:])]


def holomorphy_orders(f: Callable[[complex], complex], r_min: float, r_max: float,
                      radial: int, angular: int, refinements: int = 3,
                      exclude: Optional[complex] = None) -> Tuple[List[float], List[float]]:
    """Polar Cauchy-Riemann residuals of ``f`` on nested annuli and the observed orders.

    Level l has (radial - 1) * 2^l radial intervals and angular * 2^l angles,
    so both spacings halve between levels. A grid node within ADMISSIBILITY_FLOOR of
    ``exclude`` is a ValidationError.
    """
    if refinements < 2:
        raise ValidationError("Need at least two refinements to measure an order")
    residuals = []
    for level in range(refinements):
        grid = annulus_grid(r_min, r_max, (radial - 1) * 2 ** level + 1, angular * 2 ** level)
        if exclude is not None and min(abs(z - exclude) for z in grid.points) < ADMISSIBILITY_FLOOR:
            raise ValidationError(f"Annulus level {level} passes through the excluded point {exclude}")
        values = np.array([f(z) for z in grid.points], dtype=complex).reshape(grid.shape)
        residual = polar_cr_residual(values, np.array(grid.radii), np.array(grid.angles))
        logger.debug(f"Annulus level {level} {grid.shape}: max residual {residual.max_norm:.3e}")
        residuals.append(residual.max_norm)
    return residuals, convergence_order(residuals)


@dataclass(frozen=True)
class Grid:
    kind: str
    points: Tuple[complex, ...]
    shape: Tuple[int, ...]
    radii: Optional[Tuple[float, ...]] = None
    angles: Optional[Tuple[float, ...]] = None
    step: Optional[float] = None


def square_grid(center: complex, half_width: float, points: int) -> Tuple[np.ndarray, float]:
    """Square lattice ``grid[row, col] = center + x_col + i y_row`` and its spacing"""
    if points < 1:
        raise ValidationError("Empty grid")
    if points == 1:
        return np.array([[complex(center)]]), 0.0
    axis = np.linspace(-half_width, half_width, points)
    h = float(axis[1] - axis[0])
    return complex(center) + axis[None, :] + 1j * axis[:, None], h


def annulus_grid(r_min: float, r_max: float, radial: int, angular: int) -> Grid:
    """Geometric radii and uniform angles in [0, 2 pi)"""
    if radial < 1 or angular < 1:
        raise ValidationError("Empty grid")
    if not 0 < r_min <= r_max:
        raise ValidationError(f"Need 0 < r_min <= r_max, got ({r_min}, {r_max})")
    radii = np.geomspace(r_min, r_max, radial)
    angles = 2 * math.pi * np.arange(angular) / angular
    points = tuple(complex(r * cmath.exp(1j * phi)) for r in radii for phi in angles)
    return Grid("annulus", points, (radial, angular), tuple(radii), tuple(angles))


def arc_grid(points: int) -> Grid:
    """Unitary monodromies exp(2 pi i a) with a = k / (points + 1), k = 1..points"""
    if points < 1:
        raise ValidationError("Empty grid")
    values = tuple(cmath.exp(2j * math.pi * k / (points + 1)) for k in range(1, points + 1))
    return Grid("arc", values, (points,))


def square_family_grid(center: complex, half_width: float, points: int) -> Grid:
    grid, h = square_grid(center, half_width, points)
    return Grid("square", tuple(complex(v) for v in grid.ravel()), grid.shape, step=h)


def _pair(value: Optional[complex]) -> Optional[List[float]]:
    return None if value is None else [value.real, value.imag]


@dataclass
class SweepRow:
    param: complex
    torsion: Optional[complex] = None
    comb: Optional[complex] = None
    rs_torsion: Optional[float] = None
    eta: Optional[complex] = None
    ratio: Optional[float] = None
    log_modulus: Optional[float] = None
    log_modulus_eta: Optional[float] = None
    log_modulus_arg: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    @property
    def computed(self) -> bool:
        return self.torsion is not None

    def csv_fields(self) -> List[str]:
        return [
            number_formatter.real(self.param.real), number_formatter.real(self.param.imag),
            number_formatter.real(None if self.torsion is None else self.torsion.real),
            number_formatter.real(None if self.torsion is None else self.torsion.imag),
            number_formatter.real(self.rs_torsion),
            number_formatter.real(None if self.eta is None else self.eta.real),
            number_formatter.real(None if self.eta is None else self.eta.imag),
            number_formatter.real(self.ratio),
            ";".join(self.flags),
        ]

    def to_dict(self) -> dict:
        return {
            "param": _pair(self.param),
            "torsion": _pair(self.torsion),
            "comb": _pair(self.comb),
            "rs_torsion": self.rs_torsion,
            "eta": _pair(self.eta),
            "ratio": self.ratio,
            "log_modulus": self.log_modulus,
            "log_modulus_eta": self.log_modulus_eta,
            "log_modulus_arg": self.log_modulus_arg,
            "flags": list(self.flags),
        }


CSV_COLUMNS = ["re(param)", "im(param)", "re(T)", "im(T)", "T_RS", "re(eta)", "im(eta)", "|ratio|", "flags"]


@dataclass
class SweepTable:
    family: str
    grid: Grid
    rows: List[SweepRow]

    def summary(self) -> dict:
        computed = [r for r in self.rows if r.computed]
        result = {
            "family": self.family,
            "grid": self.grid.kind,
            "points": len(self.rows),
            "computed": len(computed),
            "flagged": len(self.rows) - len(computed),
        }
        ratios = [r.ratio for r in computed if r.ratio is not None]
        result["max_ratio_deviation"] = max((abs(x - ratios[0]) for x in ratios), default=None)
        gaps = [abs(r.log_modulus_eta - r.log_modulus_arg) for r in computed
                if r.log_modulus_eta is not None and r.log_modulus_arg is not None]
        result["max_comparison_gap"] = max(gaps, default=None)
        unitary = [abs(abs(r.torsion) - r.rs_torsion) for r in computed if abs(abs(r.param) - 1.0) < 1e-12]
        result["max_unitary_modulus_gap"] = max(unitary, default=None)
        result["cr_residual"] = self.cr_summary()
        return result

    def cr_summary(self) -> Optional[dict]:
        if self.grid.kind not in ("square", "annulus") or any(not r.computed or r.comb is None for r in self.rows):
            return None
        torsion = np.array([r.torsion for r in self.rows]).reshape(self.grid.shape)
        comb = np.array([r.comb for r in self.rows]).reshape(self.grid.shape)
        if self.grid.kind == "square":
            residuals = [cr_residual(values, self.grid.step) for values in (torsion, comb)]
        else:
            radii, angles = np.array(self.grid.radii), np.array(self.grid.angles)
            if len(radii) < 3 or len(angles) < 3:
                return None
            residuals = [polar_cr_residual(values, radii, angles) for values in (torsion, comb)]
        return {"torsion": residuals[0].to_dict(), "comb": residuals[1].to_dict()}

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = {"summary": self.summary(), "rows": [r.to_dict() for r in self.rows]}
        return json.dumps(payload, indent=2)


def circle_point(alpha: complex) -> SweepRow:
    """Continuum torsion, lifted combinatorial torsion and comparison data at monodromy ``alpha``"""
    row = SweepRow(complex(alpha))
    try:
        cb = CircleBundle.from_monodromy(alpha)
        if cb.smallest_eigenvalue_modulus() < ADMISSIBILITY_FLOOR:
            row.flags.append("inadmissible")
            return row
        det, eta_value, xi_value = circle_closed_form(cb)
        comb = comb_torsion(circle_cw(), cb.representation(), LIFTED_CIRCLE).value
        rs = math.exp(xi_value.real)
        row.torsion, row.comb, row.rs_torsion, row.eta = det, comb, rs, eta_value.value
        row.ratio = abs(det / comb)
        row.log_modulus = math.log(abs(det)) - xi_value.real
        row.log_modulus_eta = math.pi * eta_value.value.imag
        row.log_modulus_arg = arg_pairing(cb.representation(), {"t": 1})
    except TorsionError as e:
        logger.debug(f"Sweep point {alpha} failed: {e.detail}")
        row.flags.append(type(e).__name__)
    return row


def lens_point(p: int, q: int, k: int) -> SweepRow:
    """Finite lens model with the character k: refined torsion, Turaev torsion and closed-form modulus"""
    zeta = cmath.exp(2j * math.pi * k / p)
    row = SweepRow(zeta)
    try:
        cw = lens_cw(p, q)
        rep = character_representation(p, k, cw.presentation)
        tc = twist(cw, rep)
        os = assemble(tc, default_chirality(tc))
        if os.spectrum.smallest_modulus() < ADMISSIBILITY_FLOOR:
            row.flags.append("inadmissible")
            return row
        report = analytic_report(os, choose_agmon(os.spectrum), rank_e=1, l_integral=0)
        comb = comb_torsion(cw, rep, EulerStructure.trivial(cw)).value
        row.torsion, row.comb, row.rs_torsion = report.torsion.value, comb, report.rs_torsion
        row.eta = report.eta.value
        row.ratio = abs(report.torsion.value / comb)
        row.log_modulus = math.log(abs(report.torsion.value)) - math.log(report.rs_torsion)
        row.log_modulus_eta = math.pi * report.eta.value.imag
        row.log_modulus_arg = arg_pairing(rep, {"t": 0})
        if abs(abs(comb) - lens_reidemeister_modulus(p, q, k)) > 1e-10:
            row.flags.append("modulus-mismatch")
    except TorsionError as e:
        logger.debug(f"Lens point L({p},{q}) k={k} failed: {e.detail}")
        row.flags.append(type(e).__name__)
    return row


def sweep(family: str, grid: Grid, evaluate: Callable[[complex], SweepRow],
          jobs: int = DEFAULT_JOBS) -> SweepTable:
    """Evaluate every grid point in parallel; rows keep grid order"""
    if not grid.points:
        raise ValidationError("Empty grid")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        rows = list(executor.map(evaluate, grid.points))
    flagged = sum(1 for r in rows if not r.computed)
    if flagged:
        logger.warning(f"{flagged} of {len(rows)} grid points flagged")
    logger.info(f"Swept {family} over {len(rows)} {grid.kind} points")
    return SweepTable(family, grid, rows)


def circle_sweep(grid: Grid, jobs: int = DEFAULT_JOBS) -> SweepTable:
    return sweep("circle", grid, circle_point, jobs)


def lens_family_sweep(p: int, q: int, jobs: int = DEFAULT_JOBS) -> SweepTable:
    """All nontrivial characters t -> exp(2 pi i k / p), k = 1..p-1, of L(p, q)"""
    lens_cw(p, q)
    ks = list(range(1, p))
    grid = Grid("characters", tuple(cmath.exp(2j * math.pi * k / p) for k in ks), (len(ks),))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        rows = list(executor.map(lambda k: lens_point(p, q, k), ks))
    logger.info(f"Swept L({p},{q}) over {len(rows)} characters")
    return SweepTable(f"lens({p},{q})", grid, rows)
