"""
Dense complex linear algebra with spectral-cut bookkeeping.

Branch convention: for a cut direction theta the argument of a nonzero
complex number is taken in the open interval (theta, theta + 2*pi), so that
positive reals keep argument 0 for every theta in (-pi, 0).
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.config.settings import (
    CLUSTER_TOLERANCE,
    CUT_TOLERANCE,
    RANK_TOLERANCE,
    SPLIT_REJECT_FACTOR,
)
from src.core.errors import (
    AssumptionViolation,
    NumericalError,
    OnCutError,
    SingularSpectrumError,
    SplittingError,
    ValidationError,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def as_complex_matrix(data, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    """Coerce ``data`` to a finite complex128 matrix, optionally checking its shape"""
    m = np.array(data, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ValidationError(f"Expected a matrix, got array of rank {m.ndim}")
    if rows is not None and m.shape[0] != rows or cols is not None and m.shape[1] != cols:
        raise ValidationError(f"Expected shape ({rows}, {cols}), got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("Matrix has non-finite entries")
    return m


def matrix_to_json(m: np.ndarray) -> List[List[List[float]]]:
    """Row-major list of [re, im] pairs"""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def matrix_from_json(rows: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    if len(rows) == 0:
        return np.zeros((0, 0), dtype=complex)
    data = [[complex(pair[0], pair[1]) for pair in row] for row in rows]
    return as_complex_matrix(data)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with algebraic multiplicities, sorted by (argument, modulus)"""

    items: Tuple[Tuple[complex, int], ...] = ()

    @classmethod
    def from_values(cls, values: Iterable[complex], tolerance: float = CLUSTER_TOLERANCE) -> "Spectrum":
        values = [complex(v) for v in values]
        if not values:
            return cls(())
        radius = max(abs(v) for v in values)
        scale = tolerance * radius if radius > 0 else tolerance
        clusters: List[List[complex]] = []
        for value in sorted(values, key=_sort_key):
            for cluster in clusters:
                if abs(np.mean(cluster) - value) <= scale:
                    cluster.append(value)
                    break
            else:
                clusters.append([value])
        items = [(complex(np.mean(c)), len(c)) for c in clusters]
        return cls(tuple(sorted(items, key=lambda item: _sort_key(item[0]))))

    @property
    def dimension(self) -> int:
        return sum(mult for _, mult in self.items)

    def values(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity"""
        return np.array([lam for lam, mult in self.items for _ in range(mult)], dtype=complex)

    def smallest_modulus(self) -> float:
        return min((abs(lam) for lam, _ in self.items), default=math.inf)

    def squared(self) -> "Spectrum":
        return Spectrum.from_values(self.values() ** 2)

    def __len__(self) -> int:
        return len(self.items)


def _sort_key(value: complex) -> Tuple[float, float]:
    return (round(cmath.phase(value), 12), abs(value))


@dataclass(frozen=True)
class AgmonAngle:
    """Spectral cut direction with its (AG1)/(AG2) status"""

    theta: float
    satisfies_ag1: bool
    satisfies_ag2: bool
    margin: float

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "ag1": self.satisfies_ag1,
            "ag2": self.satisfies_ag2,
            "margin": self.margin,
        }


def eigenvalues(m) -> Spectrum:
    """All eigenvalues of a square matrix, clustered into multiplicities.

    LAPACK performs the Hessenberg reduction and shifted QR sweeps; a
    convergence failure surfaces as a NumericalError.
    """
    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"Eigenvalues need a square matrix, got {m.shape}")
    if m.shape[0] == 0:
        return Spectrum(())
    try:
        values = scipy.linalg.eigvals(m, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Eigenvalue iteration failed for {m.shape} matrix: {e}")
    return Spectrum.from_values(values)


def _validate_theta(theta: float) -> None:
    if not -math.pi < theta < 0:
        raise ValidationError(f"Agmon angle must lie in (-pi, 0), got {theta}")


def cut_argument(lam: complex, cut: float, tolerance: float = CUT_TOLERANCE) -> float:
    """Argument of ``lam`` in (cut, cut + 2*pi); any real cut direction is allowed"""
    if lam == 0:
        raise SingularSpectrumError("Zero eigenvalue has no logarithm")
    delta = (cmath.phase(lam) - cut) % TWO_PI
    if delta < tolerance or TWO_PI - delta < tolerance:
        raise OnCutError(f"Eigenvalue {lam} lies on the cut at angle {cut}")
    return cut + delta


def branch_log(lam: complex, theta: float) -> complex:
    _validate_theta(theta)
    lam = complex(lam)
    return complex(math.log(abs(lam)) if lam != 0 else 0.0, cut_argument(lam, theta))


def log_det(spectrum: Spectrum, cut: float) -> complex:
    """Sum of m(lambda) * log(lambda) along the ray at angle ``cut``"""
    real_parts = []
    imag_parts = []
    for lam, mult in spectrum.items:
        if lam == 0:
            raise SingularSpectrumError("Spectrum contains a zero eigenvalue")
        real_parts.append(mult * math.log(abs(lam)))
        imag_parts.append(mult * cut_argument(lam, cut))
    return complex(math.fsum(real_parts), math.fsum(imag_parts))


def matrix_log_det(m: np.ndarray, cut: float) -> complex:
    """log det along the ray at angle ``cut`` for a square matrix.

    Modulus and phase come from the LU factorisation; the eigenvalue
    logarithms only pick the multiple of 2 pi i.
    """
    sign, log_abs = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(log_abs):
        raise SingularSpectrumError(f"Matrix of size {m.shape[0]} is singular")
    phase = cmath.phase(sign)
    branch = log_det(eigenvalues(m), cut).imag
    winding = round((branch - phase) / TWO_PI)
    return complex(log_abs, phase + TWO_PI * winding)


def zeta_prime_zero(s: Spectrum, theta: float) -> complex:
    """Finite-dimensional zeta'(0) = -sum m(lambda) log_theta(lambda)"""
    _validate_theta(theta)
    return -log_det(s, theta)


def spectral_counts(s: Spectrum, theta: float, tolerance: float = CUT_TOLERANCE) -> Tuple[int, int]:
    """Eigenvalue counts (m_plus, m_minus) on either side of the line through R_theta.

    m_plus counts arguments in (theta, theta + pi), m_minus those in
    (theta + pi, theta + 2*pi).
    """
    m_plus = m_minus = 0
    for lam, mult in s.items:
        delta = cut_argument(lam, theta, tolerance) - theta
        if abs(delta - math.pi) < tolerance:
            raise OnCutError(f"Eigenvalue {lam} lies on the ray R_(theta+pi)")
        if delta < math.pi:
            m_plus += mult
        else:
            m_minus += mult
    return m_plus, m_minus


def _angular_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _ray_margin(s: Spectrum, theta: float) -> float:
    """Distance from theta (and theta + pi) to the nearest eigenvalue ray"""
    margin = math.pi
    for lam, _ in s.items:
        phi = cmath.phase(lam)
        margin = min(margin, _angular_distance(phi, theta), _angular_distance(phi, theta + math.pi))
    return margin


def _ag_upper_bound(s: Spectrum) -> float:
    """Largest theta such that (AG2) holds on all of (-pi/2, bound)"""
    bound = 0.0
    for lam, _ in s.items:
        phi = cmath.phase(lam)
        if -math.pi / 2 < phi < 0:
            bound = min(bound, phi)
        elif math.pi / 2 < phi < math.pi:
            bound = min(bound, phi - math.pi)
    return bound


def _critical_angles(s: Spectrum, lo: float, hi: float) -> List[float]:
    """Sorted eigenvalue rays and opposite rays inside (lo, hi), with both ends"""
    critical = {lo, hi}
    for lam, _ in s.items:
        for base in (cmath.phase(lam), cmath.phase(lam) - math.pi):
            for shift in (-TWO_PI, 0.0, TWO_PI):
                angle = base + shift
                if lo < angle < hi:
                    critical.add(angle)
    return sorted(critical)


def _best_in_interval(s: Spectrum, lo: float, hi: float) -> float:
    """Midpoint of the widest gap between critical angles inside (lo, hi)"""
    points = _critical_angles(s, lo, hi)
    gaps = [(b - a, a, b) for a, b in zip(points, points[1:])]
    width, a, b = max(gaps, key=lambda g: (g[0], -g[1]))
    return 0.5 * (a + b)


def _ag_flags(s: Spectrum, theta: float) -> Tuple[bool, bool]:
    ag1 = -math.pi / 2 < theta < 0
    ag2 = ag1 and theta < _ag_upper_bound(s)
    return ag1, ag2


def choose_agmon(s: Spectrum) -> AgmonAngle:
    """Pick the Agmon angle of maximal margin, preferring (AG1)+(AG2)"""
    if len(s) == 0:
        raise ValidationError("Cannot choose an Agmon angle for an empty spectrum")
    if s.smallest_modulus() == 0:
        raise AssumptionViolation("II", "spectrum contains a zero eigenvalue")
    hi = _ag_upper_bound(s)
    lo = -math.pi / 2
    if hi - lo > 2 * CUT_TOLERANCE:
        theta = _best_in_interval(s, lo, hi)
        angle = AgmonAngle(theta, True, True, _ray_margin(s, theta))
    else:
        theta = _best_in_interval(s, -math.pi, 0.0)
        angle = AgmonAngle(theta, False, False, _ray_margin(s, theta))
        logger.warning(f"No angle satisfies (AG1)+(AG2); falling back to theta={theta:.6f}")
    if angle.margin <= CUT_TOLERANCE:
        raise OnCutError("Spectrum leaves no admissible Agmon angle")
    logger.debug(f"Agmon angle theta={angle.theta:.6f} margin={angle.margin:.3e}")
    return angle


def agmon_angle_at(s: Spectrum, theta: float) -> AgmonAngle:
    """Wrap a user supplied angle after checking it is admissible"""
    _validate_theta(theta)
    margin = _ray_margin(s, theta) if len(s) else math.pi
    if margin <= CUT_TOLERANCE:
        raise OnCutError(f"theta={theta} lies on an eigenvalue ray")
    ag1, ag2 = _ag_flags(s, theta)
    return AgmonAngle(theta, ag1, ag2, margin)


def admissible_angles(s: Spectrum, min_gap: float = 1e-6) -> List[AgmonAngle]:
    """One admissible angle per gap between eigenvalue rays in (-pi, 0).

    Each angle is the midpoint of its gap, so consecutive angles are
    separated by at least one ray of the spectrum or of its negative.
    Gaps narrower than ``min_gap`` are skipped.
    """
    if len(s) == 0:
        raise ValidationError("Cannot choose Agmon angles for an empty spectrum")
    if s.smallest_modulus() == 0:
        raise AssumptionViolation("II", "spectrum contains a zero eigenvalue")
    points = _critical_angles(s, -math.pi, 0.0)
    angles = [agmon_angle_at(s, 0.5 * (a + b)) for a, b in zip(points, points[1:]) if b - a > min_gap]
    if not angles:
        raise OnCutError("Spectrum leaves no admissible Agmon angle")
    return angles


def singular_values(m: np.ndarray) -> np.ndarray:
    if m.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(m)


def numerical_rank(m: np.ndarray, tolerance: float = RANK_TOLERANCE) -> int:
    """Rank with the cut at ``tolerance`` times max(operator norm, 1)"""
    sv = singular_values(m)
    if sv.size == 0:
        return 0
    return int(np.sum(sv > tolerance * max(sv[0], 1.0)))


def kernel_basis(m: np.ndarray, tolerance: float = RANK_TOLERANCE,
                 reject_factor: float = SPLIT_REJECT_FACTOR) -> np.ndarray:
    """Orthonormal kernel basis; refuses ranks that sit near the cut.

    Singular values inside [cut / reject_factor, cut * reject_factor] make the
    rank ambiguous and raise a SplittingError instead of being guessed.
    """
    rows, cols = m.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=complex)
    if rows == 0 or not np.any(m):
        return np.eye(cols, dtype=complex)
    u, sv, vh = scipy.linalg.svd(m)
    cut = tolerance * max(sv[0], 1.0)
    ambiguous = (sv > cut / reject_factor) & (sv < cut * reject_factor)
    if np.any(ambiguous):
        raise SplittingError(
            f"Numerical rank ambiguous: singular values {sv[ambiguous]} near cut {cut:.3e}")
    rank = int(np.sum(sv > cut))
    return vh[rank:].conj().T
