"""
Odd signature operator of a complex with chirality, its +/- splitting and
the spectral invariants built from it: graded determinant, xi, eta,
Ray-Singer and refined analytic torsion.

Sign conventions are frozen on the scalar model d = i t, Gamma = 1, where
B = t, xi = log t, eta = 0 and the graded determinant is t.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from src.config.settings import RANK_TOLERANCE
from src.core.complexes import Chirality, TwistedComplex, require_acyclic
from src.core.errors import (
    AssumptionViolation,
    DegenerateBasisError,
    SplittingError,
    ValidationError,
)
from src.core.linalg import (
    AgmonAngle,
    Spectrum,
    eigenvalues,
    kernel_basis,
    matrix_log_det,
    singular_values,
    spectral_counts,
    zeta_prime_zero,
)

logger = logging.getLogger(__name__)

Rational = Union[int, float, Fraction]


class Ambiguity(str, Enum):
    EXACT = "exact"
    SIGN = "sign"
    FOURTH_ROOTS = "fourth_roots"


class Provenance(str, Enum):
    ANALYTIC = "analytic"
    COMBINATORIAL = "combinatorial"
    ORACLE = "oracle"


@dataclass(frozen=True, eq=False)
class OddSignature:
    """B_even on the even cochains together with its invariant splitting"""

    n: int
    even_degrees: Tuple[int, ...]
    b_even: np.ndarray
    plus_bases: Dict[int, np.ndarray]
    minus_bases: Dict[int, np.ndarray]
    projector_plus: np.ndarray
    projector_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    gamma_d: Dict[int, np.ndarray]
    spectrum: Spectrum
    plus_spectrum: Spectrum
    minus_spectrum: Spectrum

    @property
    def r(self) -> int:
        return (self.n + 1) // 2

    @property
    def dimension(self) -> int:
        return self.b_even.shape[0]

    def is_self_adjoint(self, tolerance: float = 1e-10) -> bool:
        b = self.b_even
        return b.size == 0 or np.max(np.abs(b - b.conj().T)) <= tolerance * max(1.0, np.linalg.norm(b))


@dataclass(frozen=True)
class EtaValue:
    """eta = (asymmetry - zeta_B(0)) / 2; counting data only in finite dimensions"""

    value: complex
    asymmetry: complex
    m_plus: Optional[int] = None
    m_minus: Optional[int] = None
    regularized: bool = False

    def phase_factor(self) -> complex:
        return cmath.exp(-1j * math.pi * self.value)

    def to_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "asymmetry": [self.asymmetry.real, self.asymmetry.imag],
            "m_plus": self.m_plus,
            "m_minus": self.m_minus,
            "regularized": self.regularized,
        }


@dataclass(frozen=True)
class TorsionValue:
    value: complex
    ambiguity: Ambiguity
    provenance: Provenance
    rank_e: Optional[int] = None

    def __post_init__(self):
        if self.value == 0:
            raise ValidationError("Torsion value must be nonzero")

    def to_dict(self) -> dict:
        payload = {
            "value": [self.value.real, self.value.imag],
            "ambiguity": self.ambiguity.value,
            "provenance": self.provenance.value,
        }
        if self.ambiguity is Ambiguity.FOURTH_ROOTS:
            payload["rank_e"] = self.rank_e
        return payload


@dataclass(frozen=True)
class AnalyticReport:
    theta: AgmonAngle
    graded_det: complex
    xi: complex
    eta: EtaValue
    rs_torsion: float
    torsion: TorsionValue
    dims: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.to_dict(),
            "graded_det": [self.graded_det.real, self.graded_det.imag],
            "xi": [self.xi.real, self.xi.imag],
            "eta": self.eta.to_dict(),
            "rs_torsion": self.rs_torsion,
            "torsion": self.torsion.to_dict(),
            "dims": self.dims,
        }


def _coefficient(n: int, p: int) -> complex:
    r = (n + 1) // 2
    return (1j ** r) * (-1) ** (p + 1)


def _assemble_matrix(tc: TwistedComplex, ch: Chirality) -> Tuple[np.ndarray, Tuple[int, ...], Dict[int, int]]:
    """i^r (-1)^(p+1) (Gamma d - d Gamma) on the direct sum of C^(2p)"""
    n = tc.n
    even = tuple(range(0, n + 1, 2))
    offsets, total = {}, 0
    for k in even:
        offsets[k] = total
        total += tc.dims[k]
    b = np.zeros((total, total), dtype=complex)
    for k in even:
        p = k // 2
        c = _coefficient(n, p)
        cols = slice(offsets[k], offsets[k] + tc.dims[k])
        target = n - k - 1
        block = ch[k + 1] @ tc.d(k)
        b[offsets[target]:offsets[target] + tc.dims[target], cols] += c * block
        target = n - k + 1
        if target <= n - 1:
            block = tc.d(n - k) @ ch[k]
            b[offsets[target]:offsets[target] + tc.dims[target], cols] -= c * block
    return b, even, offsets


def _check_direct_sum(k: int, v: np.ndarray, w: np.ndarray, dim: int) -> None:
    if v.shape[1] + w.shape[1] != dim:
        raise SplittingError(
            f"Omega^{k}_+ and Omega^{k}_- have dimensions {v.shape[1]} + {w.shape[1]} != {dim}")
    if dim == 0:
        return
    sv = singular_values(np.hstack([v, w]))
    if sv[-1] < RANK_TOLERANCE * sv[0]:
        raise SplittingError(f"Omega^{k}_+ and Omega^{k}_- do not span C^{k} (sigma_min={sv[-1]:.3e})")


def _restrict(op: np.ndarray, basis: np.ndarray, label: str) -> np.ndarray:
    """Matrix of ``op`` on the invariant subspace spanned by the orthonormal ``basis``"""
    if basis.shape[1] == 0:
        return np.zeros((0, 0), dtype=complex)
    restricted = basis.conj().T @ op @ basis
    residual = np.linalg.norm(op @ basis - basis @ restricted)
    if residual > 1e-8 * max(1.0, np.linalg.norm(op)):
        raise SplittingError(f"{label} is not invariant (residual {residual:.3e})")
    return restricted


def assemble(tc: TwistedComplex, ch: Chirality) -> OddSignature:
    """Odd signature operator with its splitting; checks Assumptions II and I"""
    n = tc.n
    if n % 2 == 0:
        raise ValidationError(f"The odd signature operator needs odd n, got {n}")
    if ch.n != n:
        raise ValidationError("Chirality and complex have different top degree")
    for k in range(n + 1):
        if ch[k].shape != (tc.dims[n - k], tc.dims[k]):
            raise ValidationError(f"Gamma_{k} has shape {ch[k].shape}, expected {(tc.dims[n - k], tc.dims[k])}")

    b, even, offsets = _assemble_matrix(tc, ch)
    if b.size:
        sv = singular_values(b)
        if sv[-1] <= RANK_TOLERANCE * max(sv[0], 1.0):
            raise AssumptionViolation("II", "B_even is not invertible", float(sv[-1]))
    require_acyclic(tc)

    plus_bases, minus_bases, gamma_d = {}, {}, {}
    for k in range(n + 1):
        plus_bases[k] = kernel_basis(tc.d(n - k) @ ch[k]) if tc.dims[k] else np.zeros((0, 0), dtype=complex)
        minus_bases[k] = kernel_basis(tc.d(k)) if tc.dims[k] else np.zeros((0, 0), dtype=complex)
        _check_direct_sum(k, plus_bases[k], minus_bases[k], tc.dims[k])
        if k < n:
            gamma_d[k] = ch[k + 1] @ tc.d(k)

    v_even = scipy.linalg.block_diag(*[plus_bases[k] for k in even])
    w_even = scipy.linalg.block_diag(*[minus_bases[k] for k in even])
    frame = np.hstack([v_even, w_even])
    if b.size:
        selector = np.zeros(frame.shape[1])
        selector[:v_even.shape[1]] = 1.0
        projector_plus = frame @ np.diag(selector) @ np.linalg.inv(frame)
    else:
        projector_plus = np.zeros((0, 0), dtype=complex)
    projector_minus = np.eye(b.shape[0]) - projector_plus

    b_plus = _restrict(b, v_even, "Omega^even_+")
    b_minus = _restrict(b, w_even, "Omega^even_-")
    signature = OddSignature(
        n=n,
        even_degrees=even,
        b_even=b,
        plus_bases=plus_bases,
        minus_bases=minus_bases,
        projector_plus=projector_plus,
        projector_minus=projector_minus,
        b_plus=b_plus,
        b_minus=b_minus,
        gamma_d=gamma_d,
        spectrum=eigenvalues(b),
        plus_spectrum=eigenvalues(b_plus),
        minus_spectrum=eigenvalues(b_minus),
    )
    logger.debug(f"Assembled B_even of size {b.shape[0]} (plus {b_plus.shape[0]}, minus {b_minus.shape[0]})")
    return signature


def split(os: OddSignature) -> Tuple[np.ndarray, np.ndarray]:
    return os.b_plus, os.b_minus


def graded_det(os: OddSignature, theta: AgmonAngle) -> complex:
    """Det_theta(B_plus) / Det_theta(B_minus)"""
    log_value = -zeta_prime_zero(os.plus_spectrum, theta.theta) + zeta_prime_zero(os.minus_spectrum, theta.theta)
    return cmath.exp(log_value)


def _squared_restriction(os: OddSignature, k: int) -> np.ndarray:
    """(Gamma d)^2 on Omega^k_+, which it maps into itself"""
    n = os.n
    square = os.gamma_d[n - k - 1] @ os.gamma_d[k]
    basis = os.plus_bases[k]
    if basis.shape[1] == 0:
        return np.zeros((0, 0), dtype=complex)
    return basis.conj().T @ square @ basis


def xi(os: OddSignature, theta: AgmonAngle) -> complex:
    """xi = 1/2 sum_k (-1)^k LogDet_{2 theta}((-1)^(k+1) (Gamma d)^2 on Omega^k_+)"""
    cut = 2.0 * theta.theta
    terms = []
    for k in range(os.n):
        restricted = _squared_restriction(os, k)
        if restricted.size == 0:
            continue
        restricted = (-1) ** (k + 1) * restricted
        sv = singular_values(restricted)
        if sv[-1] <= RANK_TOLERANCE * max(1.0, sv[0]):
            raise DegenerateBasisError(f"(Gamma d)^2 is singular on Omega^{k}_+")
        terms.append((-1) ** k * matrix_log_det(restricted, cut))
    value = 0.5 * complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    return value


def eta(os: OddSignature, theta: AgmonAngle) -> EtaValue:
    """Finite-dimensional eta: (m_plus - m_minus - dim) / 2 = -m_minus"""
    m_plus, m_minus = spectral_counts(os.spectrum, theta.theta)
    asymmetry = m_plus - m_minus
    value = 0.5 * (asymmetry - os.spectrum.dimension)
    return EtaValue(complex(value), complex(asymmetry), m_plus, m_minus, False)


def _to_float(value: Rational) -> float:
    return float(Fraction(value)) if isinstance(value, (int, Fraction)) else float(value)


def refined_torsion(os: OddSignature, theta: AgmonAngle, rank_e: int = 1,
                    l_integral: Optional[Rational] = None) -> TorsionValue:
    det = graded_det(os, theta)
    if os.n % 4 == 1:
        return TorsionValue(det, Ambiguity.EXACT, Provenance.ANALYTIC)
    if l_integral is None:
        raise ValidationError(f"n = {os.n} is 3 mod 4: the L-integral must be supplied")
    if rank_e < 1:
        raise ValidationError(f"rank E must be positive, got {rank_e}")
    correction = cmath.exp(1j * math.pi * rank_e / 2 * _to_float(l_integral))
    if rank_e % 4 == 0:
        ambiguity = Ambiguity.EXACT
    elif rank_e % 2 == 0:
        ambiguity = Ambiguity.SIGN
    else:
        ambiguity = Ambiguity.FOURTH_ROOTS
    return TorsionValue(det * correction, ambiguity, Provenance.ANALYTIC, rank_e)


def rs_torsion(os: OddSignature, theta: AgmonAngle) -> float:
    return math.exp(xi(os, theta).real)


def identity_residual(os: OddSignature, theta: AgmonAngle) -> float:
    """Relative gap in Det_gr = e^xi e^(-i pi eta)"""
    det = graded_det(os, theta)
    predicted = cmath.exp(xi(os, theta)) * eta(os, theta).phase_factor()
    return abs(det - predicted) / abs(det)


def modulus_residual(os: OddSignature, theta: AgmonAngle) -> float:
    """Relative gap in |Det_gr| = T^RS e^(pi Im eta)"""
    det = graded_det(os, theta)
    predicted = rs_torsion(os, theta) * math.exp(math.pi * eta(os, theta).value.imag)
    return abs(abs(det) - predicted) / abs(det)


def analytic_report(os: OddSignature, theta: AgmonAngle, rank_e: int = 1,
                    l_integral: Optional[Rational] = None) -> AnalyticReport:
    if os.n % 4 == 3 and l_integral is None:
        l_integral = 0
        logger.info("No L-integral supplied for n = 3 mod 4; using 0")
    report = AnalyticReport(
        theta=theta,
        graded_det=graded_det(os, theta),
        xi=xi(os, theta),
        eta=eta(os, theta),
        rs_torsion=rs_torsion(os, theta),
        torsion=refined_torsion(os, theta, rank_e, l_integral),
        dims={"even": os.dimension, "plus": os.b_plus.shape[0], "minus": os.b_minus.shape[0]},
    )
    logger.info(f"theta={theta.theta:.6f} T={report.torsion.value:.12g} T_RS={report.rs_torsion:.12g}")
    return report
