"""
Combinatorial torsion of twisted CW complexes.

The torsion of an acyclic based cochain complex is computed from the
square matrices M_k = [d_{k-1} restricted to J_{k-1} | unit vectors J_k],
where J_k indexes r_k = rank(d_k) coordinates on which d_k is injective:

    tau = gro * prod_k det(M_k) ** ((-1) ** (k + 1))

With this orientation the circle with monodromy alpha gives alpha - 1.
"""
import cmath
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from src.core.complexes import CWData, Representation, require_acyclic, twist
from src.core.errors import AssumptionViolation, DegenerateBasisError, ValidationError
from src.core.linalg import numerical_rank
from src.core.oddsig import Ambiguity, Provenance, TorsionValue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EulerStructure:
    """One group-word lift per cell plus the cohomological orientation sign"""

    lifts: Dict[str, str] = field(default_factory=dict)
    gro: int = 1

    def __post_init__(self):
        if self.gro not in (1, -1):
            raise ValidationError(f"Orientation sign must be +1 or -1, got {self.gro}")

    @classmethod
    def trivial(cls, cw: CWData, gro: int = 1) -> "EulerStructure":
        return cls({cell: "1" for cell in cw.all_cells()}, gro)

    def validate(self, cw: CWData) -> None:
        cells = set(cw.all_cells())
        unknown = set(self.lifts) - cells
        if unknown:
            raise ValidationError(f"Euler structure lifts unknown cells {sorted(unknown)}")
        missing = cells - set(self.lifts)
        if missing:
            raise ValidationError(f"Euler structure has no lift for cells {sorted(missing)}")
        for word in self.lifts.values():
            cw.presentation.check_word(word)

    def to_dict(self) -> dict:
        return {"lifts": dict(self.lifts), "gro": self.gro}


def change_euler(eu: EulerStructure, cell: str, g: str) -> EulerStructure:
    """Right-multiply the lift of ``cell`` by the group word ``g``"""
    if cell not in eu.lifts:
        raise ValidationError(f"Unknown cell {cell!r}")
    lifts = dict(eu.lifts)
    old = lifts[cell]
    if g.strip() in ("", "1", "e"):
        return eu
    lifts[cell] = g if old.strip() in ("", "1", "e") else f"{old}*{g}"
    return EulerStructure(lifts, eu.gro)


def flip_orientation(eu: EulerStructure) -> EulerStructure:
    return EulerStructure(dict(eu.lifts), -eu.gro)


def _dims_of(differentials: Sequence[np.ndarray]) -> List[int]:
    if not differentials:
        raise ValidationError("A based complex needs at least one differential")
    return [d.shape[1] for d in differentials] + [differentials[-1].shape[0]]


def _ranks(differentials: Sequence[np.ndarray], dims: Sequence[int]) -> List[int]:
    ranks = [numerical_rank(d) for d in differentials] + [0]
    previous = 0
    for k, c in enumerate(dims):
        if ranks[k] + previous != c:
            raise AssumptionViolation("I", f"the complex is not acyclic in degree {k}")
        previous = ranks[k]
    return ranks


def _greedy_subset(d: np.ndarray, rank: int) -> List[int]:
    """Lexicographically first columns of ``d`` spanning a rank-``rank`` image"""
    chosen: List[int] = []
    for j in range(d.shape[1]):
        if len(chosen) == rank:
            break
        if numerical_rank(d[:, chosen + [j]]) > len(chosen):
            chosen.append(j)
    if len(chosen) != rank:
        raise DegenerateBasisError(f"No column subset of rank {rank}")
    return chosen


def _subsets(differentials, dims, ranks, subsets) -> List[List[int]]:
    n = len(dims) - 1
    if subsets is None:
        subsets = [_greedy_subset(differentials[k], ranks[k]) for k in range(n)] + [[]]
    subsets = [sorted(s) for s in subsets]
    if len(subsets) != n + 1:
        raise ValidationError(f"Need {n + 1} index subsets, got {len(subsets)}")
    for k, s in enumerate(subsets):
        if len(s) != ranks[k] or any(not 0 <= j < dims[k] for j in s):
            raise ValidationError(f"Subset J_{k} = {s} must hold {ranks[k]} indices below {dims[k]}")
    return subsets


def _block(differentials, dims, subsets, k: int) -> np.ndarray:
    """M_k = [d_{k-1}[:, J_{k-1}] | I[:, J_k]]"""
    left = differentials[k - 1][:, subsets[k - 1]] if k > 0 else np.zeros((dims[0], 0), dtype=complex)
    right = np.eye(dims[k], dtype=complex)[:, subsets[k]]
    return np.hstack([left, right])


def torsion_of_based_complex(differentials: Sequence[np.ndarray],
                             subsets: Optional[Sequence[Sequence[int]]] = None) -> complex:
    """Torsion of the acyclic complex in its standard bases (without orientation sign)"""
    differentials = [np.asarray(d, dtype=complex) for d in differentials]
    dims = _dims_of(differentials)
    ranks = _ranks(differentials, dims)
    subsets = _subsets(differentials, dims, ranks, subsets)
    value = 1.0 + 0.0j
    for k in range(len(dims)):
        if dims[k] == 0:
            continue
        m = _block(differentials, dims, subsets, k)
        if numerical_rank(m) < dims[k]:
            raise DegenerateBasisError(f"Block M_{k} is singular for subsets {subsets}")
        det = complex(scipy.linalg.det(m))
        value *= det if k % 2 == 1 else 1.0 / det
    return value


def _permutation_sign(sequence: Sequence[int]) -> int:
    inversions = sum(1 for a, b in itertools.combinations(sequence, 2) if a > b)
    return -1 if inversions % 2 else 1


class MinorProduct(NamedTuple):
    raw: complex
    parity: int

    @property
    def value(self) -> complex:
        return self.parity * self.raw


def minor_torsion(differentials: Sequence[np.ndarray], subsets: Sequence[Sequence[int]]) -> MinorProduct:
    """Torsion from square minors d_{k-1}[I_k, J_{k-1}], I_k the complement of J_k.

    ``raw`` is the plain product of minors; ``parity`` is the permutation sign
    that turns it into the full-determinant torsion.
    """
    differentials = [np.asarray(d, dtype=complex) for d in differentials]
    dims = _dims_of(differentials)
    ranks = _ranks(differentials, dims)
    subsets = _subsets(differentials, dims, ranks, subsets)
    raw, parity = 1.0 + 0.0j, 1
    for k in range(1, len(dims)):
        rows = [i for i in range(dims[k]) if i not in subsets[k]]
        if not rows:
            continue
        minor = complex(scipy.linalg.det(differentials[k - 1][np.ix_(rows, subsets[k - 1])]))
        if minor == 0:
            raise DegenerateBasisError(f"Minor of d_{k - 1} vanishes for subsets {subsets}")
        raw *= minor if k % 2 == 1 else 1.0 / minor
        parity *= _permutation_sign(rows + list(subsets[k]))
    return MinorProduct(raw, parity)


def valid_subsets(differentials: Sequence[np.ndarray]) -> List[List[List[int]]]:
    """Every admissible choice of (J_0, ..., J_n); meant for small complexes"""
    differentials = [np.asarray(d, dtype=complex) for d in differentials]
    dims = _dims_of(differentials)
    ranks = _ranks(differentials, dims)
    per_degree = []
    for k, d in enumerate(differentials):
        per_degree.append([list(c) for c in itertools.combinations(range(dims[k]), ranks[k])
                           if numerical_rank(d[:, list(c)]) == ranks[k]])
    return [list(choice) + [[]] for choice in itertools.product(*per_degree)]


def _lift_matrices(cw: CWData, rep: Representation, eu: EulerStructure) -> List[np.ndarray]:
    return [
        scipy.linalg.block_diag(*[rep.evaluate(eu.lifts[cell]) for cell in cw.cells[k]])
        for k in range(cw.top_degree + 1)
    ]


def comb_torsion(cw: CWData, rep: Representation, eu: EulerStructure) -> TorsionValue:
    """Torsion of the twisted cochain complex in the cell basis lifted by ``eu``"""
    eu.validate(cw)
    tc = twist(cw, rep)
    require_acyclic(tc)
    lifts = _lift_matrices(cw, rep, eu)
    lifted = [np.linalg.solve(lifts[k + 1], tc.d(k) @ lifts[k]) for k in range(tc.n)]
    value = eu.gro * torsion_of_based_complex(lifted)
    logger.debug(f"Combinatorial torsion {value:.12g} for {len(cw.all_cells())} cells")
    return TorsionValue(value, Ambiguity.EXACT, Provenance.COMBINATORIAL)


def lens_reidemeister_modulus(p: int, q: int, k: int) -> float:
    """|zeta - 1| |zeta^q - 1| for the character t -> exp(2 pi i k / p) of L(p, q)"""
    if k % p == 0:
        raise AssumptionViolation("I", "the trivial character is not acyclic")
    zeta = cmath.exp(2j * cmath.pi * k / p)
    return abs(zeta - 1) * abs(zeta ** q - 1)

