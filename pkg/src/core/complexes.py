"""
Twisted cochain complexes built from CW data and representations, together
with chirality operators (finite stand-ins for the Hodge star) and the
built-in circle, lens-space and random models.

Cohomological convention: a (k+1)-cell sigma' with boundary
sum c * g * sigma contributes the block c * rep(g) at (sigma', sigma) of
d_k : C^k -> C^{k+1}. This is the transpose of the twisted boundary matrix at
the level of cells, with the blocks themselves left untransposed, so that
d_{k+1} d_k = rep(A_{k+2} A_{k+1}) = 0 follows from the boundary relation.
"""
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.config.settings import (
    MAX_CONDITION,
    MAX_GENERATION_RETRIES,
    RANK_TOLERANCE,
    RELATION_TOLERANCE,
)
from src.core.errors import (
    AssumptionViolation,
    GenerationError,
    NumericalError,
    TorsionError,
    ValidationError,
)
from src.core.linalg import as_complex_matrix, choose_agmon, numerical_rank

logger = logging.getLogger(__name__)

Word = Tuple[Tuple[str, int], ...]

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


def parse_word(text: str) -> Word:
    """Parse ``"t^-1*s^2"`` style group words; ``"1"``, ``"e"`` and ``""`` are the identity"""
    text = text.replace(" ", "")
    if text in ("", "1", "e"):
        return ()
    letters = []
    for token in text.split("*"):
        match = _TOKEN.match(token)
        if not match:
            raise ValidationError(f"Malformed group word: {text!r}")
        power = int(match.group(2)) if match.group(2) is not None else 1
        if power:
            letters.append((match.group(1), power))
    return tuple(letters)


def format_word(word: Word) -> str:
    if not word:
        return "1"
    return "*".join(g if p == 1 else f"{g}^{p}" for g, p in word)


@dataclass(frozen=True)
class GroupPresentation:
    generators: Tuple[str, ...]
    relations: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.generators)) != len(self.generators):
            raise ValidationError("Duplicate generator symbols")
        for relation in self.relations:
            self.check_word(relation)

    def check_word(self, text: str) -> Word:
        word = parse_word(text)
        unknown = {g for g, _ in word} - set(self.generators)
        if unknown:
            raise ValidationError(f"Word {text!r} uses unknown generators {sorted(unknown)}")
        return word

    def cyclic_order(self) -> Optional[int]:
        """Order of a one-generator presentation (0 for infinite cyclic), None otherwise"""
        if len(self.generators) != 1:
            return None
        if not self.relations:
            return 0
        order = 0
        for relation in self.relations:
            word = parse_word(relation)
            exponent = sum(p for _, p in word)
            order = math.gcd(order, abs(exponent))
        return order


@dataclass
class Representation:
    """Monodromy matrices over the generators of a presentation"""

    presentation: GroupPresentation
    dimension: int
    images: Dict[str, np.ndarray]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError("Representation dimension must be positive")
        missing = set(self.presentation.generators) - set(self.images)
        if missing:
            raise ValidationError(f"No image for generators {sorted(missing)}")
        extra = set(self.images) - set(self.presentation.generators)
        if extra:
            raise ValidationError(f"Images given for unknown generators {sorted(extra)}")
        checked = {}
        for gen, image in self.images.items():
            m = as_complex_matrix(image, self.dimension, self.dimension)
            if np.linalg.cond(m) > 1e12:
                raise ValidationError(f"Image of {gen} is not invertible")
            checked[gen] = m
        self.images = checked
        identity = np.eye(self.dimension)
        for relation in self.presentation.relations:
            value = self.evaluate(relation)
            if np.max(np.abs(value - identity)) > RELATION_TOLERANCE:
                raise ValidationError(f"Invalid representation: relation {relation!r} is not satisfied")

    def evaluate(self, word) -> np.ndarray:
        """Image of a group word (string or parsed)"""
        if isinstance(word, str):
            word = self.presentation.check_word(word)
        result = np.eye(self.dimension, dtype=complex)
        for gen, power in word:
            result = result @ np.linalg.matrix_power(self.images[gen], power)
        return result


@dataclass(frozen=True)
class BoundaryTerm:
    cell: str
    word: str
    coefficient: int


@dataclass
class CWData:
    """Cells per degree and group-ring boundaries of (k+1)-cells"""

    presentation: GroupPresentation
    cells: Dict[int, List[str]]
    boundaries: Dict[str, List[BoundaryTerm]]

    def __post_init__(self):
        degrees = sorted(self.cells)
        if degrees != list(range(len(degrees))):
            raise ValidationError(f"Cell degrees must be 0..n, got {degrees}")
        seen = set()
        for k in degrees:
            for cell in self.cells[k]:
                if cell in seen:
                    raise ValidationError(f"Duplicate cell id {cell!r}")
                seen.add(cell)
        for cell, terms in self.boundaries.items():
            k = self.degree_of(cell)
            if k == 0 and terms:
                raise ValidationError(f"0-cell {cell!r} cannot have a boundary")
            for term in terms:
                if term.cell not in self.cells.get(k - 1, []):
                    raise ValidationError(f"Boundary of {cell!r} refers to {term.cell!r}, not a {k - 1}-cell")
                self.presentation.check_word(term.word)
        if self.symbolic_boundary_squared() is False:
            raise ValidationError("Invalid CW data: boundary of boundary is nonzero")

    @property
    def top_degree(self) -> int:
        return max(self.cells)

    def degree_of(self, cell: str) -> int:
        for k, names in self.cells.items():
            if cell in names:
                return k
        raise ValidationError(f"Unknown cell {cell!r}")

    def all_cells(self) -> List[str]:
        return [cell for k in sorted(self.cells) for cell in self.cells[k]]

    def symbolic_boundary_squared(self) -> Optional[bool]:
        """Check boundary^2 = 0 in Z[G] for cyclic presentations; None when not decidable here"""
        order = self.presentation.cyclic_order()
        if order is None:
            return None

        def element(word: str) -> int:
            exponent = sum(p for _, p in parse_word(word))
            return exponent % order if order else exponent

        for k in range(1, self.top_degree):
            for top in self.cells.get(k + 1, []):
                total: Dict[str, Counter] = {}
                for outer in self.boundaries.get(top, []):
                    a = element(outer.word)
                    for inner in self.boundaries.get(outer.cell, []):
                        g = a + element(inner.word)
                        g = g % order if order else g
                        total.setdefault(inner.cell, Counter())[g] += outer.coefficient * inner.coefficient
                if any(c != 0 for counter in total.values() for c in counter.values()):
                    return False
        return True


@dataclass
class TwistedComplex:
    """Cochain complex C^0 -> ... -> C^n with differentials d_k : C^k -> C^{k+1}"""

    n: int
    dims: Tuple[int, ...]
    differentials: Tuple[np.ndarray, ...]
    provenance: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.dims) != self.n + 1 or len(self.differentials) != self.n:
            raise ValidationError("Complex needs n+1 spaces and n differentials")
        self.dims = tuple(int(c) for c in self.dims)
        self.differentials = tuple(
            as_complex_matrix(d, self.dims[k + 1], self.dims[k]) if np.asarray(d).size else
            np.zeros((self.dims[k + 1], self.dims[k]), dtype=complex)
            for k, d in enumerate(self.differentials)
        )
        for k in range(self.n - 1):
            product = self.differentials[k + 1] @ self.differentials[k]
            scale = max(1.0, np.linalg.norm(self.differentials[k + 1]) * np.linalg.norm(self.differentials[k]))
            if product.size and np.max(np.abs(product)) > 1e-10 * scale:
                raise ValidationError(f"d_{k + 1} d_{k} != 0 (max entry {np.max(np.abs(product)):.3e})")

    def d(self, k: int) -> np.ndarray:
        """d_k, including the zero maps out of C^{-1} and into C^{n+1}"""
        if 0 <= k < self.n:
            return self.differentials[k]
        rows = self.dims[k + 1] if 0 <= k + 1 <= self.n else 0
        cols = self.dims[k] if 0 <= k <= self.n else 0
        return np.zeros((rows, cols), dtype=complex)

    def ranks(self) -> List[int]:
        return [numerical_rank(d) for d in self.differentials]

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * c for k, c in enumerate(self.dims))


@dataclass
class Chirality:
    """Degree reversing maps Gamma_k : C^k -> C^{n-k} with Gamma_{n-k} Gamma_k = id"""

    n: int
    maps: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.maps) != self.n + 1:
            raise ValidationError("Chirality needs one map per degree")
        self.maps = tuple(np.array(g, dtype=complex) for g in self.maps)
        for k in range(self.n + 1):
            g, h = self.maps[k], self.maps[self.n - k]
            if g.shape != (h.shape[1], h.shape[0]):
                raise ValidationError(f"Gamma_{k} has shape {g.shape}, incompatible with Gamma_{self.n - k}")
            if g.size and np.max(np.abs(h @ g - np.eye(g.shape[1]))) > 1e-10 * max(1.0, np.linalg.cond(g)):
                raise ValidationError(f"Gamma_{self.n - k} Gamma_{k} is not the identity")

    def __getitem__(self, k: int) -> np.ndarray:
        return self.maps[k]


def twist(cw: CWData, rep: Representation) -> TwistedComplex:
    """Cochain complex of the CW structure with coefficients twisted by ``rep``"""
    if rep.presentation != cw.presentation:
        raise ValidationError("Representation and CW data use different presentations")
    n = cw.top_degree
    size = rep.dimension
    dims = tuple(size * len(cw.cells[k]) for k in range(n + 1))
    differentials = []
    for k in range(n):
        d = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        lower = {cell: i for i, cell in enumerate(cw.cells[k])}
        for row, top in enumerate(cw.cells[k + 1]):
            for term in cw.boundaries.get(top, []):
                col = lower[term.cell]
                d[row * size:(row + 1) * size, col * size:(col + 1) * size] += (
                    term.coefficient * rep.evaluate(term.word))
        differentials.append(d)
    try:
        return TwistedComplex(n, dims, tuple(differentials), {"source": "cw"})
    except ValidationError as e:
        raise ValidationError(f"Invalid CW data after twisting: {e.detail}")


def check_acyclic(tc: TwistedComplex, tolerance: float = RANK_TOLERANCE) -> bool:
    """rank(d_k) + rank(d_{k-1}) = dim C^k in every degree"""
    for k in range(tc.n + 1):
        if numerical_rank(tc.d(k), tolerance) + numerical_rank(tc.d(k - 1), tolerance) != tc.dims[k]:
            return False
    return True


def require_acyclic(tc: TwistedComplex) -> None:
    if not check_acyclic(tc):
        raise AssumptionViolation("I", "the twisted complex has nonzero cohomology")


def circle_cw() -> CWData:
    """One 0-cell and one 1-cell with boundary (t - 1) e0"""
    presentation = GroupPresentation(("t",))
    return CWData(
        presentation,
        {0: ["e0"], 1: ["e1"]},
        {"e1": [BoundaryTerm("e0", "t", 1), BoundaryTerm("e0", "1", -1)]},
    )


def lens_cw(p: int, q: int) -> CWData:
    """Standard CW structure of L(p, q): boundaries t-1, 1+t+...+t^(p-1), t^q-1"""
    if p < 2 or math.gcd(p, q) != 1:
        raise ValidationError(f"Invalid lens parameters: need p >= 2 and gcd(p, q) = 1, got ({p}, {q})")
    presentation = GroupPresentation(("t",), (f"t^{p}",))
    norm = [BoundaryTerm("e1", f"t^{j}" if j else "1", 1) for j in range(p)]
    return CWData(
        presentation,
        {0: ["e0"], 1: ["e1"], 2: ["e2"], 3: ["e3"]},
        {
            "e1": [BoundaryTerm("e0", "t", 1), BoundaryTerm("e0", "1", -1)],
            "e2": norm,
            "e3": [BoundaryTerm("e2", f"t^{q}", 1), BoundaryTerm("e2", "1", -1)],
        },
    )


def circle_representation(z) -> Representation:
    """Representation of the circle group sending t to ``z`` (scalar or matrix)"""
    image = np.atleast_2d(np.array(z, dtype=complex))
    return Representation(GroupPresentation(("t",)), image.shape[0], {"t": image})


def character_representation(p: int, k: int, presentation: Optional[GroupPresentation] = None) -> Representation:
    """One-dimensional character t -> exp(2 pi i k / p) of Z/p"""
    presentation = presentation or GroupPresentation(("t",), (f"t^{p}",))
    zeta = np.exp(2j * np.pi * k / p)
    return Representation(presentation, 1, {"t": np.array([[zeta]])})


def is_unitary(rep: Representation) -> bool:
    identity = np.eye(rep.dimension)
    return all(np.max(np.abs(u.conj().T @ u - identity)) <= 1e-10 for u in rep.images.values())


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR factorisation of a complex Gaussian matrix"""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_well_conditioned(rows: int, cols: int, rng: np.random.Generator,
                            max_condition: float = MAX_CONDITION) -> np.ndarray:
    for _ in range(MAX_GENERATION_RETRIES):
        m = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
        if m.size == 0 or np.linalg.cond(m) <= max_condition:
            return m
    raise GenerationError(f"Could not draw a {rows}x{cols} matrix with condition <= {max_condition}")


def conjugate_representation(rep: Representation, p: np.ndarray) -> Representation:
    p_inv = np.linalg.inv(p)
    images = {gen: p @ image @ p_inv for gen, image in rep.images.items()}
    return Representation(rep.presentation, rep.dimension, images)


def blockwise(p: np.ndarray, count: int) -> np.ndarray:
    """Block diagonal matrix with ``count`` copies of ``p``"""
    if count == 0:
        return np.zeros((0, 0), dtype=complex)
    return scipy.linalg.block_diag(*([p] * count))


def default_chirality(tc: TwistedComplex) -> Chirality:
    """Identity blocks C^k -> C^{n-k}; requires dim C^k = dim C^{n-k}"""
    for k in range(tc.n + 1):
        if tc.dims[k] != tc.dims[tc.n - k]:
            raise ValidationError(f"No identity chirality: dim C^{k} != dim C^{tc.n - k}")
    return Chirality(tc.n, tuple(np.eye(c, dtype=complex) for c in tc.dims))


def transport(tc: TwistedComplex, ch: Chirality, s: Sequence[np.ndarray]) -> Tuple[TwistedComplex, Chirality]:
    """Push complex and chirality through the block isomorphism S_k : C^k -> C^k"""
    s_inv = [np.linalg.inv(m) if m.size else m for m in s]
    differentials = tuple(s[k + 1] @ tc.d(k) @ s_inv[k] for k in range(tc.n))
    maps = tuple(s[tc.n - k] @ ch[k] @ s_inv[k] for k in range(tc.n + 1))
    provenance = dict(tc.provenance, transported=True)
    return TwistedComplex(tc.n, tc.dims, differentials, provenance), Chirality(ch.n, maps)


def _ranks_from_dims(dims: Sequence[int]) -> List[int]:
    ranks, previous = [], 0
    for c in dims:
        previous = c - previous
        ranks.append(previous)
    return ranks


def _validate_model_dims(n: int, dims: Sequence[int]) -> List[int]:
    if n < 1 or n % 2 == 0:
        raise ValidationError(f"Top degree must be odd, got {n}")
    if len(dims) != n + 1 or any(c < 0 for c in dims):
        raise ValidationError(f"Need n+1 = {n + 1} nonnegative dimensions, got {list(dims)}")
    ranks = _ranks_from_dims(dims)
    if any(r < 0 for r in ranks) or ranks[-1] != 0:
        raise GenerationError(
            f"Dimensions {list(dims)} admit no acyclic complex (Euler characteristic "
            f"{sum((-1) ** k * c for k, c in enumerate(dims))})")
    if any(dims[k] != dims[n - k] for k in range(n + 1)):
        raise ValidationError(f"Dimensions must be symmetric, got {list(dims)}")
    return ranks


def _random_acyclic_differentials(dims: Sequence[int], ranks: Sequence[int], rng,
                                  max_condition: float = MAX_CONDITION) -> List[np.ndarray]:
    """d_k = S_{k+1} D_k S_k^* with D_k mapping the last r_k coordinates onto the first r_k"""
    frames = [random_unitary(c, rng) if c else np.zeros((0, 0)) for c in dims]
    differentials = []
    for k in range(len(dims) - 1):
        canonical = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        r = ranks[k]
        if r:
            canonical[:r, dims[k] - r:] = random_well_conditioned(r, r, rng, max_condition)
        differentials.append(frames[k + 1] @ canonical @ frames[k].conj().T)
    return differentials


def random_chirality_complex(n: int, dims: Sequence[int], seed: int) -> Tuple[TwistedComplex, Chirality]:
    """Random acyclic complex with chirality whose odd signature operator is invertible.

    Draws are rejected unless B_even has condition number at most
    MAX_CONDITION and xi is defined at the chosen Agmon angle.
    """
    from src.core.oddsig import assemble, xi

    ranks = _validate_model_dims(n, dims)
    rng = np.random.default_rng(seed)
    # n = 1: cond(B_even) <= cond(Gamma_1) cond(d_0) <= MAX_CONDITION
    factor_cap = math.sqrt(MAX_CONDITION)
    for attempt in range(MAX_GENERATION_RETRIES):
        try:
            differentials = _random_acyclic_differentials(dims, ranks, rng, factor_cap)
            lower = {k: random_well_conditioned(dims[n - k], dims[k], rng, factor_cap)
                     for k in range((n + 1) // 2)}
            maps = [None] * (n + 1)
            for k, g in lower.items():
                maps[k] = g
                maps[n - k] = np.linalg.inv(g) if g.size else g.T
            provenance = {"generator": "random_chirality", "seed": seed, "retries": attempt}
            tc = TwistedComplex(n, tuple(dims), tuple(differentials), provenance)
            ch = Chirality(n, tuple(maps))
            os = assemble(tc, ch)
            condition = np.linalg.cond(os.b_even) if os.b_even.size else 1.0
            if condition > MAX_CONDITION:
                raise NumericalError(f"B_even has condition number {condition:.3e} > {MAX_CONDITION:g}")
            if os.b_even.size:
                xi(os, choose_agmon(os.spectrum))
        except TorsionError as e:
            logger.debug(f"Random model seed={seed} attempt {attempt} rejected: {e.detail}")
            continue
        logger.info(f"Random chirality complex n={n} dims={list(dims)} seed={seed} after {attempt} retries")
        return tc, ch
    raise GenerationError(f"No admissible model for dims {list(dims)} after {MAX_GENERATION_RETRIES} retries")


def hermitian_chirality_complex(n: int, dims: Sequence[int], seed: int) -> Tuple[TwistedComplex, Chirality]:
    """Self-adjoint witness: unitary chirality and d_{k-1}^* = (-1)^k Gamma d Gamma.

    The resulting odd signature operator is Hermitian, and a final random
    unitary change of frame in every degree keeps it so.
    """
    ranks = _validate_model_dims(n, dims)
    rng = np.random.default_rng(seed)
    if n == 1:
        m = dims[0]
        u = random_unitary(m, rng)
        h = _random_hermitian(m, rng)
        differentials = [1j * u @ h]
        maps = [u, u.conj().T]
    elif n == 3:
        a, b = dims[0], dims[1]
        q = random_unitary(b, rng)
        v = random_unitary(a, rng) if a else np.zeros((0, 0))
        d0 = q[:, :a] @ random_well_conditioned(a, a, rng)
        mu = rng.uniform(0.5, 2.0, b - a) * rng.choice([-1.0, 1.0], b - a)
        d1 = q[:, a:] @ np.diag(mu) @ q[:, a:].conj().T
        d2 = -v @ d0.conj().T
        differentials = [d0, d1, d2]
        maps = [v, np.eye(b, dtype=complex), np.eye(b, dtype=complex), v.conj().T]
    else:
        raise ValidationError("Hermitian witnesses are generated for n = 1 and n = 3")
    tc = TwistedComplex(n, tuple(dims), tuple(differentials),
                        {"generator": "hermitian_chirality", "seed": seed, "ranks": ranks})
    frames = [random_unitary(c, rng) if c else np.zeros((0, 0)) for c in dims]
    return transport(tc, Chirality(n, tuple(maps)), frames)


def _random_hermitian(m: int, rng: np.random.Generator) -> np.ndarray:
    q = random_unitary(m, rng)
    spectrum = rng.uniform(0.5, 2.0, m) * rng.choice([-1.0, 1.0], m)
    return q @ np.diag(spectrum) @ q.conj().T


def scalar_witness(t: float) -> Tuple[TwistedComplex, Chirality]:
    """The one-dimensional model d = i t, Gamma = 1 on C^0 = C^1 = C"""
    tc = TwistedComplex(1, (1, 1), (np.array([[1j * t]]),), {"generator": "witness", "t": t})
    return tc, Chirality(1, (np.eye(1, dtype=complex), np.eye(1, dtype=complex)))
