"""
JSON model files: pydantic schemas and conversion to the numerical types.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists of such pairs. Every model is validated before any computation and
unknown fields are rejected.
"""
import json
import logging
from numbers import Number
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as SchemaError

from src.core.comb_torsion import EulerStructure
from src.core.complexes import (
    BoundaryTerm,
    Chirality,
    CWData,
    GroupPresentation,
    Representation,
    TwistedComplex,
    circle_cw,
    circle_representation,
    default_chirality,
    twist,
)
from src.core.errors import ValidationError
from src.core.linalg import matrix_from_json, matrix_to_json


logger = logging.getLogger(__name__)

ComplexPair = Annotated[List[float], Field(min_length=2, max_length=2)]
MatrixJSON = List[List[ComplexPair]]


def pair(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


def unpair(value: List[float]) -> complex:
    return complex(value[0], value[1])


class PresentationModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    generators: List[str] = Field(..., min_length=1, description="Generator symbols")
    relations: List[str] = Field(default_factory=list, description="Relator words such as t^5")

    def to_domain(self) -> GroupPresentation:
        return GroupPresentation(tuple(self.generators), tuple(self.relations))

    @classmethod
    def from_domain(cls, presentation: GroupPresentation) -> "PresentationModel":
        return cls(generators=list(presentation.generators), relations=list(presentation.relations))


class RepresentationModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(..., ge=1, description="Rank of the flat bundle")
    images: Dict[str, MatrixJSON] = Field(..., description="Monodromy matrix per generator")

    def to_domain(self, presentation: GroupPresentation) -> Representation:
        images = {gen: matrix_from_json(m) for gen, m in self.images.items()}
        return Representation(presentation, self.dimension, images)

    @classmethod
    def from_domain(cls, rep: Representation) -> "RepresentationModel":
        return cls(dimension=rep.dimension,
                   images={gen: matrix_to_json(m) for gen, m in rep.images.items()})


class BoundaryTermModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cell: str = Field(..., description="Face of the boundary term")
    word: str = Field(default="1", description="Group element acting on the face")
    coefficient: int = Field(..., description="Integer multiplicity")


class CWDataModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    presentation: PresentationModel
    cells: Dict[int, List[str]] = Field(..., description="Cell ids per degree 0..n")
    boundaries: Dict[str, List[BoundaryTermModel]] = Field(
        default_factory=dict, description="Group-ring boundary of every positive-degree cell")

    def to_domain(self) -> CWData:
        boundaries = {
            cell: [BoundaryTerm(t.cell, t.word, t.coefficient) for t in terms]
            for cell, terms in self.boundaries.items()
        }
        return CWData(self.presentation.to_domain(), {k: list(v) for k, v in self.cells.items()}, boundaries)

    @classmethod
    def from_domain(cls, cw: CWData) -> "CWDataModel":
        return cls(
            presentation=PresentationModel.from_domain(cw.presentation),
            cells={k: list(v) for k, v in cw.cells.items()},
            boundaries={
                cell: [BoundaryTermModel(cell=t.cell, word=t.word, coefficient=t.coefficient) for t in terms]
                for cell, terms in cw.boundaries.items()
            },
        )


class EulerModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lifts: Dict[str, str] = Field(..., description="Group word lifting each cell")
    gro: Literal[1, -1] = Field(default=1, description="Cohomological orientation sign")

    def to_domain(self) -> EulerStructure:
        return EulerStructure(dict(self.lifts), self.gro)

    @classmethod
    def from_domain(cls, eu: EulerStructure) -> "EulerModel":
        return cls(lifts=dict(eu.lifts), gro=eu.gro)


class ComplexModel(BaseModel):
    """An explicit complex with chirality, as written by the random generators"""
    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=1, description="Odd top degree")
    dims: List[int] = Field(..., description="dim C^k for k = 0..n")
    differentials: List[MatrixJSON] = Field(..., description="d_k : C^k -> C^(k+1)")
    chirality: List[MatrixJSON] = Field(..., description="Gamma_k : C^k -> C^(n-k)")

    def to_domain(self) -> tuple:
        tc = TwistedComplex(self.n, tuple(self.dims),
                            tuple(matrix_from_json(d) for d in self.differentials))
        maps = []
        for k, m in enumerate(self.chirality):
            g = matrix_from_json(m)
            maps.append(g if g.size else np.zeros((self.dims[self.n - k], self.dims[k]), dtype=complex))
        return tc, Chirality(self.n, tuple(maps))

    @classmethod
    def from_domain(cls, tc: TwistedComplex, ch: Chirality) -> "ComplexModel":
        return cls(
            n=tc.n,
            dims=list(tc.dims),
            differentials=[matrix_to_json(d) for d in tc.differentials],
            chirality=[matrix_to_json(g) for g in ch.maps],
        )


class ModelFile(BaseModel):
    """Top-level model document; the payload fields required depend on ``kind``"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["cw", "random_complex", "circle", "circle_bundle"]
    cw: Optional[CWDataModel] = None
    complex: Optional[ComplexModel] = None
    z: Optional[ComplexPair] = Field(default=None, description="Monodromy (circle) or Fourier twist (circle_bundle)")
    representation: Optional[RepresentationModel] = None
    euler: Optional[EulerModel] = None
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Generator parameters")

    @model_validator(mode="after")
    def check_payload(self) -> "ModelFile":
        required = {
            "cw": ("cw", "representation"),
            "random_complex": ("complex",),
            "circle": ("z",),
            "circle_bundle": ("z",),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"kind {self.kind!r} requires {', '.join(missing)}")
        allowed = set(required) | {"euler"} if self.kind in ("cw", "circle") else set(required)
        unexpected = [name for name in ("cw", "complex", "z", "representation", "euler")
                      if getattr(self, name) is not None and name not in allowed]
        if unexpected:
            raise ValueError(f"kind {self.kind!r} does not take {', '.join(unexpected)}")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, exclude_none=True)

    @classmethod
    def for_cw(cls, cw: CWData, rep: Representation, eu: Optional[EulerStructure] = None,
               **metadata) -> "ModelFile":
        return cls(
            kind="cw",
            cw=CWDataModel.from_domain(cw),
            representation=RepresentationModel.from_domain(rep),
            euler=EulerModel.from_domain(eu) if eu is not None else None,
            metadata=metadata,
        )

    @classmethod
    def for_complex(cls, tc: TwistedComplex, ch: Chirality, **metadata) -> "ModelFile":
        return cls(kind="random_complex", complex=ComplexModel.from_domain(tc, ch),
                   metadata=dict(tc.provenance, **metadata))

    @classmethod
    def for_circle(cls, z: Number, bundle: bool = False) -> "ModelFile":
        return cls(kind="circle_bundle" if bundle else "circle", z=pair(z))


class LoadedModel(NamedTuple):
    """Numerical objects of a model file; fields a kind does not use are None"""

    kind: str
    twisted: Optional[TwistedComplex]
    chirality: Optional[Chirality]
    cw: Optional[CWData]
    representation: Optional[Representation]
    euler: Optional[EulerStructure]
    z: Optional[complex]
    metadata: Dict[str, Any]


def to_domain(model: ModelFile) -> LoadedModel:
    """Build the twisted complex, chirality and combinatorial data a model file describes"""
    cw = rep = eu = tc = ch = z = None
    if model.kind == "cw":
        cw = model.cw.to_domain()
        rep = model.representation.to_domain(cw.presentation)
    elif model.kind == "circle":
        z = unpair(model.z)
        cw = circle_cw()
        rep = circle_representation(z)
    elif model.kind == "circle_bundle":
        z = unpair(model.z)
        if z == 0:
            raise ValidationError("Fourier twist z must be nonzero")
    else:
        tc, ch = model.complex.to_domain()
    if cw is not None:
        tc = twist(cw, rep)
        ch = default_chirality(tc)
        eu = model.euler.to_domain() if model.euler is not None else EulerStructure.trivial(cw)
        eu.validate(cw)
    return LoadedModel(model.kind, tc, ch, cw, rep, eu, z, dict(model.metadata))


def parse_model(payload: Union[str, dict]) -> ModelFile:
    """Validate JSON text or a decoded document; schema problems become ValidationError"""
    try:
        if isinstance(payload, str):
            return ModelFile.model_validate_json(payload)
        return ModelFile.model_validate(payload)
    except SchemaError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "model"
        raise ValidationError(f"Invalid model file at {location}: {first['msg']}")


def load_model(path: Union[str, Path]) -> LoadedModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValidationError(f"Cannot read model file {path}: {e.strerror}")
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e.msg} at line {e.lineno}")
    model = parse_model(text)
    logger.info(f"Loaded {model.kind} model from {path}")
    return to_domain(model)
