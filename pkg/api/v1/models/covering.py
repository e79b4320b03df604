from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import numpy as np

from api.v1.models.base import BaseModel
from api.v1.models.hodge import HolomorphicForm


@dataclass(frozen=True, eq=False)
class FlatChart(BaseModel):
    """Per-face complex corner coordinates developed over the dual tree"""

    corners: np.ndarray = field(repr=False)  # (F, 3) complex
    base: int
    closure_residual: float
    diameter: float

    @property
    def signed_areas(self) -> np.ndarray:
        a = self.corners[:, 1] - self.corners[:, 0]
        b = self.corners[:, 2] - self.corners[:, 0]
        return 0.5 * np.imag(np.conj(a) * b)

    def vertex_coordinates(self, faces: np.ndarray, n_vertices: int) -> np.ndarray:
        """One coordinate per vertex, taken from its first corner"""
        coords = np.zeros(n_vertices, dtype=complex)
        flat_faces = faces.reshape(-1)
        flat_corners = self.corners.reshape(-1)
        coords[flat_faces[::-1]] = flat_corners[::-1]
        return coords

    def to_dict(self):
        return {
            "base": self.base,
            "closure_residual": self.closure_residual,
            "diameter": self.diameter,
            "folded_faces": int((self.signed_areas < 0).sum()),
        }


@dataclass(frozen=True)
class ZeroPoint(BaseModel):
    vertex: int
    index: int  # cone angle in multiples of 2*pi
    density: float = 0.0

    @property
    def order(self) -> int:
        return self.index - 1


@dataclass(eq=False)
class CriticalSegment(BaseModel):
    """Horizontal trajectory leaving a zero; ``end_zero == -1`` when left open"""

    start_zero: int
    end_zero: int
    points: np.ndarray = field(repr=False)  # complex, per-face developed
    faces: List[int] = field(default_factory=list, repr=False)
    chain: List[int] = field(default_factory=list, repr=False)  # left-side mesh path
    length: float = 0.0
    level_residual: float = 0.0


@dataclass(eq=False)
class CriticalGraph(BaseModel):
    segments: List[CriticalSegment] = field(default_factory=list)

    @property
    def closed_segments(self) -> List[CriticalSegment]:
        return [s for s in self.segments if s.end_zero >= 0]

    @property
    def total_length(self) -> float:
        return float(sum(s.length for s in self.segments))


@dataclass(eq=False)
class Slit(BaseModel):
    handle: int
    start: complex
    vector: complex
    zero_start: int
    zero_end: int
    pair: int
    top_ray: int  # critical segment whose left side is this slit's upper lip
    bottom_ray: int

    @property
    def end(self) -> complex:
        return self.start + self.vector

    @property
    def length(self) -> float:
        return float(abs(self.vector))


@dataclass(eq=False)
class Gluing(BaseModel):
    """Upper lip of ``top`` slit is identified with the lower lip of ``bottom``"""

    top: Tuple[int, int]  # (handle, slit index)
    bottom: Tuple[int, int]
    translation: complex  # bottom point = top point + translation


@dataclass(eq=False)
class Handle(BaseModel):
    index: int
    faces: np.ndarray = field(repr=False)
    lattice: np.ndarray  # two complex generators
    base_vertex: int
    base_face: int
    area: float
    slits: List[int] = field(default_factory=list)

    @property
    def covolume(self) -> float:
        b1, b2 = self.lattice
        return float(abs(np.imag(np.conj(b1) * b2)))

    @property
    def diagonal(self) -> float:
        b1, b2 = self.lattice
        return float(max(abs(b1 + b2), abs(b1 - b2)))

    def reduce(self, z: complex) -> Tuple[complex, complex]:
        """(point in the fundamental parallelogram, lattice translation applied)"""
        b1, b2 = self.lattice
        m = np.array([[b1.real, b2.real], [b1.imag, b2.imag]])
        alpha, beta = np.linalg.solve(m, [z.real, z.imag])
        shift = -(np.floor(alpha) * b1 + np.floor(beta) * b2)
        return z + shift, shift

    def lattice_coordinates(self, z) -> np.ndarray:
        b1, b2 = self.lattice
        m = np.array([[b1.real, b2.real], [b1.imag, b2.imag]])
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.linalg.solve(m, np.stack([z.real, z.imag]))

    def to_dict(self):
        return {
            "index": self.index,
            "faces": self.faces.tolist(),
            "lattice": [[float(b.real), float(b.imag)] for b in self.lattice],
            "base_vertex": self.base_vertex,
            "base_face": self.base_face,
            "area": self.area,
            "covolume": self.covolume,
            "slits": self.slits,
        }


@dataclass(eq=False)
class CoveringAtlas(BaseModel):
    genus: int
    form: HolomorphicForm = field(repr=False)
    zeros: List[ZeroPoint]
    handles: List[Handle]
    slits: List[Slit]
    gluings: List[Gluing]
    face_handle: np.ndarray = field(repr=False)  # (F,) handle id
    corners: np.ndarray = field(repr=False)  # (F, 3) complex, handle coordinates
    critical: CriticalGraph = field(default_factory=CriticalGraph, repr=False)
    form_label: str = ""
    zero_radius: float = 0.0
    base_vertex: int = 0

    @property
    def zero_vertices(self) -> List[int]:
        return [z.vertex for z in self.zeros]

    @property
    def mean_edge_length(self) -> float:
        c = self.corners
        return float(np.mean(np.abs(c[:, [1, 2, 0]] - c)))

    @property
    def diagonal(self) -> float:
        return max(h.diagonal for h in self.handles)

    @property
    def perimeter(self) -> float:
        return float(sum(2 * (abs(h.lattice[0]) + abs(h.lattice[1])) for h in self.handles))

    def to_dict(self):
        return {
            "genus": self.genus,
            "form": self.form_label,
            "zeros": [z.to_dict() for z in self.zeros],
            "handles": [h.to_dict() for h in self.handles],
            "slits": [s.to_dict() for s in self.slits],
            "gluings": [g.to_dict() for g in self.gluings],
        }
