from dataclasses import dataclass, field
from typing import List, Tuple
import numpy as np

from api.v1.models.base import BaseModel


@dataclass(frozen=True)
class FlatPiece(BaseModel):
    """Part of the curve inside one face, in that face's handle coordinates"""

    face: int
    handle: int
    start: complex
    end: complex
    offset: float  # curve length before this piece

    @property
    def length(self) -> float:
        return abs(self.end - self.start)


@dataclass(eq=False)
class FlatSegment(BaseModel):
    handle: int
    start: complex
    end: complex
    event: str = "start"  # how the segment was entered: start | wrap | slit
    transfer: complex = 0j  # start = previous end + transfer


@dataclass(eq=False)
class DenseCurve(BaseModel):
    slope: float
    start_handle: int
    start_point: complex
    length: float
    segments: List[FlatSegment] = field(default_factory=list)
    pieces: List[FlatPiece] = field(default_factory=list, repr=False)

    @property
    def direction(self) -> complex:
        d = complex(1.0, self.slope)
        return d / abs(d)

    def to_dict(self):
        return {
            "slope": self.slope,
            "start_handle": self.start_handle,
            "start_point": [self.start_point.real, self.start_point.imag],
            "length": self.length,
            "segments": [s.to_dict() for s in self.segments],
        }


@dataclass(eq=False)
class SurfaceCurve(BaseModel):
    """Pulled-back curve: per piece the face and barycentric entry/exit points"""

    faces: np.ndarray
    entry: np.ndarray  # (n, 3)
    exit: np.ndarray  # (n, 3)
    length: float

    def __len__(self) -> int:
        return len(self.faces)

    def samples(self) -> List[Tuple[int, np.ndarray]]:
        out = []
        for f, a, b in zip(self.faces, self.entry, self.exit):
            out.append((int(f), a))
            out.append((int(f), b))
        return out

    def to_dict(self):
        return {
            "length": self.length,
            "pieces": [
                {"face": int(f), "entry": a.tolist(), "exit": b.tolist()}
                for f, a, b in zip(self.faces, self.entry, self.exit)
            ],
        }


@dataclass(eq=False)
class DiscretePath(BaseModel):
    vertices: List[int]
    strategy: str = "dense"
    bridges: List[Tuple[int, int]] = field(default_factory=list)  # path index ranges

    @property
    def hops(self) -> int:
        return max(len(self.vertices) - 1, 0)

    @property
    def bridge_hops(self) -> int:
        return int(sum(b - a for a, b in self.bridges))

    def truncate(self, hops: int) -> "DiscretePath":
        return DiscretePath(
            vertices=self.vertices[: hops + 1],
            strategy=self.strategy,
            bridges=[(a, min(b, hops)) for a, b in self.bridges if a < hops],
        )
