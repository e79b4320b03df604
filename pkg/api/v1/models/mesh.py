from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Tuple
import numpy as np

from api.v1.models.base import BaseModel


def double_area(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|u||v| sin(angle) row by row, in any ambient dimension"""
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    return np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))


@dataclass(frozen=True)
class OrientedEdge:
    source: int
    target: int

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.target, self.source)

    @property
    def sign(self) -> int:
        """+1 when the edge follows the canonical low->high orientation"""
        return 1 if self.source < self.target else -1


@dataclass(frozen=True, eq=False)
class TriMesh(BaseModel):
    """Closed oriented triangle mesh.

    Halfedge ``h = 3 * f + i`` runs from ``faces[f, i]`` to
    ``faces[f, (i + 1) % 3]``; ``next``/``prev`` are implicit in that
    numbering, only ``twin`` and the edge map are stored.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray = field(repr=False)
    he_twin: np.ndarray = field(repr=False)
    he_edge: np.ndarray = field(repr=False)
    vertex_halfedge: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    # halfedge queries

    @cached_property
    def he_source(self) -> np.ndarray:
        return self.faces.reshape(-1)

    @cached_property
    def he_target(self) -> np.ndarray:
        return self.faces[:, [1, 2, 0]].reshape(-1)

    @cached_property
    def he_sign(self) -> np.ndarray:
        """+1 where the halfedge agrees with its edge's canonical orientation"""
        return np.where(self.he_source < self.he_target, 1.0, -1.0)

    @staticmethod
    def he_next(h: int) -> int:
        return 3 * (h // 3) + (h % 3 + 1) % 3

    @staticmethod
    def he_prev(h: int) -> int:
        return 3 * (h // 3) + (h % 3 + 2) % 3

    @staticmethod
    def he_face(h: int) -> int:
        return h // 3

    def halfedge(self, source: int, target: int) -> int:
        """Halfedge from source to target, -1 if absent"""
        return self._halfedge_lookup.get((source, target), -1)

    @cached_property
    def _halfedge_lookup(self) -> dict:
        return {
            (int(s), int(t)): h
            for h, (s, t) in enumerate(zip(self.he_source, self.he_target))
        }

    def outgoing(self, v: int) -> List[int]:
        """Outgoing halfedges of v in counter-clockwise order"""
        start = int(self.vertex_halfedge[v])
        ring = [start]
        h = int(self.he_twin[self.he_prev(start)])
        while h != start:
            ring.append(h)
            h = int(self.he_twin[self.he_prev(h)])
        return ring

    def edge_index(self, source: int, target: int) -> Tuple[int, int]:
        """(edge id, orientation sign) of the oriented edge source->target"""
        h = self.halfedge(source, target)
        if h < 0:
            raise KeyError(f"no edge {source}->{target}")
        return int(self.he_edge[h]), int(self.he_sign[h])

    # geometry

    @cached_property
    def face_areas(self) -> np.ndarray:
        p = self.vertices[self.faces]
        return 0.5 * double_area(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(
            self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1
        )

    @cached_property
    def face_frames(self) -> np.ndarray:
        """Isometric planar embedding of every face, corners as (F, 3, 2)"""
        p = self.vertices[self.faces]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        l1 = np.linalg.norm(e1, axis=1)
        frames = np.zeros((self.n_faces, 3, 2))
        frames[:, 1, 0] = l1
        frames[:, 2, 0] = np.einsum("ij,ij->i", e2, e1) / l1
        frames[:, 2, 1] = double_area(e1, e2) / l1
        return frames

    @cached_property
    def face_adjacency(self) -> np.ndarray:
        """(F, 3) neighbouring face across each face's halfedge"""
        return (self.he_twin // 3).reshape(-1, 3)

    def to_dict(self):
        return {
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "faces": self.n_faces,
            "euler_characteristic": self.euler_characteristic,
        }
