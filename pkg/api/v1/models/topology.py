from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import numpy as np
import networkx as nx

from api.v1.models.base import BaseModel


@dataclass(frozen=True, eq=False)
class DualTree(BaseModel):
    """Spanning tree over faces; ``parent[root] == -1``"""

    root: int
    parent: np.ndarray
    order: np.ndarray
    crossed_edges: np.ndarray = field(repr=False)  # primal edge ids the tree crosses

    @property
    def n_edges(self) -> int:
        return int(len(self.crossed_edges))


@dataclass(frozen=True, eq=False)
class CutGraph(BaseModel):
    edge_pairs: np.ndarray  # (k, 2) vertex pairs
    edge_ids: Optional[np.ndarray] = field(default=None, repr=False)
    dual_tree: Optional[DualTree] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(len(self.edge_pairs))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_edges_from(map(tuple, self.edge_pairs.tolist()))
        return g


@dataclass(frozen=True, eq=False)
class HomologyBasis(BaseModel):
    """Closed loops as vertex cycles; loop ``[v0, ..., vn]`` closes with vn->v0"""

    loops: List[List[int]]

    def __len__(self) -> int:
        return len(self.loops)

    @staticmethod
    def oriented_edges(loop: List[int]) -> List[Tuple[int, int]]:
        return [(loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop))]
