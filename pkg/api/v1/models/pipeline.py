from dataclasses import dataclass, field
from typing import Dict, List, Optional

import networkx as nx

from api.v1.models.base import BaseModel
from api.v1.models.mesh import TriMesh
from api.v1.models.topology import DualTree, CutGraph, HomologyBasis
from api.v1.models.forms import OneForm
from api.v1.models.hodge import CotanWeights, HolomorphicForm
from api.v1.models.covering import CoveringAtlas
from api.v1.models.curve import DenseCurve, SurfaceCurve, DiscretePath


@dataclass(eq=False)
class PipelineResult(BaseModel):
    """Everything one pipeline run computed, stage by stage"""

    mesh: TriMesh = field(repr=False)
    genus: int
    dual_tree: DualTree = field(repr=False)
    cut: CutGraph = field(repr=False)
    basis: HomologyBasis = field(repr=False)
    closed: List[OneForm] = field(repr=False)
    weights: CotanWeights = field(repr=False)
    harmonic: List[OneForm] = field(repr=False)
    holomorphic: List[HolomorphicForm] = field(repr=False)
    atlas: CoveringAtlas = field(repr=False)
    graph: nx.Graph = field(repr=False)
    slope: float = 0.0
    delta: float = 0.0
    start_vertex: int = 0
    curve: Optional[DenseCurve] = field(default=None, repr=False)
    surface: Optional[SurfaceCurve] = field(default=None, repr=False)
    path: Optional[DiscretePath] = field(default=None, repr=False)
    residuals: Dict[str, float] = field(default_factory=dict)
    mesh_digest: str = ""

    def report(self) -> dict:
        atlas = self.atlas
        return {
            "mesh": {**self.mesh.to_dict(), "digest": self.mesh_digest},
            "genus": self.genus,
            "basis_loops": len(self.basis),
            "cut_edges": self.cut.size,
            "zeros": len(atlas.zeros),
            "zero_vertices": atlas.zero_vertices,
            "handles": len(atlas.handles),
            "slits": len(atlas.slits),
            "form": atlas.form_label,
            "slope": self.slope,
            "delta": self.delta,
            "start_vertex": self.start_vertex,
            "curve_length": self.curve.length if self.curve else 0.0,
            "curve_segments": len(self.curve.segments) if self.curve else 0,
            "path_hops": self.path.hops if self.path else 0,
            "bridge_hops": self.path.bridge_hops if self.path else 0,
            "residuals": dict(sorted(self.residuals.items())),
        }
