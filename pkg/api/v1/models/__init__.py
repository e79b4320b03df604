from api.v1.models.base import BaseModel
from api.v1.models.mesh import TriMesh, OrientedEdge
from api.v1.models.topology import DualTree, CutGraph, HomologyBasis
from api.v1.models.forms import OneForm, TwoForm
from api.v1.models.hodge import CotanWeights, HolomorphicForm
from api.v1.models.covering import (
    FlatChart,
    ZeroPoint,
    CriticalSegment,
    CriticalGraph,
    Slit,
    Gluing,
    Handle,
    CoveringAtlas,
)
from api.v1.models.curve import FlatPiece, FlatSegment, DenseCurve, SurfaceCurve, DiscretePath
from api.v1.models.sim import SimRecord, SimTrace, FleetResult, SimSummary
from api.v1.models.distsim import NodeState, DiffusionReport
from api.v1.models.artifact import Artifact, RunManifest
from api.v1.models.pipeline import PipelineResult
from api.v1.models.verify import Check, VerificationReport

__all__ = [
    "BaseModel",
    "TriMesh",
    "OrientedEdge",
    "DualTree",
    "CutGraph",
    "HomologyBasis",
    "OneForm",
    "TwoForm",
    "CotanWeights",
    "HolomorphicForm",
    "FlatChart",
    "ZeroPoint",
    "CriticalSegment",
    "CriticalGraph",
    "Slit",
    "Gluing",
    "Handle",
    "CoveringAtlas",
    "FlatPiece",
    "FlatSegment",
    "DenseCurve",
    "SurfaceCurve",
    "DiscretePath",
    "SimRecord",
    "SimTrace",
    "FleetResult",
    "SimSummary",
    "NodeState",
    "DiffusionReport",
    "Artifact",
    "RunManifest",
    "PipelineResult",
    "Check",
    "VerificationReport",
]
