from pydantic import BaseModel, Field, ConfigDict
from typing import Optional, List, Dict, Any

from api.v1.schemas.run_config import MeshSource


class MeshCounts(BaseModel):
    vertices: int
    edges: int
    faces: int
    euler_characteristic: int
    digest: Optional[str] = None


class PipelineReport(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    mesh: MeshCounts
    genus: int
    basis_loops: int
    cut_edges: int
    zeros: int
    zero_vertices: List[int]
    handles: int
    slits: int
    form: str
    slope: float
    delta: float
    start_vertex: int
    curve_length: float
    curve_segments: int
    path_hops: int
    bridge_hops: int
    residuals: Dict[str, float]
    artifacts: List[str] = Field(default_factory=list)


class SimulationSummary(BaseModel):
    n_nodes: int
    milestones: Dict[str, Dict[str, Optional[int]]]
    distances: Dict[str, Dict[str, Optional[float]]]
    fleet: Optional[Dict[str, Any]] = None


class CheckResult(BaseModel):
    name: str
    status: str
    value: Optional[float] = None
    bound: Optional[float] = None
    detail: str = ""


class VerificationResponse(BaseModel):
    passed: bool
    checks: List[CheckResult]


class MeshGenerateRequest(MeshSource):
    pass


class MeshGenerateResponse(BaseModel):
    mesh: MeshCounts
    genus: int
