from fastapi import APIRouter

from api.v1.schemas.reports import MeshGenerateRequest, MeshGenerateResponse, MeshCounts
from api.v1.services.mesh_service import MeshService
from api.v1.services.pipeline_service import PipelineService
from api.utils.exceptions import SurfaceCurveError, to_http

meshes_router = APIRouter(prefix="/meshes", tags=["meshes"])


@meshes_router.post("/generate", response_model=MeshGenerateResponse)
def generate_mesh(request: MeshGenerateRequest):
    """Build a synthetic mesh and report its counts"""
    try:
        mesh = PipelineService.load_mesh(request)
    except SurfaceCurveError as exc:
        raise to_http(exc)
    return MeshGenerateResponse(
        mesh=MeshCounts(**mesh.to_dict(), digest=MeshService.mesh_digest(mesh)),
        genus=MeshService.genus(mesh),
    )
