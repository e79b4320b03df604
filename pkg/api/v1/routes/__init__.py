from fastapi import APIRouter
from api.v1.routes.runs import runs_router
from api.v1.routes.meshes import meshes_router

api_version_one = APIRouter(prefix="/api/v1")

api_version_one.include_router(runs_router)
api_version_one.include_router(meshes_router)
