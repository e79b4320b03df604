from api.v1.schemas.run_config import (
    RunConfig,
    MeshSource,
    MuleSpec,
    Strategy,
    MeshFormat,
)

from api.v1.schemas.reports import (
    MeshCounts,
    PipelineReport,
    SimulationSummary,
    CheckResult,
    VerificationResponse,
    MeshGenerateRequest,
    MeshGenerateResponse,
)

__all__ = [
    # Run configuration
    "RunConfig",
    "MeshSource",
    "MuleSpec",
    "Strategy",
    "MeshFormat",

    # Responses
    "MeshCounts",
    "PipelineReport",
    "SimulationSummary",
    "CheckResult",
    "VerificationResponse",
    "MeshGenerateRequest",
    "MeshGenerateResponse",
]
