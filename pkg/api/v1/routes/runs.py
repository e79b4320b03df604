from fastapi import APIRouter, Query
from pathlib import Path
import logging

from api.v1.schemas.run_config import RunConfig
from api.v1.schemas.reports import PipelineReport, SimulationSummary, VerificationResponse
from api.v1.services.pipeline_service import PipelineService
from api.v1.services.sim_service import SimService
from api.v1.services.verify_service import VerifyService
from api.utils.exceptions import SurfaceCurveError, BadRequestException, to_http

logger = logging.getLogger(__name__)

runs_router = APIRouter(prefix="/runs", tags=["runs"])


def _run(config: RunConfig):
    try:
        return PipelineService.run(config)
    except SurfaceCurveError as exc:
        logger.warning("stage=%s op=run error=%s", exc.stage, type(exc).__name__)
        raise to_http(exc)
    except ValueError as exc:
        raise BadRequestException(str(exc))


@runs_router.post("/pipeline", response_model=PipelineReport)
def run_pipeline(
    config: RunConfig,
    write: bool = Query(False, description="Write artifacts under the config's output_dir"),
):
    """Run mesh to discrete path and report counts and residuals"""
    result = _run(config)
    report = result.report()
    if write:
        manifest = PipelineService.write(result, config, Path(config.output_dir))
        report["artifacts"] = manifest.names()
    return PipelineReport.model_validate(report)


@runs_router.post("/simulate", response_model=SimulationSummary)
def run_simulation(config: RunConfig):
    """Compare coverage strategies on the mesh's communication graph"""
    result = _run(config)
    try:
        summary, fleet = SimService.simulate(
            result.graph, result.mesh, result.atlas, config,
            result.start_vertex, result.slope, result.delta,
        )
    except SurfaceCurveError as exc:
        raise to_http(exc)
    return SimulationSummary(
        n_nodes=summary.n_nodes,
        milestones=summary.milestones,
        distances=summary.distances,
        fleet=fleet.to_dict() if fleet else None,
    )


@runs_router.post("/verify", response_model=VerificationResponse)
def run_verification(
    config: RunConfig,
    distributed: bool = Query(True, description="Include the distributed-simulation checks"),
):
    """Evaluate every stage's invariants; failures are reported, not raised"""
    report = VerifyService.verify(config, distributed=distributed)
    return VerificationResponse.model_validate(report.to_dict())
