import logging
import sys
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from core.config import settings
from core.logging import configure_logging
from api.v1.models.artifact import RunManifest
from api.v1.schemas.run_config import RunConfig, MeshSource, MeshFormat
from api.v1.services.artifact_service import ArtifactService
from api.v1.services.mesh_service import MeshService
from api.v1.services.pipeline_service import PipelineService
from api.v1.services.sim_service import SimService
from api.v1.services.verify_service import VerifyService
from api.utils.exceptions import SurfaceCurveError

logger = logging.getLogger(__name__)

VALIDATION_EXIT = 1
NUMERICAL_EXIT = 2


def run_options(command):
    """Flags shared by every run subcommand; each overrides the YAML config"""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML run config"),
        click.option("--mesh", "mesh_path", type=click.Path(dir_okay=False), help="OFF/OBJ mesh file"),
        click.option("--generate", help="generator spec, e.g. genus=2,res=16 or torus=8"),
        click.option("--seed", type=int),
        click.option("--slope", type=float),
        click.option("--length", type=float, help="flat curve length"),
        click.option("--delta", type=float, help="belt width"),
        click.option("--start", type=int, help="start vertex"),
        click.option("--radius", type=float, help="unit-disk communication radius"),
        click.option("--strategies", help="comma separated: dense,euler,random_walk"),
        click.option("--hops", type=int, help="simulation hop budget"),
        click.option("--stride", type=int, help="metric stride"),
        click.option("--out", "output_dir", type=click.Path(file_okay=False), help="output directory"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_config(config_path: Optional[str], mesh_path: Optional[str], generate: Optional[str], **overrides) -> RunConfig:
    data = {}
    if config_path:
        data = RunConfig.from_yaml(config_path).model_dump(mode="json")
    if mesh_path or generate:
        data["mesh"] = {"path": mesh_path, "generate": generate}
    if overrides.get("strategies"):
        overrides["strategies"] = [s.strip() for s in overrides["strategies"].split(",") if s.strip()]
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.model_validate(data)


def fail(exc: SurfaceCurveError) -> None:
    click.echo(f"error stage={exc.stage or 'run'} {type(exc).__name__}: {exc.detail}", err=True)
    if exc.hint:
        click.echo(f"hint: {exc.hint}", err=True)
    sys.exit(exc.exit_code)


def load(**kwargs) -> RunConfig:
    try:
        return build_config(**kwargs)
    except (ValidationError, ValueError) as exc:
        click.echo(f"error stage=config {exc}", err=True)
        sys.exit(VALIDATION_EXIT)


@click.group()
@click.option("--log-level", default=None, help="overrides LOG_LEVEL")
def cli(log_level):
    """Dense space-filling curves on genus-g meshes and data-mule coverage"""
    configure_logging(log_level or settings.LOG_LEVEL)


@cli.command()
@run_options
def pipeline(**kwargs):
    """mesh -> topology -> forms -> hodge -> covering -> curve, with artifacts"""
    config = load(**kwargs)
    try:
        result = PipelineService.run(config)
        manifest = PipelineService.write(result, config, config.output_dir)
    except SurfaceCurveError as exc:
        fail(exc)
    report = result.report()
    click.echo(
        f"genus={report['genus']} basis_loops={report['basis_loops']} zeros={report['zeros']} "
        f"handles={report['handles']} slope={report['slope']!r} hops={report['path_hops']}"
    )
    click.echo(f"wrote {len(manifest.artifacts)} files to {config.output_dir}")


@cli.command()
@run_options
def simulate(**kwargs):
    """Coverage traces for each strategy and the configured fleet"""
    config = load(**kwargs)
    directory = Path(config.output_dir)
    try:
        result = PipelineService.run(config)
        manifest = RunManifest(mesh_digest=result.mesh_digest, seed=config.seed)
        directory.mkdir(parents=True, exist_ok=True)
        ArtifactService.register(manifest, directory, config.write_resolved(directory), "yaml")
        summary, fleet = SimService.simulate(
            result.graph, result.mesh, result.atlas, config,
            result.start_vertex, result.slope, result.delta,
            directory=directory, manifest=manifest,
        )
        ArtifactService.write_manifest(manifest, directory)
    except SurfaceCurveError as exc:
        fail(exc)

    click.echo(f"nodes={summary.n_nodes}")
    for name, marks in summary.milestones.items():
        cells = " ".join(f"{k}={v}" for k, v in marks.items())
        dists = " ".join(f"d@{k}={v}" for k, v in summary.distances[name].items())
        click.echo(f"{name:<12} {cells} {dists}")
    if fleet is not None:
        click.echo(f"fleet mules={len(fleet.traces)} joint_coverage={fleet.joint.final_coverage!r}")


@cli.command()
@run_options
@click.option("--forms", "forms_file", type=click.Path(exists=True, dir_okay=False), help="forms.json to re-check")
@click.option("--no-distributed", is_flag=True, help="skip the distributed-simulation checks")
def verify(forms_file, no_distributed, **kwargs):
    """Evaluate every invariant; exits nonzero when any check fails"""
    config = load(**kwargs)
    try:
        mesh = PipelineService.load_mesh(config.mesh)
        MeshService.require_handles(mesh)
    except SurfaceCurveError as exc:
        fail(exc)
    report = VerifyService.verify(config, mesh=mesh, forms_file=forms_file, distributed=not no_distributed)

    directory = Path(config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    config.write_resolved(directory)
    (directory / "verification.json").write_text(ArtifactService.dumps(report.to_dict()))

    for check in report.checks:
        value = "" if check.value is None else f" value={check.value!r}"
        click.echo(f"{check.status.upper():<8} {check.name}{value}")
    if not report.passed:
        sys.exit(NUMERICAL_EXIT)


@cli.command("generate-mesh")
@click.option("--generate", required=True, help="generator spec, e.g. genus=2,res=16 or torus=8")
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice([f.value for f in MeshFormat]), default=None)
def generate_mesh(generate, output, fmt):
    """Write a synthetic mesh as OFF or OBJ"""
    try:
        source = MeshSource(generate=generate)
    except ValidationError as exc:
        click.echo(f"error stage=config {exc}", err=True)
        sys.exit(VALIDATION_EXIT)
    try:
        mesh = PipelineService.load_mesh(source)
        path = MeshService.write_mesh(mesh, output, fmt)
    except SurfaceCurveError as exc:
        fail(exc)
    click.echo(
        f"wrote {path} V={mesh.n_vertices} E={mesh.n_edges} F={mesh.n_faces} genus={MeshService.genus(mesh)}"
    )


if __name__ == "__main__":
    cli()
