import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from api.v1.models.mesh import TriMesh
from api.v1.models.artifact import RunManifest
from api.v1.models.pipeline import PipelineResult
from api.v1.schemas.run_config import MeshSource, RunConfig
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService
from api.v1.services.forms_service import FormsService
from api.v1.services.hodge_service import HodgeService
from api.v1.services.covering_service import CoveringService
from api.v1.services.curve_service import CurveService
from api.v1.services.artifact_service import ArtifactService
from api.utils.exceptions import SliceFailure

logger = logging.getLogger(__name__)


class PipelineService:

    @staticmethod
    def load_mesh(source: MeshSource) -> TriMesh:
        if source.path is not None:
            return MeshService.load_mesh(source.path)
        params = MeshSource.parse_generator(source.generate)
        if "torus" in params:
            return MeshService.generate_torus_grid(params["torus"], params.get("m"))
        return MeshService.generate_genus_g(params["genus"], params["res"])

    @staticmethod
    def run(config: RunConfig, mesh: Optional[TriMesh] = None, trace: bool = True) -> PipelineResult:
        """mesh -> topology -> forms -> hodge -> covering -> curve"""
        mesh = mesh if mesh is not None else PipelineService.load_mesh(config.mesh)
        genus = MeshService.require_handles(mesh)
        logger.info("stage=mesh op=load vertices=%d faces=%d genus=%d", mesh.n_vertices, mesh.n_faces, genus)

        dual_tree = TopologyService.dual_spanning_tree(mesh)
        cut = TopologyService.cut_graph(mesh, dual_tree)
        chi = TopologyService.slice_euler_characteristic(mesh, cut)
        if chi != 1:
            raise SliceFailure(f"sliced surface has Euler characteristic {chi}, expected 1", stage="topology")
        basis = TopologyService.homology_basis(mesh, cut)

        closed = FormsService.cohomology_basis(mesh, basis, config.seed)
        periods = FormsService.period_matrix(mesh, closed, basis)

        weights = HodgeService.cotan_weights(mesh)
        harmonic = HodgeService.harmonic_basis(mesh, weights, closed)
        holomorphic = HodgeService.holomorphic_from_harmonic(mesh, harmonic)

        atlas = CoveringService.select_atlas(mesh, dual_tree, holomorphic, config.seed, base=0)
        chart = CoveringService.integrate(mesh, dual_tree, atlas.form, base=0)

        residuals = {
            "closedness": max(FormsService.d1(mesh, f).max_abs() for f in closed),
            "divergence": max(float(np.abs(HodgeService.divergence(mesh, weights, w)).max()) for w in harmonic),
            "period_shift": float(np.abs(FormsService.period_matrix(mesh, harmonic, basis) - periods).max()),
            "closure": chart.closure_residual,
            "slit_level": max((s.level_residual for s in atlas.critical.closed_segments), default=0.0),
        }
        result = PipelineResult(
            mesh=mesh,
            genus=genus,
            dual_tree=dual_tree,
            cut=cut,
            basis=basis,
            closed=closed,
            weights=weights,
            harmonic=harmonic,
            holomorphic=holomorphic,
            atlas=atlas,
            graph=MeshService.communication_graph(mesh, config.radius),
            residuals=residuals,
            mesh_digest=MeshService.mesh_digest(mesh),
        )
        if trace:
            PipelineService.trace(result, config)
        logger.info(
            "stage=pipeline op=run genus=%d zeros=%d handles=%d hops=%d",
            genus, len(atlas.zeros), len(atlas.handles), result.path.hops if result.path else 0,
        )
        return result

    @staticmethod
    def trace(result: PipelineResult, config: RunConfig) -> PipelineResult:
        """Dense curve, its pullback and the discrete path"""
        mesh, atlas = result.mesh, result.atlas
        start = atlas.handles[0].base_vertex if config.start is None else config.start
        flat_start = CurveService.vertex_start(mesh, atlas, start)
        slope = CurveService.choose_slope(mesh, atlas, config.seed, config.slope, start=flat_start)
        delta = config.delta or 2.0 * atlas.mean_edge_length
        length = config.length or CurveService.default_length(atlas, delta)

        result.curve = CurveService.trace_dense(mesh, atlas, slope, length, start=flat_start)
        result.surface = CurveService.pullback(result.curve, atlas, mesh)
        result.path = CurveService.discretize(result.surface, atlas, mesh, result.graph, delta, start)
        result.slope, result.delta, result.start_vertex = slope, float(delta), int(start)
        return result

    @staticmethod
    def write(result: PipelineResult, config: RunConfig, directory: Union[str, Path]) -> RunManifest:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(mesh_digest=result.mesh_digest, seed=config.seed)

        ArtifactService.register(manifest, directory, config.write_resolved(directory), "yaml")
        ArtifactService.write_json(manifest, directory, "report.json", result.report())
        ArtifactService.write_json(manifest, directory, "atlas.json", result.atlas.to_dict())
        ArtifactService.write_json(manifest, directory, "forms.json", {
            "closed": [f.values for f in result.closed],
            "harmonic": [f.values for f in result.harmonic],
        })
        topology = TopologyService.dump_jsonl(result.mesh, result.cut, result.basis, directory / "topology.jsonl")
        ArtifactService.register(manifest, directory, topology, "jsonl")
        coords = CoveringService.dump_vertex_coordinates(result.mesh, result.atlas, directory / "flat_coordinates.csv")
        ArtifactService.register(manifest, directory, coords, "csv")
        if result.curve is not None:
            ArtifactService.write_json(manifest, directory, "curve.json", result.curve.to_dict())
            ArtifactService.write_json(manifest, directory, "surface_curve.json", result.surface.to_dict())
            ArtifactService.write_text(
                manifest, directory, "path.txt", "\n".join(str(v) for v in result.path.vertices) + "\n"
            )
        ArtifactService.write_manifest(manifest, directory)
        return manifest
