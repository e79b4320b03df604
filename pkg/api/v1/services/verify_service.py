import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from api.v1.models.forms import OneForm
from api.v1.models.mesh import TriMesh
from api.v1.models.pipeline import PipelineResult
from api.v1.models.verify import VerificationReport
from api.v1.schemas.run_config import RunConfig
from api.v1.services.pipeline_service import PipelineService
from api.v1.services.topology_service import TopologyService
from api.v1.services.forms_service import FormsService
from api.v1.services.hodge_service import HodgeService
from api.v1.services.covering_service import CoveringService
from api.v1.services.curve_service import CurveService
from api.v1.services.sim_service import SimService
from api.v1.services.distsim_service import DistSimService
from api.utils.exceptions import SurfaceCurveError, RankDeficient
from core.config import settings

logger = logging.getLogger(__name__)

CLOSED_TOLERANCE = 1e-12
PULLBACK_TOLERANCE = 0.01
DIFFUSION_TOLERANCE = 1e-6
FLOOD_TOLERANCE = 1e-8
DENSITY_GROWTH = 0.75  # mean gap(2L) / gap(L)


class VerifyService:

    @staticmethod
    def verify(
        config: RunConfig,
        mesh: Optional[TriMesh] = None,
        forms_file: Optional[Union[str, Path]] = None,
        aperiodicity_factor: float = 200.0,
        distributed: bool = True,
    ) -> VerificationReport:
        """Run the pipeline and evaluate every module's invariants"""
        report = VerificationReport()
        try:
            result = PipelineService.run(config, mesh)
        except SurfaceCurveError as exc:
            report.add(f"pipeline.{exc.stage or 'run'}", False, detail=f"{type(exc).__name__}: {exc.detail}")
            return report

        VerifyService.check_topology(result, report)
        VerifyService.check_forms(result, report)
        VerifyService.check_hodge(result, report)
        VerifyService.check_covering(result, report)
        VerifyService.check_curve(result, report, aperiodicity_factor)
        VerifyService.check_sim(result, report)
        if distributed:
            VerifyService.check_distributed(result, report)
        if forms_file is not None:
            VerifyService.check_forms_file(result.mesh, forms_file, report)

        logger.info(
            "stage=verify op=verify checks=%d failures=%d", len(report.checks), len(report.failures)
        )
        return report

    @staticmethod
    def check_topology(result: PipelineResult, report: VerificationReport) -> None:
        mesh = result.mesh
        chi = mesh.euler_characteristic
        report.add("mesh.euler_even", chi % 2 == 0, chi)
        report.add("topology.basis_size", len(result.basis) == 2 * result.genus, len(result.basis), 2 * result.genus)
        sliced = TopologyService.slice_euler_characteristic(mesh, result.cut)
        report.add("topology.cut_disk", sliced == 1, sliced, 1)

    @staticmethod
    def check_forms(result: PipelineResult, report: VerificationReport) -> None:
        closed = max(FormsService.d1(result.mesh, f).max_abs() for f in result.closed)
        report.add("forms.closed", closed <= CLOSED_TOLERANCE, closed, CLOSED_TOLERANCE)
        try:
            FormsService.period_matrix(result.mesh, result.closed, result.basis)
            report.add("forms.period_rank", True, len(result.closed), 2 * result.genus)
        except RankDeficient as exc:
            report.add("forms.period_rank", False, detail=exc.detail)

    @staticmethod
    def check_hodge(result: PipelineResult, report: VerificationReport) -> None:
        mesh, weights = result.mesh, result.weights
        scale = max(
            1.0, max(float(np.abs(HodgeService.divergence(mesh, weights, f)).max()) for f in result.closed)
        )
        divergence = result.residuals["divergence"]
        bound = settings.HARMONIC_TOLERANCE * scale
        report.add("hodge.divergence", divergence <= bound, divergence, bound)

        shift = result.residuals["period_shift"]
        report.add("hodge.period_preservation", shift <= settings.PERIOD_TOLERANCE * scale, shift, settings.PERIOD_TOLERANCE * scale)

        energy = min(HodgeService.star_wedge(mesh, w) for w in result.harmonic)
        report.add("hodge.energy_positive", energy > 0, energy, 0.0)

        defect = HodgeService.involution_defect(mesh, result.harmonic, result.basis)
        allowance = HodgeService.involution_bound(mesh)
        report.add("hodge.conjugate_involution", defect <= allowance, defect, allowance)

    @staticmethod
    def check_covering(result: PipelineResult, report: VerificationReport) -> None:
        atlas, genus = result.atlas, result.genus
        closure = result.residuals["closure"]
        diameter = CoveringService.integrate(result.mesh, result.dual_tree, atlas.form).diameter
        bound = settings.CLOSURE_TOLERANCE * max(1.0, diameter)
        report.add("covering.closure", closure <= bound, closure, bound)
        report.add("covering.components", len(atlas.handles) == genus, len(atlas.handles), genus)

        for handle in atlas.handles:
            gap = abs(handle.area - handle.covolume)
            tol = 1e-6 * max(1.0, handle.covolume)
            report.add(f"covering.handle{handle.index}.area", gap <= tol, gap, tol)

        if genus < 2:
            report.vacuous("covering.zero_count", "genus 1 has no zeros")
            report.vacuous("covering.slit_length", "genus 1 has no slits")
            report.vacuous("covering.slit_horizontal", "genus 1 has no slits")
            return
        report.add("covering.zero_count", len(atlas.zeros) == 2 * genus - 2, len(atlas.zeros), 2 * genus - 2)
        mismatch = 0.0
        angle = 0.0
        for gluing in atlas.gluings:
            top = atlas.slits[gluing.top[1]]
            bottom = atlas.slits[gluing.bottom[1]]
            mismatch = max(mismatch, abs(top.length - bottom.length))
            tilt = abs(float(np.angle(top.vector)))
            angle = max(angle, min(tilt, np.pi - tilt))
        report.add("covering.slit_length", mismatch <= settings.SLIT_LENGTH_TOLERANCE, mismatch, settings.SLIT_LENGTH_TOLERANCE)
        report.add("covering.slit_horizontal", angle <= settings.SLIT_ANGLE_TOLERANCE, angle, settings.SLIT_ANGLE_TOLERANCE)

    @staticmethod
    def check_curve(result: PipelineResult, report: VerificationReport, aperiodicity_factor: float) -> None:
        mesh, atlas, curve = result.mesh, result.atlas, result.curve
        scale = 1e-9 * max(1.0, atlas.diagonal)

        joins = [
            abs(b.start - (a.end + b.transfer)) for a, b in zip(curve.segments[:-1], curve.segments[1:])
        ]
        report.add("curve.segment_connectivity", max(joins, default=0.0) <= scale, max(joins, default=0.0), scale)

        off_lattice = 0.0
        for segment in curve.segments[1:]:
            if segment.event == "wrap":
                coords = atlas.handles[segment.handle].lattice_coordinates(segment.transfer)[:, 0]
                off_lattice = max(off_lattice, float(np.abs(coords - np.rint(coords)).max()))
        report.add("curve.wrap_is_lattice", off_lattice <= 1e-9, off_lattice, 1e-9)

        direction = curve.direction
        turn = max(
            (abs(np.angle((p.end - p.start) / direction)) for p in curve.pieces if p.length > 1e3 * scale),
            default=0.0,
        )
        report.add("curve.slope_conserved", turn <= 1e-9, turn, 1e-9)

        shortfall = abs(result.surface.length - curve.length)
        report.add("curve.pullback_length", shortfall <= PULLBACK_TOLERANCE * curve.length, shortfall, PULLBACK_TOLERANCE * curve.length)

        hops = result.path.vertices
        bad = sum(1 for u, v in zip(hops[:-1], hops[1:]) if not result.graph.has_edge(u, v))
        report.add("curve.path_hops", bad == 0, bad, 0)

        long_curve = CurveService.trace_dense(
            mesh, atlas, result.slope, aperiodicity_factor * atlas.perimeter,
            start=CurveService.vertex_start(mesh, atlas, result.start_vertex),
        )
        eps_hit = CurveService.hit_radius(atlas)
        closest = np.inf
        for handle in atlas.handles:
            hits = CurveService.transversal_hits(long_curve, atlas, handle.index)
            if len(hits) > 1:
                closest = min(closest, float(np.diff(hits).min()))
        report.add("curve.aperiodic", closest > eps_hit, closest, eps_hit)

        profile = CurveService.density_profile(long_curve, atlas, samples=12)
        gaps = [g for _, g in profile]
        monotone = all(b <= a + 1e-12 for a, b in zip(gaps[:-1], gaps[1:]))
        report.add("curve.density_monotone", monotone, gaps[-1], gaps[0])

        growth = CurveService.density_growth(profile)
        report.add("curve.density_growth", growth <= DENSITY_GROWTH, growth, DENSITY_GROWTH)

    @staticmethod
    def check_sim(result: PipelineResult, report: VerificationReport) -> None:
        graph = result.graph
        n = graph.number_of_nodes()
        tour = SimService.euler_path(graph, result.start_vertex)
        report.add("sim.euler_hops", tour.hops == 2 * (n - 1), tour.hops, 2 * (n - 1))
        report.add("sim.euler_coverage", len(set(tour.vertices)) == n, len(set(tour.vertices)), n)
        trace = SimService.measure(graph, result.path)
        coverage = [r.coverage for r in trace.records]
        report.add(
            "sim.coverage_monotone", all(b >= a for a, b in zip(coverage[:-1], coverage[1:])), trace.final_coverage
        )

    @staticmethod
    def check_distributed(result: PipelineResult, report: VerificationReport) -> None:
        mesh = result.mesh
        cut = DistSimService.flood_cut_locus(result.graph, result.start_vertex, mesh=mesh)
        chi = TopologyService.slice_euler_characteristic(mesh, cut)
        report.add("distsim.cut_disk", chi == 1, chi, 1)

        central = CoveringService.integrate(mesh, cut.dual_tree, result.atlas.form, base=result.start_vertex)
        flooded = DistSimService.flood_integrate(mesh, cut.dual_tree, result.atlas.form, root=result.start_vertex)
        offset = flooded.corners - central.corners
        spread = float(np.abs(offset - offset.reshape(-1)[0]).max())
        report.add("distsim.flood_integrate", spread <= FLOOD_TOLERANCE * max(1.0, central.diameter), spread, FLOOD_TOLERANCE)

        diffused = DistSimService.diffuse_harmonic(mesh, result.weights, result.closed[0], tolerance=1e-11)
        gap = float(np.abs(diffused.values - result.harmonic[0].values).max())
        report.add("distsim.diffusion", gap <= DIFFUSION_TOLERANCE, gap, DIFFUSION_TOLERANCE)

    @staticmethod
    def check_forms_file(mesh: TriMesh, path: Union[str, Path], report: VerificationReport) -> None:
        """Closedness of the forms stored in a run's forms.json"""
        data = json.loads(Path(path).read_text())
        for key in ("closed", "harmonic"):
            for k, values in enumerate(data.get(key, [])):
                values = np.asarray(values, dtype=float)
                if len(values) != mesh.n_edges:
                    report.add(f"forms_file.{key}[{k}].closed", False, detail=f"{len(values)} values for {mesh.n_edges} edges")
                    continue
                residual = FormsService.d1(mesh, OneForm(values)).max_abs()
                bound = 1e-9 * max(1.0, float(np.abs(values).max()))
                report.add(f"forms_file.{key}[{k}].closed", residual <= bound, residual, bound)
