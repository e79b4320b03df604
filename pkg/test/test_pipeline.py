import json

import numpy as np
import pytest
import yaml

from api.v1.schemas.run_config import MeshSource, RunConfig, RESOLVED_NAME
from api.v1.services.pipeline_service import PipelineService
from api.v1.services.verify_service import VerifyService
from api.v1.models.verify import FAIL, PASS, VACUOUS


def test_torus_report(torus_pipeline):
    report = torus_pipeline.report()
    assert report["genus"] == 1
    assert report["basis_loops"] == 2
    assert report["zeros"] == 0
    assert report["handles"] == 1
    assert report["slits"] == 0
    assert report["mesh"]["vertices"] == 64
    assert report["path_hops"] > 0
    assert report["residuals"]["closedness"] <= 1e-12


def test_torus_path_starts_at_base_vertex(torus_pipeline):
    path = torus_pipeline.path
    assert path.vertices[0] == torus_pipeline.atlas.handles[0].base_vertex == 0
    graph = torus_pipeline.graph
    assert all(graph.has_edge(u, v) for u, v in zip(path.vertices[:-1], path.vertices[1:]))


def test_written_artifacts(torus_pipeline, torus_config, tmp_path):
    manifest = PipelineService.write(torus_pipeline, torus_config, tmp_path)
    names = set(manifest.names())
    assert {
        RESOLVED_NAME, "report.json", "atlas.json", "forms.json", "topology.jsonl",
        "flat_coordinates.csv", "curve.json", "surface_curve.json", "path.txt",
    } <= names
    manifest_file = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest_file["mesh_digest"] == torus_pipeline.mesh_digest

    resolved = RunConfig.model_validate(yaml.safe_load((tmp_path / RESOLVED_NAME).read_text()))
    assert resolved == torus_config

    path = [int(v) for v in (tmp_path / "path.txt").read_text().split()]
    assert path == torus_pipeline.path.vertices


def test_same_seed_same_outputs(torus_config, tmp_path):
    first = PipelineService.write(PipelineService.run(torus_config), torus_config, tmp_path / "a")
    second = PipelineService.write(PipelineService.run(torus_config), torus_config, tmp_path / "b")
    assert {a.name: a.sha256 for a in first.artifacts} == {a.name: a.sha256 for a in second.artifacts}


def test_verify_torus(torus_config, tmp_path):
    report = VerifyService.verify(torus_config)
    assert report.passed, [c.to_dict() for c in report.failures]
    for name in ("covering.zero_count", "covering.slit_length", "covering.slit_horizontal"):
        assert report.get(name).status == VACUOUS
    assert report.get("topology.cut_disk").status == PASS
    assert report.get("distsim.diffusion").status == PASS


def test_verify_flags_corrupted_forms_file(torus_pipeline, torus_config, tmp_path):
    PipelineService.write(torus_pipeline, torus_config, tmp_path)
    forms = json.loads((tmp_path / "forms.json").read_text())
    forms["closed"][0][3] += 0.5
    corrupted = tmp_path / "corrupted.json"
    corrupted.write_text(json.dumps(forms))

    report = VerifyService.verify(torus_config, forms_file=corrupted, distributed=False)
    assert report.get("forms_file.closed[0].closed").status == FAIL
    assert report.get("forms_file.closed[1].closed").status == PASS
    assert not report.passed


def test_verify_reports_stage_of_failure(tetrahedron_file):
    report = VerifyService.verify(RunConfig(mesh=MeshSource(path=str(tetrahedron_file))))
    assert not report.passed
    assert report.failures[0].name == "pipeline.mesh"
    assert "GenusZero" in report.failures[0].detail


@pytest.mark.slow
def test_genus_two_pipeline():
    config = RunConfig(mesh=MeshSource(generate="genus=2,res=8"), seed=7)
    result = PipelineService.run(config)
    report = result.report()
    assert report["genus"] == 2
    assert report["basis_loops"] == 4
    assert report["zeros"] == 2
    assert report["handles"] == 2
    segments = result.curve.segments
    assert any(s.event == "slit" for s in segments)
    for a, b in zip(segments[:-1], segments[1:]):
        assert abs(b.start - (a.end + b.transfer)) < 1e-9 * max(1.0, result.atlas.diagonal)
    assert np.isfinite(report["residuals"]["closure"])
