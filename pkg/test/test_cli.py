import json

import pytest
import yaml
from click.testing import CliRunner

from cli import cli
from api.v1.schemas.run_config import RESOLVED_NAME
from api.v1.services.mesh_service import MeshService


@pytest.fixture
def runner():
    return CliRunner()


def test_generate_mesh(runner, tmp_path):
    target = tmp_path / "torus.off"
    result = runner.invoke(cli, ["generate-mesh", "--generate", "torus=6", "--out", str(target)])
    assert result.exit_code == 0, result.output
    mesh = MeshService.load_mesh(target)
    assert mesh.n_vertices == 36
    assert MeshService.genus(mesh) == 1


def test_generate_mesh_rejects_bad_spec(runner, tmp_path):
    result = runner.invoke(cli, ["generate-mesh", "--generate", "torus=2", "--out", str(tmp_path / "x.off")])
    assert result.exit_code == 1


def test_pipeline_on_torus(runner, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(cli, ["pipeline", "--generate", "torus=8", "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "genus=1" in result.output
    assert "zeros=0" in result.output

    report = json.loads((out / "report.json").read_text())
    assert report["genus"] == 1 and report["zeros"] == 0
    resolved = yaml.safe_load((out / RESOLVED_NAME).read_text())
    assert resolved["seed"] == 3
    assert resolved["mesh"]["generate"] == "torus=8"


def test_pipeline_genus_zero_mesh_exits_with_validation_code(runner, tetrahedron_file, tmp_path):
    result = runner.invoke(cli, ["pipeline", "--mesh", str(tetrahedron_file), "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "stage=mesh" in result.output


def test_missing_mesh_source_is_a_config_error(runner, tmp_path):
    result = runner.invoke(cli, ["pipeline", "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_config_file_with_overrides(runner, tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text(yaml.safe_dump({
        "mesh": {"generate": "torus=8"},
        "seed": 1,
        "strategies": ["euler", "random_walk"],
        "walk_seeds": 2,
        "stride": 8,
    }))
    out = tmp_path / "sim"
    args = ["simulate", "--config", str(config), "--seed", "4", "--out", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert (out / "trace_euler.csv").exists()
    assert (out / "trace_random_walk.csv").exists()
    assert (out / "simulation.json").exists()
    assert yaml.safe_load((out / RESOLVED_NAME).read_text())["seed"] == 4

    first = (out / "trace_random_walk.csv").read_bytes()
    assert runner.invoke(cli, args).exit_code == 0
    assert (out / "trace_random_walk.csv").read_bytes() == first


def test_simulate_fleet(runner, tmp_path):
    config = tmp_path / "fleet.yaml"
    config.write_text(yaml.safe_dump({
        "mesh": {"generate": "torus=8"},
        "strategies": ["euler"],
        "fleet": [{"strategy": "euler", "start": 0}, {"strategy": "random_walk", "start": 30, "seed": 2}],
        "hops": 60,
    }))
    out = tmp_path / "fleet"
    result = runner.invoke(cli, ["simulate", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "fleet mules=2" in result.output
    assert (out / "fleet_traces.csv").exists()
    assert (out / "fleet_overlap.csv").exists()


def test_verify_torus_writes_report(runner, tmp_path):
    out = tmp_path / "verify"
    result = runner.invoke(cli, ["verify", "--generate", "torus=8", "--no-distributed", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "verification.json").read_text())
    assert report["passed"] is True
    statuses = {c["name"]: c["status"] for c in report["checks"]}
    assert statuses["covering.zero_count"] == "vacuous"


def test_verify_genus_zero(runner, tetrahedron_file, tmp_path):
    result = runner.invoke(cli, ["verify", "--mesh", str(tetrahedron_file), "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_start_vertex_out_of_range_is_a_numerical_failure(runner, tmp_path):
    result = runner.invoke(
        cli, ["pipeline", "--generate", "torus=8", "--start", "9999", "--out", str(tmp_path / "run")]
    )
    assert result.exit_code == 2
    assert "LocationMiss" in result.output
