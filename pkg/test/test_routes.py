import pytest
from fastapi.testclient import TestClient

from main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_root_and_health(client):
    assert client.get("/health").json() == {"status": "healthy"}
    body = client.get("/").json()
    assert body["docs"] == "/docs"


def test_generate_mesh(client):
    response = client.post("/api/v1/meshes/generate", json={"generate": "torus=6"})
    assert response.status_code == 200
    body = response.json()
    assert body["genus"] == 1
    assert body["mesh"]["vertices"] == 36
    assert len(body["mesh"]["digest"]) == 64


def test_generate_mesh_validation(client):
    response = client.post("/api/v1/meshes/generate", json={"generate": "genus=0,res=8"})
    assert response.status_code == 422
    response = client.post("/api/v1/meshes/generate", json={"generate": "torus=6", "path": "x.off"})
    assert response.status_code == 422


def test_pipeline_route(client):
    response = client.post("/api/v1/runs/pipeline", json={"mesh": {"generate": "torus=8"}, "seed": 2})
    assert response.status_code == 200, response.text
    report = response.json()
    assert report["genus"] == 1
    assert report["zeros"] == 0
    assert report["handles"] == 1
    assert report["artifacts"] == []


def test_pipeline_route_writes_artifacts(client, tmp_path):
    body = {"mesh": {"generate": "torus=8"}, "output_dir": str(tmp_path)}
    response = client.post("/api/v1/runs/pipeline", params={"write": True}, json=body)
    assert response.status_code == 200, response.text
    assert "report.json" in response.json()["artifacts"]
    assert (tmp_path / "manifest.json").exists()


def test_genus_zero_is_a_bad_request(client, tetrahedron_file):
    response = client.post("/api/v1/runs/pipeline", json={"mesh": {"path": str(tetrahedron_file)}})
    assert response.status_code == 400
    detail = response.json()["detail"]
    assert detail["error"] == "GenusZero"
    assert detail["stage"] == "mesh"


def test_simulate_route(client):
    body = {"mesh": {"generate": "torus=8"}, "strategies": ["euler", "random_walk"], "walk_seeds": 2}
    response = client.post("/api/v1/runs/simulate", json=body)
    assert response.status_code == 200, response.text
    summary = response.json()
    assert summary["n_nodes"] == 64
    assert summary["milestones"]["euler"]["100%"] is not None
    assert summary["fleet"] is None


def test_verify_route(client):
    response = client.post(
        "/api/v1/runs/verify", params={"distributed": False}, json={"mesh": {"generate": "torus=8"}}
    )
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["passed"] is True
    assert any(c["status"] == "vacuous" for c in body["checks"])
