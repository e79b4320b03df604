import json

import numpy as np
import pytest

from api.v1.models.topology import HomologyBasis
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService


@pytest.fixture(scope="module", params=["torus", "genus2"])
def surface(request):
    mesh = request.getfixturevalue(request.param)
    tree = TopologyService.dual_spanning_tree(mesh)
    cut = TopologyService.cut_graph(mesh, tree)
    return mesh, tree, cut, MeshService.genus(mesh)


def test_dual_tree_spans_faces(surface):
    mesh, tree, _, _ = surface
    assert tree.n_edges == mesh.n_faces - 1
    assert tree.parent[tree.root] == -1
    assert sorted(tree.order.tolist()) == list(range(mesh.n_faces))
    # every face is ordered after its parent
    position = np.empty(mesh.n_faces, dtype=int)
    position[tree.order] = np.arange(mesh.n_faces)
    children = tree.order[1:]
    assert (position[tree.parent[children]] < position[children]).all()


def test_cut_graph_size(surface):
    mesh, tree, cut, g = surface
    assert cut.size == mesh.n_edges - (mesh.n_faces - 1)
    # a cut graph of a genus-g surface has V - 1 + 2g edges
    assert cut.size == mesh.n_vertices - 1 + 2 * g


def test_sliced_surface_is_a_disk(surface):
    mesh, _, cut, _ = surface
    assert TopologyService.slice_euler_characteristic(mesh, cut) == 1


def test_homology_basis_has_2g_simple_loops(surface):
    mesh, _, cut, g = surface
    basis = TopologyService.homology_basis(mesh, cut)
    assert len(basis) == 2 * g
    cut_pairs = {tuple(p) for p in cut.edge_pairs.tolist()}
    for loop in basis.loops:
        assert len(set(loop)) == len(loop)
        for s, t in HomologyBasis.oriented_edges(loop):
            assert (min(s, t), max(s, t)) in cut_pairs


def test_jsonl_dump(torus, tmp_path):
    tree = TopologyService.dual_spanning_tree(torus)
    cut = TopologyService.cut_graph(torus, tree)
    basis = TopologyService.homology_basis(torus, cut)
    path = TopologyService.dump_jsonl(torus, cut, basis, tmp_path / "topology.jsonl")

    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert records[0]["kind"] == "cut_graph"
    assert len(records[0]["edges"]) == cut.size
    loops = [r for r in records if r["kind"] == "loop"]
    assert len(loops) == 2
    for record in loops:
        assert len(record["edges"]) == len(record["vertices"]) == len(record["signs"])
        assert set(record["signs"]) <= {-1, 1}
