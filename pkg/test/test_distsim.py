import csv

import networkx as nx
import numpy as np
import pytest

from api.v1.models.forms import OneForm
from api.v1.models.hodge import CotanWeights
from api.v1.services.covering_service import CoveringService
from api.v1.services.distsim_service import DistSimService, SyncNetwork
from api.v1.services.forms_service import FormsService
from api.v1.services.hodge_service import HodgeService
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService
from api.utils.exceptions import DisconnectedGraph, NonConvergence


def test_network_enforces_locality():
    network = SyncNetwork(nx.path_graph(3))
    network.send(0, 1, "hello")
    with pytest.raises(RuntimeError):
        network.send(0, 2, "too far")
    inbox = network.step()
    assert inbox[1] == [(0, "hello")]
    assert network.round == 1
    assert network.messages == 1


def test_transcript_csv(tmp_path):
    network = SyncNetwork(nx.cycle_graph(4))
    network.broadcast(0, None)
    network.step()
    for v in range(4):
        network.broadcast(v, None)
    network.step()
    path = network.write_transcript(tmp_path / "transcript.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows == [["round", "messages"], ["0", "2"], ["1", "8"]]


def test_flood_hops_match_shortest_paths(torus_graph):
    states = DistSimService.flood(torus_graph, 0)
    lengths = nx.single_source_shortest_path_length(torus_graph, 0)
    assert all(states[v].hop == lengths[v] for v in torus_graph.nodes)
    assert states[0].parent is None
    for v, state in states.items():
        if v == 0:
            continue
        assert torus_graph.has_edge(v, state.parent)
        assert states[state.parent].hop == state.hop - 1
        assert state.branch in set(torus_graph.neighbors(0))


def test_flood_rejects_disconnected_graph():
    with pytest.raises(DisconnectedGraph):
        DistSimService.flood(nx.Graph([(0, 1), (2, 3)]), 0)


def test_graph_cut_locus_on_cycle():
    # fronts from the two branches of a 6-cycle meet on the far edge
    cut = DistSimService.flood_cut_locus(nx.cycle_graph(6), 0)
    assert cut.edge_pairs.tolist() == [[3, 4]]


def test_mesh_cut_locus_slices_a_disk(torus, torus_graph):
    for seed in (0, 27):
        cut = DistSimService.flood_cut_locus(torus_graph, seed, mesh=torus)
        assert TopologyService.slice_euler_characteristic(torus, cut) == 1
        assert cut.dual_tree.n_edges == torus.n_faces - 1
        assert len(TopologyService.homology_basis(torus, cut)) == 2


def test_flood_integration_matches_central(torus, torus_tree, flat_form):
    central = CoveringService.integrate(torus, torus_tree, flat_form, base=0)
    flooded = DistSimService.flood_integrate(torus, torus_tree, flat_form, root=0)
    assert np.abs(flooded.corners - central.corners).max() < 1e-12
    assert flooded.closure_residual < 1e-12


def test_flood_integration_over_flood_tree(torus, torus_graph, flat_form):
    cut = DistSimService.flood_cut_locus(torus_graph, 9, mesh=torus)
    network = SyncNetwork(torus_graph)
    central = CoveringService.integrate(torus, cut.dual_tree, flat_form, base=9)
    flooded = DistSimService.flood_integrate(torus, cut.dual_tree, flat_form, root=9, network=network)
    assert np.abs(flooded.corners - central.corners).max() < 1e-12
    assert network.messages > 0


def test_diffusion_reaches_harmonic_form(torus, torus_tree, torus_graph):
    cut = TopologyService.cut_graph(torus, torus_tree)
    basis = TopologyService.homology_basis(torus, cut)
    closed = FormsService.cohomology_basis(torus, basis)[0]
    weights = HodgeService.cotan_weights(torus)

    network = SyncNetwork(torus_graph)
    report = DistSimService.diffuse(torus, weights, closed, tolerance=1e-11, network=network)
    harmonic = HodgeService.harmonize(torus, weights, closed)
    assert report.rounds > 0
    assert report.residual <= 1e-11
    assert np.abs(report.form.values - harmonic.values).max() < 1e-6
    assert network.round == report.rounds


def test_diffusion_round_budget(torus, torus_tree):
    cut = TopologyService.cut_graph(torus, torus_tree)
    basis = TopologyService.homology_basis(torus, cut)
    closed = FormsService.cohomology_basis(torus, basis)[0]
    weights = HodgeService.cotan_weights(torus)
    with pytest.raises(NonConvergence):
        DistSimService.diffuse(torus, weights, closed, tolerance=1e-14, max_rounds=2)


def test_diffusion_rejects_zero_weights(torus, torus_tree):
    cut = TopologyService.cut_graph(torus, torus_tree)
    basis = TopologyService.homology_basis(torus, cut)
    closed = FormsService.cohomology_basis(torus, basis)[0]
    with pytest.raises(NonConvergence):
        DistSimService.diffuse(torus, CotanWeights(np.zeros(torus.n_edges)), closed)


def test_diffusion_exchanges_values_along_edges(torus, torus_tree, torus_graph):
    cut = TopologyService.cut_graph(torus, torus_tree)
    basis = TopologyService.homology_basis(torus, cut)
    closed = FormsService.cohomology_basis(torus, basis)[0]
    weights = HodgeService.cotan_weights(torus)

    network = SyncNetwork(torus_graph)
    report = DistSimService.diffuse(torus, weights, closed, tolerance=1e-9, network=network)
    # each node sends its value to every neighbour once per round
    assert network.transcript == [(r, 2 * torus.n_edges) for r in range(report.rounds)]


def test_diffusion_needs_mesh_edges(torus, torus_tree):
    cut = TopologyService.cut_graph(torus, torus_tree)
    basis = TopologyService.homology_basis(torus, cut)
    closed = FormsService.cohomology_basis(torus, basis)[0]
    weights = HodgeService.cotan_weights(torus)
    partial = nx.Graph()
    partial.add_nodes_from(range(torus.n_vertices))
    partial.add_edges_from(map(tuple, torus.edges[:-1].tolist()))
    with pytest.raises(RuntimeError):
        DistSimService.diffuse(torus, weights, closed, network=SyncNetwork(partial))


def test_diffusion_of_exact_form_vanishes(torus):
    weights = HodgeService.cotan_weights(torus)
    potential = np.sin(np.arange(torus.n_vertices, dtype=float))
    exact = OneForm(FormsService.d0_matrix(torus) @ potential)
    report = DistSimService.diffuse(torus, weights, exact, tolerance=1e-10)
    assert np.abs(report.form.values).max() < 1e-7


def test_genus_two_flood_matches_central(genus2, genus2_forms):
    _, _, _, harmonic = genus2_forms
    graph = MeshService.communication_graph(genus2)
    cut = DistSimService.flood_cut_locus(graph, 0, mesh=genus2)
    assert TopologyService.slice_euler_characteristic(genus2, cut) == 1
    assert len(TopologyService.homology_basis(genus2, cut)) == 4

    form = HodgeService.holomorphic_from_harmonic(genus2, harmonic)[0]
    central = CoveringService.integrate(genus2, cut.dual_tree, form, base=0)
    flooded = DistSimService.flood_integrate(genus2, cut.dual_tree, form, root=0)
    assert np.abs(flooded.corners - central.corners).max() <= 1e-8


@pytest.mark.slow
def test_genus_two_diffusion_matches_central(genus2, genus2_forms):
    _, closed, weights, harmonic = genus2_forms
    network = SyncNetwork(MeshService.communication_graph(genus2))
    report = DistSimService.diffuse(genus2, weights, closed[1], tolerance=1e-11, network=network)
    assert np.abs(report.form.values - harmonic[1].values).max() <= 1e-6
    assert network.round == report.rounds
