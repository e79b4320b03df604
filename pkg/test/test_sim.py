import csv

import networkx as nx
import numpy as np
import pytest

from api.v1.models.curve import DiscretePath
from api.v1.models.sim import CSV_HEADER
from api.v1.schemas.run_config import MeshSource, MuleSpec, RunConfig, Strategy
from api.v1.services.pipeline_service import PipelineService
from api.v1.services.sim_service import SimService
from api.utils.exceptions import DisconnectedGraph


def test_euler_tour_doubles_tree_edges(torus_graph):
    n = torus_graph.number_of_nodes()
    tour = SimService.euler_path(torus_graph, 5)
    assert tour.hops == 2 * (n - 1)
    assert tour.vertices[0] == tour.vertices[-1] == 5
    assert set(tour.vertices) == set(torus_graph.nodes)
    assert all(torus_graph.has_edge(u, v) for u, v in zip(tour.vertices[:-1], tour.vertices[1:]))


def test_euler_needs_connected_graph():
    graph = nx.Graph([(0, 1), (2, 3)])
    with pytest.raises(DisconnectedGraph):
        SimService.euler_path(graph, 0)


def test_random_walk_is_seeded(torus_graph):
    a = SimService.random_walk(torus_graph, 0, 50, seed=3)
    b = SimService.random_walk(torus_graph, 0, 50, seed=3)
    c = SimService.random_walk(torus_graph, 0, 50, seed=4)
    assert a.vertices == b.vertices
    assert a.vertices != c.vertices
    assert a.hops == 50
    assert all(torus_graph.has_edge(u, v) for u, v in zip(a.vertices[:-1], a.vertices[1:]))


def test_measure_euler_reaches_full_coverage(torus_graph):
    tour = SimService.euler_path(torus_graph, 0)
    trace = SimService.measure(torus_graph, tour, stride=10)
    coverage = [r.coverage for r in trace.records]
    assert coverage == sorted(coverage)
    assert trace.final_coverage == 1.0
    assert trace.records[-1].avg_dist is None
    assert trace.records[-1].step == tour.hops
    assert all(r.avg_dist >= 1.0 for r in trace.records if r.avg_dist is not None)
    assert trace.milestone(1.0) is not None
    assert trace.milestone(0.5) <= trace.milestone(1.0)


def test_stride_beyond_path_gives_single_row(torus_graph):
    path = SimService.random_walk(torus_graph, 0, 20, seed=1)
    trace = SimService.measure(torus_graph, path, stride=1000)
    assert len(trace.records) == 1
    assert trace.records[0].step == 20


def test_average_distance_on_a_path_graph():
    graph = nx.path_graph(5)
    trace = SimService.measure(graph, DiscretePath(vertices=[0, 1], strategy="manual"), stride=1)
    # visited {0, 1}: nodes 2, 3, 4 are 1, 2, 3 hops away
    assert trace.records[-1].visited == 2
    assert trace.records[-1].avg_dist == pytest.approx(2.0)
    assert trace.distance_at(2) == pytest.approx(2.0)


def test_fleet_overlap(torus_graph):
    paths = [SimService.euler_path(torus_graph, 0), SimService.random_walk(torus_graph, 40, 30, seed=2)]
    fleet = SimService.evaluate_fleet(torus_graph, paths, stride=8, early_count=6)
    assert fleet.joint.final_coverage == 1.0
    assert fleet.overlap[0, 0] == torus_graph.number_of_nodes()
    assert fleet.overlap[1, 1] == len(set(paths[1].vertices))
    assert np.array_equal(fleet.overlap, fleet.overlap.T)
    assert fleet.early_overlap[0, 0] == 6
    assert fleet.early_overlap.max() <= 6
    assert fleet.labels == ["mule0", "mule1"]


def test_dense_path_on_flat_torus(torus, flat_atlas, torus_graph):
    path = SimService.dense_path(torus, flat_atlas, torus_graph, hops=80, start=0)
    assert path.vertices[0] == 0
    assert 0 < path.hops <= 80
    assert all(torus_graph.has_edge(u, v) for u, v in zip(path.vertices[:-1], path.vertices[1:]))


def test_plan_per_strategy(torus, flat_atlas, torus_graph):
    euler = SimService.plan(torus, flat_atlas, torus_graph, MuleSpec(strategy=Strategy.EULER), 30, 7)
    assert euler.vertices[0] == 7 and euler.hops == 30
    walk = SimService.plan(torus, flat_atlas, torus_graph, MuleSpec(strategy=Strategy.RANDOM_WALK, start=3), 30, 7)
    assert walk.vertices[0] == 3 and walk.hops == 30


def test_compare_and_summarize(torus, flat_atlas, torus_graph, tmp_path):
    n = torus_graph.number_of_nodes()
    traces = SimService.compare(
        torus_graph, torus, flat_atlas, [Strategy.EULER, Strategy.RANDOM_WALK], 3 * n, 0,
        seed=5, walk_seeds=3, stride=4,
    )
    assert len(traces["euler"]) == 1
    assert [t.seed for t in traces["random_walk"]] == [5, 6, 7]

    summary = SimService.summarize(traces, n)
    assert summary.milestones["euler"]["100%"] is not None
    assert set(summary.milestones) == {"euler", "random_walk[5]", "random_walk[6]", "random_walk[7]"}
    assert set(summary.distances["euler"]) == {"10%", "25%"}

    path = SimService.write_traces(traces["random_walk"], tmp_path / "trace_random_walk.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert {r[5] for r in rows[1:]} == {"5", "6", "7"}

    again = SimService.compare(
        torus_graph, torus, flat_atlas, [Strategy.RANDOM_WALK], 3 * n, 0, seed=5, walk_seeds=3, stride=4,
    )
    second = SimService.write_traces(again["random_walk"], tmp_path / "again.csv")
    assert second.read_bytes() == path.read_bytes()


def test_run_fleet_labels(torus, flat_atlas, torus_graph, tmp_path):
    mules = [MuleSpec(strategy=Strategy.EULER, start=0), MuleSpec(strategy=Strategy.RANDOM_WALK, start=20, seed=1)]
    fleet = SimService.run_fleet(torus_graph, torus, flat_atlas, mules, hops=40, stride=5)
    assert fleet.labels == ["0:euler", "1:random_walk"]
    path = SimService.write_overlap(fleet, tmp_path / "overlap.csv")
    with path.open() as fh:
        header = next(csv.reader(fh))
    assert header == ["mule", "0:euler", "1:random_walk", "early:0:euler", "early:1:random_walk"]

    with pytest.raises(ValueError):
        SimService.run_fleet(torus_graph, torus, flat_atlas, [], hops=10)


def _genus_two_traces(res, walk_seeds):
    result = PipelineService.run(RunConfig(mesh=MeshSource(generate=f"genus=2,res={res}"), seed=7))
    n = result.graph.number_of_nodes()
    traces = SimService.compare(
        result.graph, result.mesh, result.atlas, [Strategy.DENSE, Strategy.EULER, Strategy.RANDOM_WALK],
        3 * n, result.start_vertex, seed=0, slope=result.slope, walk_seeds=walk_seeds, delta=result.delta,
    )
    return n, traces


def _hops_to(trace, fraction):
    step = trace.milestone(fraction)
    return np.inf if step is None else step


@pytest.mark.slow
def test_dense_coverage_milestones_on_genus_two():
    n, traces = _genus_two_traces(16, walk_seeds=20)
    dense = traces["dense"][0]
    assert _hops_to(dense, 0.9) <= 1.5 * n
    assert _hops_to(dense, 1.0) <= 2.5 * n
    # no random walk reaches 90 % before the dense curve does
    assert all(_hops_to(walk, 0.9) >= _hops_to(dense, 0.9) for walk in traces["random_walk"])


@pytest.mark.slow
def test_dense_keeps_unvisited_nodes_close_on_genus_two():
    n, traces = _genus_two_traces(32, walk_seeds=5)
    early = max(1, n // 10)
    dense = traces["dense"][0].distance_at(early)
    euler = traces["euler"][0].distance_at(early)
    walks = np.mean([walk.distance_at(early) for walk in traces["random_walk"]])
    assert dense <= 0.35 * euler
    assert dense <= 0.25 * walks
