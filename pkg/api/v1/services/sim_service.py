import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import dijkstra

from api.v1.models.mesh import TriMesh
from api.v1.models.covering import CoveringAtlas
from api.v1.models.curve import DiscretePath
from api.v1.models.sim import CSV_HEADER, SimRecord, SimTrace, FleetResult, SimSummary
from api.v1.models.artifact import RunManifest
from api.v1.schemas.run_config import MuleSpec, RunConfig, Strategy
from api.v1.services.artifact_service import ArtifactService
from api.v1.services.curve_service import CurveService, DEFAULT_SLOPE
from api.utils import rng as streams
from api.utils.exceptions import DisconnectedGraph
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "sim"
MILESTONES = (0.5, 0.9, 0.99, 1.0)
DISTANCE_FRACTIONS = (0.10, 0.25)


class SimService:

    # baselines

    @staticmethod
    def euler_path(graph: nx.Graph, root: int) -> DiscretePath:
        """Tour of a breadth-first spanning tree with every edge doubled"""
        if graph.number_of_nodes() == 0 or not nx.is_connected(graph):
            raise DisconnectedGraph("graph is not connected", stage=STAGE)
        tree = nx.bfs_tree(graph, root, sort_neighbors=sorted)
        path = [root]
        for u, v, kind in nx.dfs_labeled_edges(tree, root):
            if u == v:
                continue
            if kind == "forward":
                path.append(v)
            elif kind == "reverse":
                path.append(u)
        return DiscretePath(vertices=path, strategy=Strategy.EULER.value)

    @staticmethod
    def random_walk(graph: nx.Graph, start: int, steps: int, seed: int = 0) -> DiscretePath:
        """Uniform neighbour choice per hop from the random-walk sub-stream"""
        generator = streams.substream(seed, streams.RANDOM_WALK)
        neighbours = {v: sorted(graph.neighbors(v)) for v in graph.nodes}
        path = [start]
        current = start
        for _ in range(steps):
            options = neighbours[current]
            if not options:
                break
            current = options[int(generator.integers(len(options)))]
            path.append(current)
        return DiscretePath(vertices=path, strategy=Strategy.RANDOM_WALK.value)

    @staticmethod
    def dense_path(
        mesh: TriMesh,
        atlas: CoveringAtlas,
        graph: nx.Graph,
        hops: int,
        start: Optional[int] = None,
        slope: float = DEFAULT_SLOPE,
        seed: int = 0,
        delta: Optional[float] = None,
    ) -> DiscretePath:
        """Discretized dense curve with at least ``hops`` hops, unless the belt saturates first"""
        start = atlas.handles[0].base_vertex if start is None else start
        flat_start = CurveService.vertex_start(mesh, atlas, start)
        k = CurveService.choose_slope(mesh, atlas, seed, slope=slope, start=flat_start)
        length = hops * atlas.mean_edge_length
        path = None
        for _ in range(6):
            curve = CurveService.trace_dense(mesh, atlas, k, length, start=flat_start)
            surface = CurveService.pullback(curve, atlas, mesh)
            grown = CurveService.discretize(surface, atlas, mesh, graph, delta, start)
            if path is not None and grown.hops == path.hops:
                break
            path = grown
            if path.hops >= hops:
                break
            length *= 2.0
        return path.truncate(hops)

    # metrics

    @staticmethod
    def _first_visit(path: Sequence[int], index: Dict[int, int], n: int) -> np.ndarray:
        first = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        for step, v in enumerate(path):
            i = index[v]
            if first[i] > step:
                first[i] = step
        return first

    @staticmethod
    def _steps(last: int, stride: int) -> List[int]:
        steps = list(range(stride, last + 1, stride))
        if not steps or steps[-1] != last:
            steps.append(last)
        return steps

    @staticmethod
    def _trace(graph: nx.Graph, first: np.ndarray, last: int, stride: Optional[int], strategy: str, seed: int) -> SimTrace:
        nodes = sorted(graph.nodes)
        n = len(nodes)
        adjacency = nx.to_scipy_sparse_array(graph, nodelist=nodes, format="csr")
        stride = stride or max(1, n // 100)
        trace = SimTrace(strategy=strategy, seed=seed, n_nodes=n)
        for step in SimService._steps(last, stride):
            visited = first <= step
            count = int(visited.sum())
            avg = None
            if count < n:
                dist = dijkstra(adjacency, directed=False, indices=np.flatnonzero(visited), unweighted=True, min_only=True)
                avg = float(dist[~visited].mean())
            trace.records.append(SimRecord(step=step, visited=count, coverage=count / n, avg_dist=avg))
        logger.debug(
            "stage=sim op=measure strategy=%s seed=%d steps=%d coverage=%.4f",
            strategy, seed, last, trace.final_coverage,
        )
        return trace

    @staticmethod
    def measure(graph: nx.Graph, path: DiscretePath, stride: Optional[int] = None, seed: int = 0) -> SimTrace:
        """Coverage and average hop distance to the visited set every ``stride`` hops"""
        nodes = sorted(graph.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        first = SimService._first_visit(path.vertices, index, len(nodes))
        return SimService._trace(graph, first, path.hops, stride, path.strategy, seed)

    # fleets

    @staticmethod
    def plan(
        mesh: TriMesh,
        atlas: CoveringAtlas,
        graph: nx.Graph,
        mule: MuleSpec,
        hops: int,
        default_start: int,
        delta: Optional[float] = None,
    ) -> DiscretePath:
        start = default_start if mule.start is None else mule.start
        if mule.strategy == Strategy.DENSE:
            slope = DEFAULT_SLOPE if mule.slope is None else mule.slope
            return SimService.dense_path(mesh, atlas, graph, hops, start, slope, mule.seed, delta)
        if mule.strategy == Strategy.EULER:
            return SimService.euler_path(graph, start).truncate(hops)
        return SimService.random_walk(graph, start, hops, mule.seed)

    @staticmethod
    def _overlap(sets: Sequence[set]) -> np.ndarray:
        m = len(sets)
        matrix = np.zeros((m, m), dtype=int)
        for i in range(m):
            for j in range(m):
                matrix[i, j] = len(sets[i] & sets[j])
        return matrix

    @staticmethod
    def _first_distinct(path: Sequence[int], count: int) -> set:
        found = set()
        for v in path:
            if len(found) == count:
                break
            found.add(v)
        return found

    @staticmethod
    def evaluate_fleet(
        graph: nx.Graph,
        paths: Sequence[DiscretePath],
        stride: Optional[int] = None,
        early_count: Optional[int] = None,
        labels: Optional[List[str]] = None,
    ) -> FleetResult:
        """Lockstep evaluation: one hop per mule per round"""
        nodes = sorted(graph.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        n = len(nodes)
        early_count = early_count or max(1, n // 10)
        rounds = max(p.hops for p in paths)
        traces = [SimService.measure(graph, p, stride) for p in paths]
        firsts = [SimService._first_visit(p.vertices, index, n) for p in paths]
        joint = SimService._trace(graph, np.minimum.reduce(firsts), rounds, stride, "fleet", 0)
        overlap = SimService._overlap([set(p.vertices) for p in paths])
        early = SimService._overlap([SimService._first_distinct(p.vertices, early_count) for p in paths])
        logger.info(
            "stage=sim op=fleet mules=%d rounds=%d joint_coverage=%.4f",
            len(paths), rounds, joint.final_coverage,
        )
        return FleetResult(
            traces=traces,
            joint=joint,
            overlap=overlap,
            early_overlap=early,
            early_count=early_count,
            labels=labels or [f"mule{i}" for i in range(len(paths))],
        )

    @staticmethod
    def run_fleet(
        graph: nx.Graph,
        mesh: TriMesh,
        atlas: CoveringAtlas,
        mules: Sequence[MuleSpec],
        hops: int,
        stride: Optional[int] = None,
        delta: Optional[float] = None,
    ) -> FleetResult:
        if not mules:
            raise ValueError("a fleet needs at least one mule")
        base = atlas.handles[0].base_vertex
        paths = [SimService.plan(mesh, atlas, graph, mule, hops, base, delta) for mule in mules]
        labels = [f"{i}:{m.strategy.value}" for i, m in enumerate(mules)]
        return SimService.evaluate_fleet(graph, paths, stride, labels=labels)

    # strategy comparison

    @staticmethod
    def compare(
        graph: nx.Graph,
        mesh: TriMesh,
        atlas: CoveringAtlas,
        strategies: Sequence[Strategy],
        hops: int,
        start: int,
        seed: int = 0,
        slope: float = DEFAULT_SLOPE,
        walk_seeds: int = 20,
        stride: Optional[int] = None,
        delta: Optional[float] = None,
    ) -> Dict[str, List[SimTrace]]:
        """Traces per strategy; random walks run once per seed, concurrently"""
        jobs = []
        for strategy in strategies:
            if strategy == Strategy.RANDOM_WALK:
                jobs.extend((strategy, seed + k) for k in range(walk_seeds))
            else:
                jobs.append((strategy, seed))

        def run(job):
            strategy, job_seed = job
            mule = MuleSpec(strategy=strategy, start=start, slope=slope, seed=job_seed)
            path = SimService.plan(mesh, atlas, graph, mule, hops, start, delta)
            return strategy.value, SimService.measure(graph, path, stride, job_seed)

        with ThreadPoolExecutor(max_workers=max(1, settings.THREADS)) as pool:
            results = list(pool.map(run, jobs))

        traces: Dict[str, List[SimTrace]] = {s.value: [] for s in strategies}
        for name, trace in results:
            traces[name].append(trace)
        logger.info(
            "stage=sim op=compare strategies=%s runs=%d hops=%d",
            ",".join(traces), len(results), hops,
        )
        return traces

    @staticmethod
    def summarize(traces: Dict[str, List[SimTrace]], n_nodes: int) -> SimSummary:
        """Milestones (hops to 50/90/99/100 % coverage) and distances at 10/25 % of V visited"""
        milestones, distances = {}, {}
        for name, runs in traces.items():
            for trace in runs:
                key = name if len(runs) == 1 else f"{name}[{trace.seed}]"
                milestones[key] = {f"{int(f * 100)}%": trace.milestone(f) for f in MILESTONES}
                distances[key] = {
                    f"{int(f * 100)}%": trace.distance_at(max(1, int(f * n_nodes))) for f in DISTANCE_FRACTIONS
                }
        return SimSummary(n_nodes=n_nodes, milestones=milestones, distances=distances)

    # export

    @staticmethod
    def write_traces(traces: Sequence[SimTrace], path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for trace in traces:
                writer.writerows(trace.rows())
        return path

    @staticmethod
    def write_overlap(fleet: FleetResult, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["mule"] + fleet.labels + [f"early:{label}" for label in fleet.labels])
            for label, row, early in zip(fleet.labels, fleet.overlap.tolist(), fleet.early_overlap.tolist()):
                writer.writerow([label] + row + early)
        return path

    # orchestration

    @staticmethod
    def simulate(
        graph: nx.Graph,
        mesh: TriMesh,
        atlas: CoveringAtlas,
        config: RunConfig,
        start: int,
        slope: float,
        delta: float,
        directory: Optional[Union[str, Path]] = None,
        manifest: Optional[RunManifest] = None,
    ) -> Tuple[SimSummary, Optional[FleetResult]]:
        """Strategy comparison plus the configured fleet; CSVs when a directory is given"""
        n = graph.number_of_nodes()
        hops = config.hops or 3 * n
        traces = SimService.compare(
            graph, mesh, atlas, config.strategies, hops, start,
            seed=config.seed, slope=slope, walk_seeds=config.walk_seeds, stride=config.stride, delta=delta,
        )
        summary = SimService.summarize(traces, n)
        fleet = None
        if config.fleet:
            fleet = SimService.run_fleet(graph, mesh, atlas, config.fleet, hops, config.stride, delta)

        if directory is not None:
            directory = Path(directory)
            for name, runs in traces.items():
                path = SimService.write_traces(runs, directory / f"trace_{name}.csv")
                if manifest is not None:
                    ArtifactService.register(manifest, directory, path, "csv")
            if fleet is not None:
                written = [
                    SimService.write_traces(fleet.traces + [fleet.joint], directory / "fleet_traces.csv"),
                    SimService.write_overlap(fleet, directory / "fleet_overlap.csv"),
                ]
                if manifest is not None:
                    for path in written:
                        ArtifactService.register(manifest, directory, path, "csv")
            if manifest is not None:
                payload = {"summary": summary.to_dict(), "fleet": fleet.to_dict() if fleet else None}
                ArtifactService.write_json(manifest, directory, "simulation.json", payload)
        return summary, fleet
