import csv
import heapq
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from api.v1.models.mesh import TriMesh
from api.v1.models.forms import OneForm
from api.v1.models.hodge import CotanWeights, HolomorphicForm
from api.v1.models.topology import CutGraph, DualTree
from api.v1.models.covering import FlatChart
from api.v1.models.distsim import NodeState, DiffusionReport
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService
from api.utils.exceptions import DisconnectedGraph, NonConvergence
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "distsim"


class SyncNetwork:
    """Synchronous rounds over a communication graph.

    Messages queued with ``send`` during round r are delivered by ``step``
    at the start of round r + 1. Sending to a non-neighbour is an error.
    """

    def __init__(self, graph: nx.Graph):
        self.graph = graph
        self.neighbours = {v: frozenset(graph.neighbors(v)) for v in graph.nodes}
        self.round = 0
        self.transcript: List[Tuple[int, int]] = []
        self._outbox: List[Tuple[int, int, Any]] = []

    def send(self, source: int, target: int, payload: Any) -> None:
        if target not in self.neighbours[source]:
            raise RuntimeError(f"message {source}->{target} does not follow a graph edge")
        self._outbox.append((source, target, payload))

    def broadcast(self, source: int, payload: Any) -> None:
        for target in sorted(self.neighbours[source]):
            self.send(source, target, payload)

    def step(self) -> Dict[int, List[Tuple[int, Any]]]:
        """Deliver the queued messages; inbox per node, senders in send order"""
        inbox: Dict[int, List[Tuple[int, Any]]] = defaultdict(list)
        for source, target, payload in self._outbox:
            inbox[target].append((source, payload))
        self.transcript.append((self.round, len(self._outbox)))
        self._outbox = []
        self.round += 1
        return inbox

    @property
    def messages(self) -> int:
        return sum(count for _, count in self.transcript)

    def write_transcript(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "messages"])
            writer.writerows(self.transcript)
        return path


class DistSimService:

    # cut locus

    @staticmethod
    def flood(graph: nx.Graph, seed: int, network: Optional[SyncNetwork] = None) -> Dict[int, NodeState]:
        """Breadth-first flood from the seed; a node adopts the lowest-id sender of its first round"""
        if graph.number_of_nodes() == 0 or not nx.is_connected(graph):
            raise DisconnectedGraph("communication graph is not connected", stage=STAGE)
        network = network or SyncNetwork(graph)
        states = {v: NodeState(node=v) for v in graph.nodes}
        states[seed].hop = 0
        network.broadcast(seed, (0, None))
        while True:
            inbox = network.step()
            if not inbox:
                break
            for v in sorted(inbox):
                state = states[v]
                if state.reached:
                    continue
                sender, (hop, branch) = min(inbox[v], key=lambda m: m[0])
                state.hop = hop + 1
                state.parent = sender
                state.branch = v if branch is None else branch
                state.round = network.round
                network.broadcast(v, (state.hop, state.branch))
        logger.debug("stage=distsim op=flood seed=%d rounds=%d", seed, network.round)
        return states

    @staticmethod
    def flood_cut_locus(
        graph: nx.Graph,
        seed: int,
        mesh: Optional[TriMesh] = None,
        network: Optional[SyncNetwork] = None,
    ) -> CutGraph:
        """Edges where wave fronts from different branches of the flood meet.

        On a bare graph these are the non-tree edges joining two branches.
        With a mesh, faces are added to a dual spanning tree in order of the
        round the wave covered them, and the edges that tree never crosses
        form the cut; they are exactly where the fronts collide.
        """
        states = DistSimService.flood(graph, seed, network)
        if mesh is None:
            pairs = []
            for u, w in graph.edges:
                su, sw = states[u], states[w]
                if su.parent == w or sw.parent == u:
                    continue
                if su.branch != sw.branch:
                    pairs.append((min(u, w), max(u, w)))
            edge_pairs = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
            logger.info("stage=distsim op=cut_locus seed=%d edges=%d", seed, len(edge_pairs))
            return CutGraph(edge_pairs=edge_pairs)

        hop = np.array([states[v].hop for v in range(mesh.n_vertices)])
        covered = hop[mesh.faces].max(axis=1)
        dual = TopologyService.dual_graph(mesh)
        root = int(np.lexsort((np.arange(mesh.n_faces), covered))[0])
        parent = np.full(mesh.n_faces, -1, dtype=np.int64)
        seen = np.zeros(mesh.n_faces, dtype=bool)
        order, crossed = [], []
        heap = [(int(covered[root]), root, -1, -1)]
        while heap:
            _, f, p, edge = heapq.heappop(heap)
            if seen[f]:
                continue
            seen[f] = True
            parent[f] = p
            order.append(f)
            if edge >= 0:
                crossed.append(edge)
            for g in sorted(dual.neighbors(f)):
                if not seen[g]:
                    heapq.heappush(heap, (int(covered[g]), g, f, dual.edges[f, g]["edge"]))

        dual_tree = DualTree(
            root=root,
            parent=parent,
            order=np.array(order, dtype=np.int64),
            crossed_edges=np.array(crossed, dtype=np.int64),
        )
        cut = TopologyService.cut_graph(mesh, dual_tree)
        logger.info(
            "stage=distsim op=cut_locus seed=%d edges=%d chi=%d",
            seed, cut.size, TopologyService.slice_euler_characteristic(mesh, cut),
        )
        return cut

    # harmonic diffusion

    @staticmethod
    def diffuse(
        mesh: TriMesh,
        weights: CotanWeights,
        form: OneForm,
        tolerance: Optional[float] = None,
        max_rounds: Optional[int] = None,
        network: Optional[SyncNetwork] = None,
    ) -> DiffusionReport:
        """Per-node relaxation f_i <- sum_j w_ij (f_j + form[v_i, v_j]) / sum_j w_ij.

        Every round each node sends its value along its mesh edges, then
        moves a damped step towards the weighted average of what its
        neighbours sent. A node only knows its own weights and form values.
        The network must contain every mesh edge; it defaults to the mesh
        edge graph.
        """
        max_rounds = max_rounds or settings.DIFFUSION_MAX_ROUNDS
        damping = settings.DIFFUSION_RELAXATION
        network = network or SyncNetwork(MeshService.communication_graph(mesh))

        tail, head = mesh.edges[:, 0], mesh.edges[:, 1]
        table: Dict[int, Dict[int, Tuple[float, float]]] = defaultdict(dict)
        for a, b, w, value in zip(tail.tolist(), head.tolist(), weights.values.tolist(), form.values.tolist()):
            table[a][b] = (w, value)
            table[b][a] = (w, -value)

        row = np.bincount(tail, weights.values, mesh.n_vertices) + np.bincount(head, weights.values, mesh.n_vertices)
        scale = float(np.abs(row).max()) if len(row) else 0.0
        weak = np.flatnonzero(np.abs(row) <= 1e-12 * max(scale, 1.0))
        if len(weak):
            raise NonConvergence(
                f"weight row sum near zero at node {int(weak[0])} ({len(weak)} nodes)", stage=STAGE
            )
        if tolerance is None:
            source = max((abs(sum(w * f for w, f in table[v].values())) for v in table), default=0.0)
            tolerance = settings.HARMONIC_TOLERANCE * max(1.0, source)

        nodes = range(mesh.n_vertices)
        h = [0.0] * mesh.n_vertices
        residual = float("inf")
        rounds = 0
        while True:
            if rounds >= max_rounds:
                raise NonConvergence(
                    f"residual {residual:.3e} after {rounds} rounds (tolerance {tolerance:.1e})",
                    stage=STAGE,
                    hint="raise DIFFUSION_MAX_ROUNDS or loosen the tolerance",
                )
            for v in nodes:
                for u in table[v]:
                    network.send(v, u, h[v])
            inbox = network.step()
            rounds += 1

            residual = 0.0
            update = list(h)
            for v in nodes:
                known = table[v]
                pull = sum(known[u][0] * (value + known[u][1]) for u, value in inbox[v] if u in known)
                gap = pull - row[v] * h[v]
                residual = max(residual, abs(gap))
                update[v] = h[v] + damping * gap / row[v]
            if not np.isfinite(residual):
                raise NonConvergence(f"diffusion diverged in round {rounds}", stage=STAGE)
            if residual <= tolerance:
                break
            h = update
            if rounds % 500 == 0:
                logger.debug("stage=distsim op=diffuse round=%d residual=%.3e", rounds, residual)

        logger.info(
            "stage=distsim op=diffuse rounds=%d residual=%.3e messages=%d", rounds, residual, network.messages
        )
        values = np.asarray(h)
        return DiffusionReport(form=OneForm(form.values + values[head] - values[tail]), rounds=rounds, residual=residual)

    @staticmethod
    def diffuse_harmonic(
        mesh: TriMesh,
        weights: CotanWeights,
        form: OneForm,
        tolerance: Optional[float] = None,
        max_rounds: Optional[int] = None,
    ) -> OneForm:
        return DistSimService.diffuse(mesh, weights, form, tolerance, max_rounds).form

    # integration

    @staticmethod
    def flood_integrate(
        mesh: TriMesh,
        dual_tree: DualTree,
        form: HolomorphicForm,
        root: int = 0,
        network: Optional[SyncNetwork] = None,
    ) -> FlatChart:
        """Flood phi = (omega, conj) from the root with one copy per (node, face).

        A node passes a copy on to the faces around it that the dual tree
        joins (locally), and to the other corners of the face by messages
        along the face's edges.
        """
        network = network or SyncNetwork(MeshService.communication_graph(mesh))
        he_vals = mesh.he_sign * form.values[mesh.he_edge]
        crossed = np.zeros(mesh.n_edges, dtype=bool)
        crossed[dual_tree.crossed_edges] = True

        start_face = next(int(f) for f in dual_tree.order if root in mesh.faces[f])
        phi: Dict[Tuple[int, int], complex] = {}

        def settle(v: int, f: int, value: complex, fresh: List[Tuple[int, int]]) -> None:
            stack = [(v, f)]
            phi[(v, f)] = value
            while stack:
                u, g = stack.pop()
                fresh.append((u, g))
                for i in range(3):
                    h = 3 * g + i
                    if u not in (mesh.he_source[h], mesh.he_target[h]) or not crossed[mesh.he_edge[h]]:
                        continue
                    other = int(mesh.he_twin[h]) // 3
                    if (u, other) not in phi:
                        phi[(u, other)] = value
                        stack.append((u, other))

        frontier: List[Tuple[int, int]] = []
        settle(root, start_face, 0j, frontier)
        while frontier:
            for v, f in sorted(frontier):
                for w in mesh.faces[f].tolist():
                    if w != v and (w, f) not in phi:
                        network.send(v, w, (f, phi[(v, f)] + he_vals[mesh.halfedge(v, w)]))
            inbox = network.step()
            frontier = []
            for w in sorted(inbox):
                for _, (f, value) in inbox[w]:
                    if (w, f) not in phi:
                        settle(w, f, complex(value), frontier)

        corners = np.array(
            [[phi[(int(v), f)] for v in mesh.faces[f]] for f in range(mesh.n_faces)], dtype=complex
        )
        mismatch = np.abs(corners[:, [1, 2, 0]] - corners - he_vals.reshape(-1, 3))
        span = corners.reshape(-1)
        diameter = float(np.hypot(np.ptp(span.real), np.ptp(span.imag)))
        logger.info(
            "stage=distsim op=flood_integrate rounds=%d messages=%d", network.round, network.messages
        )
        return FlatChart(corners=corners, base=root, closure_residual=float(mismatch.max()), diameter=diameter)

