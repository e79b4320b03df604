import json
import logging
from pathlib import Path
from typing import List, Tuple, Union

import networkx as nx
import numpy as np

from api.v1.models.mesh import TriMesh
from api.v1.models.topology import DualTree, CutGraph, HomologyBasis
from api.utils.exceptions import DisconnectedMesh, GenusZero

logger = logging.getLogger(__name__)

STAGE = "topology"


class TopologyService:

    @staticmethod
    def dual_graph(mesh: TriMesh) -> nx.Graph:
        """Faces joined across shared edges, edge attribute ``edge`` = primal id"""
        dual = nx.Graph()
        dual.add_nodes_from(range(mesh.n_faces))
        twins = mesh.he_twin
        for h in range(3 * mesh.n_faces):
            t = int(twins[h])
            if h < t:
                dual.add_edge(h // 3, t // 3, edge=int(mesh.he_edge[h]))
        return dual

    @staticmethod
    def dual_spanning_tree(mesh: TriMesh, root: int = 0) -> DualTree:
        """Breadth-first spanning tree of the dual mesh, lowest index first"""
        dual = TopologyService.dual_graph(mesh)
        parent = np.full(mesh.n_faces, -1, dtype=np.int64)
        order = [root]
        crossed = []
        for f, g in nx.bfs_edges(dual, root, sort_neighbors=sorted):
            parent[g] = f
            order.append(g)
            crossed.append(dual.edges[f, g]["edge"])

        if len(order) != mesh.n_faces:
            raise DisconnectedMesh(
                f"dual tree reached {len(order)} of {mesh.n_faces} faces", stage=STAGE
            )
        logger.debug("stage=topology op=dual_tree root=%d edges=%d", root, len(crossed))
        return DualTree(
            root=root,
            parent=parent,
            order=np.array(order, dtype=np.int64),
            crossed_edges=np.array(crossed, dtype=np.int64),
        )

    @staticmethod
    def cut_graph(mesh: TriMesh, dual_tree: DualTree) -> CutGraph:
        """Edges whose duals are not in the tree"""
        in_tree = np.zeros(mesh.n_edges, dtype=bool)
        in_tree[dual_tree.crossed_edges] = True
        ids = np.flatnonzero(~in_tree)
        return CutGraph(edge_pairs=mesh.edges[ids], edge_ids=ids, dual_tree=dual_tree)

    @staticmethod
    def slice_euler_characteristic(mesh: TriMesh, cut: CutGraph) -> int:
        """Euler characteristic of the mesh sliced open along the cut graph.

        Every vertex splits into one copy per wedge between consecutive cut
        edges (one copy when no cut edge touches it); cut edges are doubled.
        """
        degree = np.bincount(cut.edge_pairs.reshape(-1), minlength=mesh.n_vertices)
        copies = int(np.maximum(degree, 1).sum())
        return copies - (mesh.n_edges + cut.size) + mesh.n_faces

    @staticmethod
    def homology_basis(mesh: TriMesh, cut: CutGraph) -> HomologyBasis:
        """One loop per cut-graph edge outside a breadth-first spanning tree"""
        graph = cut.graph()
        root = min(graph.nodes)
        parent = {root: None}
        tree_edges = set()
        for u, v in nx.bfs_edges(graph, root, sort_neighbors=sorted):
            parent[v] = u
            tree_edges.add((min(u, v), max(u, v)))

        loops = []
        for u, w in sorted(map(tuple, cut.edge_pairs.tolist())):
            if (u, w) in tree_edges:
                continue
            up = TopologyService._rootward(parent, u)
            wp = TopologyService._rootward(parent, w)
            while len(up) > 1 and len(wp) > 1 and up[-2] == wp[-2]:
                up.pop()
                wp.pop()
            # up and wp now end at the meeting vertex
            loop = up + wp[-2::-1]
            loops.append(loop)

        if not loops:
            raise GenusZero("cut graph has no edge outside its spanning tree", stage=STAGE)
        logger.info("stage=topology op=homology_basis loops=%d", len(loops))
        return HomologyBasis(loops=loops)

    @staticmethod
    def _rootward(parent: dict, v: int) -> List[int]:
        path = [v]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        return path

    @staticmethod
    def loop_edges(mesh: TriMesh, loop: List[int]) -> List[Tuple[int, int]]:
        """(edge id, sign) for each oriented edge of a closed loop"""
        return [mesh.edge_index(s, t) for s, t in HomologyBasis.oriented_edges(loop)]

    @staticmethod
    def dump_jsonl(mesh: TriMesh, cut: CutGraph, basis: HomologyBasis, path: Union[str, Path]) -> Path:
        """Cut graph and loops as edge-index lists, one JSON object per line"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write(json.dumps({"kind": "cut_graph", "edges": cut.edge_ids.tolist()}) + "\n")
            for k, loop in enumerate(basis.loops):
                edges = TopologyService.loop_edges(mesh, loop)
                fh.write(json.dumps({
                    "kind": "loop",
                    "index": k,
                    "vertices": loop,
                    "edges": [e for e, _ in edges],
                    "signs": [s for _, s in edges],
                }) + "\n")
        return path
