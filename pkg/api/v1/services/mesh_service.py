import hashlib
import logging
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from api.v1.models.mesh import TriMesh
from api.utils.exceptions import (
    ParseError,
    NonManifold,
    InconsistentOrientation,
    DegenerateFace,
    NonInteger,
    GenusZero,
)

logger = logging.getLogger(__name__)

STAGE = "mesh"
AREA_EPS = 1e-14


class MeshService:

    @staticmethod
    def build(vertices, faces) -> TriMesh:
        """Validate an indexed triangle soup and derive halfedge connectivity"""
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] < 3:
            raise ParseError("vertex array must be (V, 3) or wider", stage=STAGE)
        if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
            raise ParseError("face array must be a non-empty (F, 3)", stage=STAGE)
        V = len(vertices)
        if faces.min() < 0 or faces.max() >= V:
            raise ParseError("face references a vertex out of range", stage=STAGE)
        if not np.isfinite(vertices).all():
            raise ParseError("non-finite vertex coordinate", stage=STAGE)

        repeated = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 2] == faces[:, 0])
        )
        if repeated.any():
            raise DegenerateFace(
                f"face {int(np.flatnonzero(repeated)[0])} repeats a vertex", stage=STAGE
            )

        src = faces.reshape(-1)
        dst = faces[:, [1, 2, 0]].reshape(-1)
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        undirected = lo * V + hi
        keys, he_edge, counts = np.unique(undirected, return_inverse=True, return_counts=True)
        if (counts != 2).any():
            bad = int(keys[np.flatnonzero(counts != 2)[0]])
            raise NonManifold(
                f"edge ({bad // V}, {bad % V}) bounds {int(counts[counts != 2][0])} faces",
                stage=STAGE,
            )

        directed = src * V + dst
        order = np.argsort(directed, kind="stable")
        sorted_keys = directed[order]
        if (np.diff(sorted_keys) == 0).any():
            dup = int(sorted_keys[np.flatnonzero(np.diff(sorted_keys) == 0)[0]])
            raise InconsistentOrientation(
                f"halfedge {dup // V}->{dup % V} appears twice", stage=STAGE
            )
        reverse = dst * V + src
        pos = np.searchsorted(sorted_keys, reverse)
        he_twin = order[pos]

        used = np.zeros(V, dtype=bool)
        used[src] = True
        if not used.all():
            raise ParseError(
                f"vertex {int(np.flatnonzero(~used)[0])} belongs to no face", stage=STAGE
            )

        # one fan of faces per vertex: rotating around v must reach every outgoing halfedge
        he = np.arange(len(src))
        rotate = he_twin[3 * (he // 3) + (he + 2) % 3]
        _, fan = connected_components(
            coo_matrix((np.ones(len(he)), (he, rotate)), shape=(len(he), len(he))), directed=False
        )
        fans = np.bincount(np.unique(np.stack([src, fan], axis=1), axis=0)[:, 0], minlength=V)
        if (fans > 1).any():
            pinched = int(np.flatnonzero(fans > 1)[0])
            raise NonManifold(
                f"vertex {pinched} joins {int(fans[pinched])} separate fans of faces", stage=STAGE
            )

        vertex_halfedge = np.empty(V, dtype=np.int64)
        vertex_halfedge[src[::-1]] = np.arange(len(src))[::-1]

        edges = np.stack([keys // V, keys % V], axis=1)
        mesh = TriMesh(
            vertices=vertices,
            faces=faces,
            edges=edges,
            he_twin=he_twin,
            he_edge=he_edge,
            vertex_halfedge=vertex_halfedge,
        )
        if (mesh.face_areas <= AREA_EPS).any():
            raise DegenerateFace(
                f"face {int(np.argmin(mesh.face_areas))} has zero area", stage=STAGE
            )
        return mesh

    @staticmethod
    def genus(mesh: TriMesh) -> int:
        """Genus from the Euler characteristic"""
        twice = 2 - mesh.euler_characteristic
        if twice % 2 != 0 or twice < 0:
            raise NonInteger(f"2 - chi = {twice} is not a non-negative even number", stage=STAGE)
        return twice // 2

    @staticmethod
    def require_handles(mesh: TriMesh) -> int:
        g = MeshService.genus(mesh)
        if g < 1:
            raise GenusZero("surface has genus 0", stage=STAGE)
        return g

    @staticmethod
    def face_components(mesh: TriMesh) -> int:
        F = mesh.n_faces
        rows = np.repeat(np.arange(F), 3)
        adj = coo_matrix((np.ones(3 * F), (rows, mesh.face_adjacency.reshape(-1))), shape=(F, F))
        count, _ = connected_components(adj, directed=False)
        return int(count)

    # file IO

    @staticmethod
    def load_mesh(path: Union[str, Path], format: Optional[str] = None) -> TriMesh:
        """Load an ASCII OFF or OBJ triangle mesh"""
        path = Path(path)
        fmt = (format or path.suffix.lstrip(".")).upper()
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}", stage=STAGE) from exc

        if fmt == "OFF":
            vertices, faces = MeshService._parse_off(text)
        elif fmt == "OBJ":
            vertices, faces = MeshService._parse_obj(text)
        else:
            raise ParseError(f"unsupported mesh format '{fmt}'", stage=STAGE)

        mesh = MeshService.build(vertices, faces)
        g = MeshService.genus(mesh)
        logger.info(
            "stage=mesh op=load path=%s V=%d E=%d F=%d genus=%d",
            path, mesh.n_vertices, mesh.n_edges, mesh.n_faces, g,
        )
        if g == 0:
            logger.warning("stage=mesh op=load path=%s genus=0 pipeline will reject it", path)
        return mesh

    @staticmethod
    def _parse_off(text: str):
        tokens = [
            line.split("#", 1)[0].split()
            for line in text.splitlines()
        ]
        lines = [t for t in tokens if t]
        if not lines or lines[0][0] != "OFF":
            raise ParseError("missing OFF header", stage=STAGE)
        header = lines[0][1:] or (lines[1] if len(lines) > 1 else [])
        body = lines[1:] if lines[0][1:] else lines[2:]
        try:
            n_vertices, n_faces = int(header[0]), int(header[1])
            vertices = [[float(x) for x in row[:3]] for row in body[:n_vertices]]
            faces = []
            for row in body[n_vertices:n_vertices + n_faces]:
                if int(row[0]) != 3:
                    raise ParseError(f"non-triangular face {row}", stage=STAGE)
                faces.append([int(i) for i in row[1:4]])
        except (ValueError, IndexError) as exc:
            raise ParseError(f"malformed OFF body: {exc}", stage=STAGE) from exc
        if len(vertices) != n_vertices or len(faces) != n_faces:
            raise ParseError("OFF counts do not match body", stage=STAGE)
        return np.array(vertices), np.array(faces)

    @staticmethod
    def _parse_obj(text: str):
        vertices, faces = [], []
        try:
            for line in text.splitlines():
                parts = line.split("#", 1)[0].split()
                if not parts:
                    continue
                if parts[0] == "v":
                    vertices.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    if len(parts) != 4:
                        raise ParseError(f"non-triangular face '{line}'", stage=STAGE)
                    faces.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
        except ValueError as exc:
            raise ParseError(f"malformed OBJ line: {exc}", stage=STAGE) from exc
        return np.array(vertices), np.array(faces)

    @staticmethod
    def write_mesh(mesh: TriMesh, path: Union[str, Path], format: Optional[str] = None) -> Path:
        """Write OFF or OBJ with shortest round-trip decimal coordinates"""
        path = Path(path)
        fmt = (format or path.suffix.lstrip(".")).upper()
        if mesh.vertices.shape[1] != 3:
            raise ParseError(f"cannot write a mesh embedded in {mesh.vertices.shape[1]} dimensions", stage=STAGE)
        out = []
        if fmt == "OFF":
            out.append("OFF")
            out.append(f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}")
            out.extend(" ".join(repr(float(x)) for x in p) for p in mesh.vertices)
            out.extend(f"3 {a} {b} {c}" for a, b, c in mesh.faces)
        elif fmt == "OBJ":
            out.extend("v " + " ".join(repr(float(x)) for x in p) for p in mesh.vertices)
            out.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces)
        else:
            raise ParseError(f"unsupported mesh format '{fmt}'", stage=STAGE)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(out) + "\n")
        return path

    @staticmethod
    def mesh_digest(mesh: TriMesh) -> str:
        """SHA-256 over positions and faces"""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
        digest.update(np.ascontiguousarray(mesh.faces, dtype="<i8").tobytes())
        return digest.hexdigest()

    # generators

    @staticmethod
    def _torus_grid(n: int, m: int, R: float, r: float, center=(0.0, 0.0, 0.0)):
        """Vertices and quads of a torus of revolution, grid offset by half a cell"""
        u = 2 * np.pi * (np.arange(n) + 0.5) / n
        v = 2 * np.pi * (np.arange(m) + 0.5) / m
        uu, vv = np.meshgrid(u, v, indexing="ij")
        ring = R + r * np.cos(vv)
        pts = np.stack(
            [ring * np.cos(uu) + center[0], ring * np.sin(uu) + center[1], r * np.sin(vv) + center[2]],
            axis=-1,
        ).reshape(-1, 3)
        idx = lambda i, j: (i % n) * m + (j % m)
        quads = {}
        for i in range(n):
            for j in range(m):
                quads[(i, j)] = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1))
        return pts, quads

    @staticmethod
    def generate_torus_grid(n: int, m: Optional[int] = None, R: float = 2.0, r: float = 1.0) -> TriMesh:
        """n x m grid torus: V = n*m, F = 2*n*m"""
        m = m or n
        if n < 3 or m < 3:
            raise ValueError("torus grid needs n, m >= 3")
        pts, quads = MeshService._torus_grid(n, m, R, r)
        faces = []
        for a, b, c, d in quads.values():
            faces.append((a, b, c))
            faces.append((a, c, d))
        return MeshService.build(pts, np.array(faces))

    @staticmethod
    def generate_flat_torus(n: int, m: Optional[int] = None) -> TriMesh:
        """Intrinsically flat n x m grid torus, embedded in R^4 as a product of two circles.

        Grid cells are exact rectangles with aspect ratio one, so the diagonal
        cotangent weights vanish. Same vertex and face numbering as
        ``generate_torus_grid``.
        """
        m = m or n
        if n < 3 or m < 3:
            raise ValueError("flat torus needs n, m >= 3")
        u = 2 * np.pi * (np.arange(n) + 0.5) / n
        v = 2 * np.pi * (np.arange(m) + 0.5) / m
        uu, vv = np.meshgrid(u, v, indexing="ij")
        rho = np.sin(np.pi / n) / np.sin(np.pi / m)
        pts = np.stack([np.cos(uu), np.sin(uu), rho * np.cos(vv), rho * np.sin(vv)], axis=-1).reshape(-1, 4)
        _, quads = MeshService._torus_grid(n, m, 2.0, 1.0)
        faces = []
        for a, b, c, d in quads.values():
            faces.append((a, b, c))
            faces.append((a, c, d))
        return MeshService.build(pts, np.array(faces))

    @staticmethod
    def generate_genus_g(g: int, resolution: int) -> TriMesh:
        """Chain of g tori joined by short tubes through removed grid cells"""
        if g < 1:
            raise ValueError("generate_genus_g needs g >= 1")
        if resolution < 4:
            raise ValueError("generate_genus_g needs resolution >= 4")
        n, m = 2 * resolution, resolution
        R, r = 2.0, 1.0
        gap = 2 * np.pi * r / m
        spacing = 2 * (R + r) + gap

        vertices, faces, holes = [], [], []
        offset = 0
        for k in range(g):
            pts, quads = MeshService._torus_grid(n, m, R, r, center=(k * spacing, 0.0, 0.0))
            removed = {}
            if k < g - 1:
                removed["east"] = (n - 1, m - 1)
            if k > 0:
                removed["west"] = (n // 2 - 1, m - 1)
            for key, quad in quads.items():
                if key in removed.values():
                    continue
                a, b, c, d = (offset + q for q in quad)
                faces.append((a, b, c))
                faces.append((a, c, d))
            holes.append({side: tuple(offset + q for q in quads[key]) for side, key in removed.items()})
            vertices.append(pts)
            offset += len(pts)
        vertices = np.concatenate(vertices)

        for k in range(g - 1):
            A = holes[k]["east"]
            B = holes[k + 1]["west"]
            best = min(
                range(4),
                key=lambda s: sum(
                    np.linalg.norm(vertices[A[i]] - vertices[B[(s - i) % 4]]) for i in range(4)
                ),
            )
            Bp = [B[(best - i) % 4] for i in range(4)]
            for i in range(4):
                j = (i + 1) % 4
                faces.append((A[i], A[j], Bp[j]))
                faces.append((A[i], Bp[j], Bp[i]))

        mesh = MeshService.build(vertices, np.array(faces))
        logger.info(
            "stage=mesh op=generate genus=%d resolution=%d V=%d F=%d",
            g, resolution, mesh.n_vertices, mesh.n_faces,
        )
        return mesh

    # communication graph

    @staticmethod
    def communication_graph(mesh: TriMesh, radius: Optional[float] = None) -> nx.Graph:
        """Mesh edge graph, or the unit-disk graph over vertex positions"""
        graph = nx.Graph()
        graph.add_nodes_from(range(mesh.n_vertices))
        if radius is None:
            graph.add_edges_from(map(tuple, mesh.edges.tolist()))
        else:
            pairs = cKDTree(mesh.vertices).query_pairs(radius, output_type="ndarray")
            graph.add_edges_from(map(tuple, pairs.tolist()))
        return graph
