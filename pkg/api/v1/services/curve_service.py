import logging
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from api.v1.models.mesh import TriMesh
from api.v1.models.covering import CoveringAtlas
from api.v1.models.curve import FlatPiece, FlatSegment, DenseCurve, SurfaceCurve, DiscretePath
from api.utils import flat
from api.utils import rng as streams
from api.utils.exceptions import (
    EndpointHit,
    SlopeSelectionFailure,
    LocationMiss,
    EmptyBelt,
    TraceEscape,
)
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "curve"
DEFAULT_SLOPE = float(np.e)


class FlatLocator:
    """Point location in the developed handle charts.

    One cKDTree per handle over its flat triangle centroids; a query
    checks the nearest triangles, then the nearest lattice translates.
    """

    def __init__(self, atlas: CoveringAtlas, neighbours: int = 8):
        self.atlas = atlas
        self.neighbours = neighbours
        self._trees: Dict[int, Tuple[np.ndarray, cKDTree]] = {}
        for handle in atlas.handles:
            centroids = atlas.corners[handle.faces].mean(axis=1)
            tree = cKDTree(np.column_stack([centroids.real, centroids.imag]))
            self._trees[handle.index] = (handle.faces, tree)

    def _shifts(self, handle: int) -> List[complex]:
        b1, b2 = self.atlas.handles[handle].lattice
        shifts = [a * b1 + b * b2 for a in range(-2, 3) for b in range(-2, 3)]
        return sorted(shifts, key=abs)

    def _query(self, handle: int, z: complex, tolerance: float) -> Optional[Tuple[int, complex, np.ndarray]]:
        faces, tree = self._trees[handle]
        k = min(self.neighbours, len(faces))
        for shift in self._shifts(handle):
            w = z + shift
            _, idx = tree.query([w.real, w.imag], k=k)
            for i in np.atleast_1d(idx):
                f = int(faces[i])
                bary = flat.barycentric(self.atlas.corners[f], w)
                if bary.min() >= -tolerance:
                    return f, complex(w), bary
        return None

    def locate(self, handle: int, z: complex) -> Tuple[int, complex, np.ndarray]:
        """(face, point in that face's chart, barycentric coordinates)"""
        for tolerance in (settings.EPS_LOC, settings.EPS_LOC * 1e3):
            found = self._query(handle, complex(z), tolerance)
            if found is not None:
                return found
        raise LocationMiss(f"point {complex(z)} lies in no triangle of handle {handle}", stage=STAGE)


class CurveService:

    @staticmethod
    def hit_radius(atlas: CoveringAtlas) -> float:
        return settings.EPS_HIT_FACTOR * atlas.diagonal

    @staticmethod
    def default_start(atlas: CoveringAtlas) -> Tuple[int, complex]:
        """Point halfway between the first handle's base corner and its base face centroid"""
        face = atlas.handles[0].base_face
        P = atlas.corners[face]
        corner = P[int(np.argmin(np.abs(P)))]
        return face, complex(0.5 * (corner + P.mean()))

    @staticmethod
    def vertex_start(mesh: TriMesh, atlas: CoveringAtlas, vertex: int) -> Tuple[int, complex]:
        """(handle, flat point) halfway between the vertex and the centroid of its first face"""
        incident = np.flatnonzero((mesh.faces == vertex).any(axis=1))
        if len(incident) == 0:
            raise LocationMiss(
                f"start vertex {vertex} is not a vertex of the mesh (0..{mesh.n_vertices - 1})",
                stage=STAGE,
                hint="choose --start within the vertex range",
            )
        face = int(incident[0])
        P = atlas.corners[face]
        corner = P[int(np.flatnonzero(mesh.faces[face] == vertex)[0])]
        return int(atlas.face_handle[face]), complex(0.5 * (corner + P.mean()))

    @staticmethod
    def trace_dense(
        mesh: TriMesh,
        atlas: CoveringAtlas,
        slope: float,
        length: float,
        start: Optional[Tuple[int, complex]] = None,
        check_return: bool = False,
    ) -> DenseCurve:
        """Follow the line of the given slope across the welded tori.

        ``start`` is ``(handle, flat point)``. Each face crossing moves the
        point into the next face's chart; a jump in coordinates is a lattice
        wrap (same handle) or a slit crossing (other handle).
        """
        if length <= 0:
            raise ValueError("curve length must be positive")
        if start is None:
            face, p = CurveService.default_start(atlas)
        else:
            face, p, _ = FlatLocator(atlas).locate(*start)

        d = complex(1.0, slope)
        d /= abs(d)
        eps_hit = CurveService.hit_radius(atlas)
        jump = 1e-9 * max(1.0, atlas.diagonal)
        zero_set = set(atlas.zero_vertices)
        at_zero = np.isin(mesh.faces, list(zero_set)) if zero_set else np.zeros(mesh.faces.shape, bool)

        start_face, start_point = face, p
        handle = int(atlas.face_handle[face])
        segments = [FlatSegment(handle=handle, start=p, end=p, event="start")]
        pieces: List[FlatPiece] = []
        travelled = 0.0
        entry = None

        while travelled < length:
            P = atlas.corners[face]
            hit = flat.exit_edge(P, p, d, entry)
            if hit is None:
                raise TraceEscape(f"line lost inside face {face} after {travelled:.6f}", stage=STAGE)
            i, _, t = hit
            t = flat.clamp_t(t)
            q = P[i] + t * (P[(i + 1) % 3] - P[i])
            step = abs(q - p)
            done = travelled + step >= length
            if done and step > 0:
                q = p + (length - travelled) / step * (q - p)
                step = length - travelled

            for c in np.flatnonzero(at_zero[face]):
                if flat.point_segment_distance(P[c], p, q) <= eps_hit:
                    raise EndpointHit(
                        f"slope {slope!r} passes zero {int(mesh.faces[face, c])} at length {travelled:.6f}",
                        stage=STAGE,
                    )
            if check_return and pieces and face == start_face:
                if flat.point_segment_distance(start_point, p, q) <= eps_hit:
                    raise EndpointHit(f"slope {slope!r} closes up at length {travelled:.6f}", stage=STAGE)

            pieces.append(FlatPiece(face=int(face), handle=handle, start=complex(p), end=complex(q), offset=travelled))
            segments[-1].end = complex(q)
            travelled += step
            if done:
                break

            tw = int(mesh.he_twin[3 * face + i])
            g, j = tw // 3, tw % 3
            Q = atlas.corners[g]
            p = Q[j] + (1.0 - t) * (Q[(j + 1) % 3] - Q[j])
            transfer = complex(p - q)
            if abs(transfer) > jump:
                following = int(atlas.face_handle[g])
                event = "slit" if following != handle else "wrap"
                segments.append(FlatSegment(handle=following, start=complex(p), end=complex(p), event=event, transfer=transfer))
                handle = following
            face, entry = g, j

        logger.debug(
            "stage=curve op=trace slope=%.12f length=%.4f pieces=%d segments=%d",
            slope, travelled, len(pieces), len(segments),
        )
        return DenseCurve(
            slope=float(slope),
            start_handle=int(atlas.face_handle[start_face]),
            start_point=complex(start_point),
            length=float(travelled),
            segments=segments,
            pieces=pieces,
        )

    @staticmethod
    def choose_slope(
        mesh: TriMesh,
        atlas: CoveringAtlas,
        seed: int = 0,
        slope: float = DEFAULT_SLOPE,
        start: Optional[Tuple[int, complex]] = None,
        probe_length: Optional[float] = None,
    ) -> float:
        """Slope whose probe trace avoids every zero and does not close up"""
        probe = probe_length or 2.0 * atlas.perimeter
        generator = streams.substream(seed, streams.SLOPE)
        k = float(slope)
        for attempt in range(settings.SLOPE_RETRIES):
            try:
                CurveService.trace_dense(mesh, atlas, k, probe, start=start, check_return=True)
            except EndpointHit as exc:
                perturbed = float(slope) + float(generator.uniform(0.0, 1e-3))
                logger.warning(
                    "stage=curve op=choose_slope attempt=%d slope=%.12f rejected=%s next=%.12f",
                    attempt, k, exc.detail, perturbed,
                )
                k = perturbed
                continue
            logger.info("stage=curve op=choose_slope slope=%.12f attempts=%d", k, attempt + 1)
            return k
        raise SlopeSelectionFailure(
            f"no admissible slope near {slope!r} after {settings.SLOPE_RETRIES} attempts", stage=STAGE
        )

    # density

    @staticmethod
    def _min_distance(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        seg = ends - starts
        rel = points[:, None] - starts[None, :]
        length2 = np.abs(seg) ** 2
        s = np.real(np.conj(seg)[None, :] * rel) / np.where(length2 > 0, length2, 1.0)[None, :]
        s = np.clip(s, 0.0, 1.0)
        return np.abs(rel - s * seg[None, :]).min(axis=1)

    @staticmethod
    def density_profile(
        curve: DenseCurve,
        atlas: CoveringAtlas,
        samples: int = 20,
        levels: int = 8,
        chunk: int = 256,
    ) -> List[Tuple[float, float]]:
        """Max gap between a sample grid and geometrically growing curve prefixes.

        Starts with ``(0, diameter)``; gaps are capped at the largest handle
        diagonal so handles the prefix has not reached yet count as uncovered.
        """
        diameter = atlas.diagonal
        prefixes = [curve.length * 2.0 ** -m for m in range(levels)][::-1]
        grid = (np.arange(samples) + 0.5) / samples
        alpha, beta = np.meshgrid(grid, grid, indexing="ij")
        alpha, beta = alpha.ravel(), beta.ravel()

        nearest = {}
        sample_points = {}
        for handle in atlas.handles:
            b1, b2 = handle.lattice
            sample_points[handle.index] = alpha * b1 + beta * b2
            nearest[handle.index] = np.full(len(alpha), np.inf)

        by_handle: Dict[int, List[FlatPiece]] = {h.index: [] for h in atlas.handles}
        for piece in curve.pieces:
            by_handle[piece.handle].append(piece)

        profile = [(0.0, float(diameter))]
        done = {h: 0 for h in by_handle}
        for prefix in prefixes:
            for index, pieces in by_handle.items():
                handle = atlas.handles[index]
                b1, b2 = handle.lattice
                stop = done[index]
                while stop < len(pieces) and pieces[stop].offset < prefix:
                    stop += 1
                batch = pieces[done[index]:stop]
                done[index] = stop
                for lo in range(0, len(batch), chunk):
                    part = batch[lo:lo + chunk]
                    starts = np.array([p.start for p in part])
                    ends = np.array([
                        p.end if p.offset + p.length <= prefix
                        else p.start + (prefix - p.offset) / p.length * (p.end - p.start)
                        for p in part
                    ])
                    coords = handle.lattice_coordinates(0.5 * (starts + ends))
                    shift = -(np.floor(coords[0]) * b1 + np.floor(coords[1]) * b2)
                    starts, ends = starts + shift, ends + shift
                    translates = np.array([a * b1 + b * b2 for a in (-1, 0, 1) for b in (-1, 0, 1)])
                    all_starts = (starts[None, :] + translates[:, None]).ravel()
                    all_ends = (ends[None, :] + translates[:, None]).ravel()
                    dist = CurveService._min_distance(sample_points[index], all_starts, all_ends)
                    nearest[index] = np.minimum(nearest[index], dist)
                # a piece crossing the prefix boundary is measured again in full later
                if stop > 0 and pieces[stop - 1].offset + pieces[stop - 1].length > prefix:
                    done[index] = stop - 1
            gap = max(float(np.max(d)) for d in nearest.values())
            profile.append((float(prefix), min(gap, float(diameter))))

        logger.debug("stage=curve op=density_profile profile=%s", profile)
        return profile

    @staticmethod
    def density_growth(profile: Sequence[Tuple[float, float]]) -> float:
        """Mean of gap(2L) / gap(L) over consecutive prefixes, skipping the empty one"""
        ratios = [b / a for (_, a), (_, b) in zip(profile[1:-1], profile[2:]) if a > 0]
        return float(np.mean(ratios)) if ratios else 1.0

    @staticmethod
    def transversal_hits(curve: DenseCurve, atlas: CoveringAtlas, handle: int = 0, level: float = 0.5) -> np.ndarray:
        """Sorted positions (flat length along b2) where the curve crosses alpha = level mod 1"""
        b1, b2 = atlas.handles[handle].lattice
        pieces = [p for p in curve.pieces if p.handle == handle]
        if not pieces:
            return np.zeros(0)
        lattice = atlas.handles[handle]
        a = lattice.lattice_coordinates(np.array([p.start for p in pieces]))
        b = lattice.lattice_coordinates(np.array([p.end for p in pieces]))
        lo = np.floor(a[0] - level)
        hi = np.floor(b[0] - level)
        crossing = np.flatnonzero(lo != hi)
        hits = []
        for n in crossing:
            target = max(lo[n], hi[n]) + level
            s = (target - a[0, n]) / (b[0, n] - a[0, n])
            beta = a[1, n] + s * (b[1, n] - a[1, n])
            hits.append((beta % 1.0) * abs(b2))
        return np.sort(np.array(hits))

    # pullback

    @staticmethod
    def pullback(curve: DenseCurve, atlas: CoveringAtlas, mesh: TriMesh) -> SurfaceCurve:
        """Barycentric entry and exit point of every flat piece in its mesh face"""
        n = len(curve.pieces)
        faces = np.zeros(n, dtype=int)
        entry = np.zeros((n, 3))
        exit_ = np.zeros((n, 3))
        for k, piece in enumerate(curve.pieces):
            P = atlas.corners[piece.face]
            for target, z in ((entry, piece.start), (exit_, piece.end)):
                bary = flat.barycentric(P, z)
                if bary.min() < -settings.EPS_LOC * 1e3:
                    raise LocationMiss(
                        f"piece {k} leaves face {piece.face} (barycentric {bary.min():.3e})", stage=STAGE
                    )
                bary = np.clip(bary, 0.0, None)
                target[k] = bary / bary.sum()
            faces[k] = piece.face
        length = float(sum(p.length for p in curve.pieces))
        logger.info("stage=curve op=pullback pieces=%d length=%.4f", n, length)
        return SurfaceCurve(faces=faces, entry=entry, exit=exit_, length=length)

    # discretization

    @staticmethod
    def _patch(mesh: TriMesh, atlas: CoveringAtlas, face: int, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        """Vertices (with repeats) and flat positions of faces developed around ``face``"""
        base = atlas.corners[face]
        centre = base.mean()
        placed = {face: base}
        queue = deque([face])
        while queue:
            f = queue.popleft()
            C = placed[f]
            for i in range(3):
                tw = int(mesh.he_twin[3 * f + i])
                g, j = tw // 3, tw % 3
                if g in placed:
                    continue
                Q = atlas.corners[g]
                moved = Q - Q[(j + 1) % 3] + C[i]
                if np.abs(moved - centre).min() > radius:
                    continue
                placed[g] = moved
                queue.append(g)
        order = sorted(placed)
        vertices = mesh.faces[order].ravel()
        positions = np.concatenate([placed[f] for f in order])
        return vertices, positions

    @staticmethod
    def _windows(surface: SurfaceCurve, atlas: CoveringAtlas, mesh: TriMesh, delta: float) -> List[Dict[int, float]]:
        """Per curve piece: vertex -> flat distance, for vertices within delta"""
        reach = delta + 2.0 * float(np.abs(atlas.corners[:, [1, 2, 0]] - atlas.corners).max())
        patches: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        windows = []
        for f, a, b in zip(surface.faces.tolist(), surface.entry, surface.exit):
            if f not in patches:
                patches[f] = CurveService._patch(mesh, atlas, f, reach)
            vertices, positions = patches[f]
            P = atlas.corners[f]
            dist = flat.point_segment_distance(positions, complex(a @ P), complex(b @ P))
            near = dist <= delta
            window: Dict[int, float] = {}
            for v, dv in zip(vertices[near].tolist(), dist[near].tolist()):
                if dv < window.get(v, np.inf):
                    window[v] = dv
            windows.append(window)
        return windows

    @staticmethod
    def discretize(
        surface: SurfaceCurve,
        atlas: CoveringAtlas,
        mesh: TriMesh,
        graph: nx.Graph,
        delta: Optional[float] = None,
        start: int = 0,
    ) -> DiscretePath:
        """Greedy walk through the belt of width delta around the curve.

        For each curve piece the window is the set of vertices within delta
        of it. The walker moves to the unvisited neighbour in the window
        closest to the piece (ties by index). With none left it advances the
        curve. Only a walker stranded behind the curve, out of contact with
        the window while the window still holds unvisited vertices, bridges
        along a shortest graph path to the nearest of them.
        """
        delta = delta or 2.0 * atlas.mean_edge_length
        windows = CurveService._windows(surface, atlas, mesh, delta)
        belt = set().union(*windows)
        if start not in belt:
            raise EmptyBelt(f"start vertex {start} is farther than {delta:.4g} from the curve", stage=STAGE)

        path = [start]
        visited = {start}
        bridges: List[Tuple[int, int]] = []
        current = start
        for window in windows:
            while True:
                neighbours = list(graph.neighbors(current))
                candidates = [u for u in neighbours if u in window and u not in visited]
                if candidates:
                    current = min(candidates, key=lambda u: (window[u], u))
                    path.append(current)
                    visited.add(current)
                    continue
                if current in window or any(u in window for u in neighbours):
                    break
                targets = {u for u in window if u not in visited}
                if not targets:
                    break
                route = CurveService._bridge(graph, current, targets)
                if route is None:
                    break
                bridges.append((len(path) - 1, len(path) - 1 + len(route)))
                path.extend(route)
                visited.update(route)
                current = route[-1]

        logger.info(
            "stage=curve op=discretize delta=%.4f belt=%d visited=%d hops=%d bridge_hops=%d",
            delta, len(belt), len(visited & belt), len(path) - 1, sum(b - a for a, b in bridges),
        )
        return DiscretePath(vertices=path, strategy="dense", bridges=bridges)

    @staticmethod
    def _bridge(graph: nx.Graph, source: int, targets) -> Optional[List[int]]:
        """Shortest hop path (excluding source) to the first target met breadth-first"""
        parent = {source: None}
        for u, v in nx.bfs_edges(graph, source, sort_neighbors=sorted):
            parent[v] = u
            if v in targets:
                route = [v]
                while parent[route[-1]] != source:
                    route.append(parent[route[-1]])
                return route[::-1]
        return None

    @staticmethod
    def belt(surface: SurfaceCurve, atlas: CoveringAtlas, mesh: TriMesh, delta: float) -> List[int]:
        """Vertices within flat distance delta of the curve"""
        return sorted(set().union(*CurveService._windows(surface, atlas, mesh, delta)))

    @staticmethod
    def default_length(atlas: CoveringAtlas, delta: Optional[float] = None) -> float:
        """Curve length that sweeps the flat area about twice with a belt of width delta"""
        delta = delta or 2.0 * atlas.mean_edge_length
        area = sum(h.area for h in atlas.handles)
        return float(2.0 * area / delta)
