import csv
import logging
from collections import deque
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from api.v1.models.mesh import TriMesh
from api.v1.models.topology import DualTree
from api.v1.models.hodge import HolomorphicForm
from api.v1.models.covering import (
    FlatChart,
    ZeroPoint,
    CriticalSegment,
    CriticalGraph,
    Slit,
    Gluing,
    Handle,
    CoveringAtlas,
)
from api.v1.services.mesh_service import MeshService
from api.utils import flat
from api.utils import rng as streams
from api.utils.exceptions import (
    PathDependence,
    WrongZeroCount,
    TraceEscape,
    WrongComponentCount,
    NonHorizontalSlit,
    NumericalFailure,
)
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "covering"
RETRYABLE = (WrongZeroCount, TraceEscape, WrongComponentCount, NonHorizontalSlit)


class CoveringService:

    @staticmethod
    def halfedge_values(mesh: TriMesh, form: HolomorphicForm) -> np.ndarray:
        return mesh.he_sign * form.values[mesh.he_edge]

    # integration

    @staticmethod
    def integrate(mesh: TriMesh, dual_tree: DualTree, form: HolomorphicForm, base: int = 0) -> FlatChart:
        """Develop the form face by face over the dual tree (the sliced disk)"""
        he_vals = CoveringService.halfedge_values(mesh, form)
        corners = np.zeros((mesh.n_faces, 3), dtype=complex)
        root = dual_tree.root
        corners[root] = [0.0, he_vals[3 * root], he_vals[3 * root] + he_vals[3 * root + 1]]

        for g in dual_tree.order[1:]:
            f = dual_tree.parent[g]
            for i in range(3):
                t = int(mesh.he_twin[3 * g + i])
                if t // 3 == f:
                    break
            j = t % 3
            corners[g, i] = corners[f, (j + 1) % 3]
            corners[g, (i + 1) % 3] = corners[f, j]
            corners[g, (i + 2) % 3] = corners[g, (i + 1) % 3] + he_vals[3 * g + (i + 1) % 3]

        base_face = next(int(f) for f in dual_tree.order if base in mesh.faces[f])
        k = int(np.flatnonzero(mesh.faces[base_face] == base)[0])
        corners = corners - corners[base_face, k]

        mismatch = np.abs(corners[:, [1, 2, 0]] - corners - he_vals.reshape(-1, 3))
        residual = float(mismatch.max())
        span = corners.reshape(-1)
        diameter = float(np.hypot(np.ptp(span.real), np.ptp(span.imag)))
        if residual > settings.CLOSURE_TOLERANCE * max(1.0, diameter):
            raise PathDependence(
                f"closure residual {residual:.3e} exceeds tolerance", stage=STAGE
            )
        logger.debug("stage=covering op=integrate residual=%.3e diameter=%.4f", residual, diameter)
        return FlatChart(corners=corners, base=base, closure_residual=residual, diameter=diameter)

    # zeros

    @staticmethod
    def cone_indices(mesh: TriMesh, form: HolomorphicForm) -> np.ndarray:
        """Total flat angle at each vertex in multiples of 2*pi"""
        he_vals = CoveringService.halfedge_values(mesh, form)
        he = np.arange(3 * mesh.n_faces)
        prev = 3 * (he // 3) + (he % 3 + 2) % 3
        with np.errstate(divide="ignore", invalid="ignore"):
            angles = np.angle(-he_vals[prev] / he_vals)
        angles = np.nan_to_num(angles)
        total = np.bincount(mesh.he_source, weights=angles, minlength=mesh.n_vertices)
        return np.rint(total / (2 * np.pi)).astype(int)

    @staticmethod
    def find_zeros(mesh: TriMesh, form: HolomorphicForm) -> List[ZeroPoint]:
        """Vertices whose flat cone angle is 4*pi.

        Adjacent candidates are one zero smeared over an edge; each such
        cluster keeps the vertex of least |form| density.
        """
        g = MeshService.genus(mesh)
        if g <= 1:
            return []
        index = CoveringService.cone_indices(mesh, form)
        he_abs = np.abs(CoveringService.halfedge_values(mesh, form))
        density = np.bincount(mesh.he_source, weights=he_abs, minlength=mesh.n_vertices)
        density /= np.bincount(mesh.he_source, minlength=mesh.n_vertices)

        found = np.flatnonzero(index >= 2)
        if (index[found] > 2).any():
            raise WrongZeroCount(
                f"zero of order {int(index[found].max()) - 1} at vertex "
                f"{int(found[np.argmax(index[found])])}",
                stage=STAGE,
            )
        found = CoveringService.least_dense(mesh, found, density)
        if len(found) != 2 * g - 2:
            raise WrongZeroCount(f"found {len(found)} zeros, expected {2 * g - 2}", stage=STAGE)
        return [ZeroPoint(vertex=int(v), index=int(index[v]), density=float(density[v])) for v in found]

    @staticmethod
    def least_dense(mesh: TriMesh, candidates: Sequence[int], density: np.ndarray) -> List[int]:
        """One vertex per edge-connected cluster of candidates, the one of least density"""
        cluster = nx.Graph()
        cluster.add_nodes_from(int(v) for v in candidates)
        keep = np.isin(mesh.edges, candidates).all(axis=1)
        cluster.add_edges_from(map(tuple, mesh.edges[keep].tolist()))
        chosen = [min(part, key=lambda v: (density[v], v)) for part in nx.connected_components(cluster)]
        return sorted(chosen)

    # candidate forms

    @staticmethod
    def candidate_forms(basis: Sequence[HolomorphicForm], seed: int, count: int) -> List[Tuple[str, HolomorphicForm]]:
        """Basis elements, then seeded rational combinations"""
        candidates = [(f"basis[{k}]", form) for k, form in enumerate(basis)]
        generator = streams.substream(seed, streams.FORM_SEARCH)
        n = len(basis)
        while len(candidates) < n + count:
            coefficients = generator.integers(-3, 4, size=n) / generator.integers(1, 4, size=n)
            if not coefficients.any():
                continue
            label = "combo[" + ",".join(f"{c:.4g}" for c in coefficients) + "]"
            candidates.append((label, HolomorphicForm.combine(coefficients, basis)))
        return candidates

    @staticmethod
    def score(mesh: TriMesh, chart: FlatChart) -> Tuple[int, float]:
        """(folded faces, variance of log flat/surface area ratio)"""
        areas = chart.signed_areas
        folds = int((areas <= 0).sum())
        ratio = np.abs(areas) / mesh.face_areas
        ratio = ratio[ratio > 0]
        return folds, float(np.var(np.log(ratio))) if len(ratio) else np.inf

    @staticmethod
    def select_atlas(
        mesh: TriMesh,
        dual_tree: DualTree,
        basis: Sequence[HolomorphicForm],
        seed: int = 0,
        base: int = 0,
    ) -> CoveringAtlas:
        """First candidate form (best score first) whose covering assembles"""
        genus = MeshService.genus(mesh)
        ranked = []
        last_error: Optional[NumericalFailure] = None
        for order, (label, form) in enumerate(CoveringService.candidate_forms(basis, seed, settings.FORM_CANDIDATES)):
            chart = CoveringService.integrate(mesh, dual_tree, form, base)
            try:
                CoveringService.find_zeros(mesh, form)
            except WrongZeroCount as exc:
                logger.warning("stage=covering op=select form=%s rejected=%s", label, exc.detail)
                last_error = exc
                continue
            folds, spread = CoveringService.score(mesh, chart)
            ranked.append((folds, spread, order, label, form))

        for folds, spread, _, label, form in sorted(ranked, key=lambda r: r[:3]):
            try:
                atlas = CoveringService.build_atlas(mesh, dual_tree, form, base, label)
            except RETRYABLE as exc:
                logger.warning("stage=covering op=select form=%s rejected=%s", label, exc.detail)
                last_error = exc
                continue
            logger.info(
                "stage=covering op=select form=%s folds=%d spread=%.4f handles=%d",
                label, folds, spread, len(atlas.handles),
            )
            return atlas

        if last_error is None:
            last_error = WrongZeroCount("no candidate form available", stage=STAGE)
        raise last_error

    # critical trajectories

    @staticmethod
    def _zero_radius(mesh: TriMesh, he_vals: np.ndarray, vertex: int) -> float:
        ring = mesh.outgoing(vertex)
        return settings.EPS_ZERO_FACTOR * float(np.mean(np.abs(he_vals[ring])))

    @staticmethod
    def _start_faces(mesh: TriMesh, he_vals: np.ndarray, vertex: int, direction: complex) -> List[int]:
        """Outgoing halfedges whose face wedge contains the direction"""
        starts = []
        for h in mesh.outgoing(vertex):
            first = he_vals[h]
            second = -he_vals[TriMesh.he_prev(h)]
            opening = np.angle(second / first)
            offset = np.angle(direction / first)
            if opening > 0 and 0 <= offset < opening:
                starts.append(h)
        return starts

    @staticmethod
    def trace_ray(
        mesh: TriMesh,
        he_vals: np.ndarray,
        start_halfedge: int,
        direction: complex,
        stops: Dict[int, float],
        max_length: float,
    ) -> CriticalSegment:
        """Follow a straight ray leaving the source corner of start_halfedge.

        Stops when the ray passes within ``stops[v]`` of a zero vertex v
        (the source itself only after leaving the first face) or when the
        length bound is exceeded (``end_zero == -1``).
        """
        local = flat.local_corners(he_vals)
        source = int(mesh.he_source[start_halfedge])
        f = start_halfedge // 3
        k = start_halfedge % 3
        p = local[f, k]
        entry = None
        length = 0.0
        points = [p]
        faces = [f]
        chain = [source]
        end_zero = -1
        first = True

        while length <= max_length:
            P = local[f]
            hit = flat.exit_edge(P, p, direction, entry)
            if hit is None:
                break
            i, s, t = hit
            q = P[i] + flat.clamp_t(t) * (P[(i + 1) % 3] - P[i])

            snapped = None
            for c in range(3):
                v = int(mesh.faces[f, c])
                if v not in stops or (first and v == source):
                    continue
                if flat.point_segment_distance(P[c], p, q) <= stops[v]:
                    snapped = (v, P[c])
                    break
            if snapped is not None:
                v, z = snapped
                length += abs(z - p)
                points.append(z)
                if chain[-1] != v:
                    chain.append(v)
                end_zero = v
                break

            length += abs(s)
            h = 3 * f + i
            left = int(mesh.faces[f, (i + 1) % 3])
            if chain[-1] != left:
                chain.append(left)
            tw = int(mesh.he_twin[h])
            f, entry = tw // 3, tw % 3
            t = flat.clamp_t(t)
            Q = local[f]
            p = Q[entry] + (1.0 - t) * (Q[(entry + 1) % 3] - Q[entry])
            points.append(q)
            faces.append(f)
            first = False

        return CriticalSegment(
            start_zero=source,
            end_zero=end_zero,
            points=np.array(points),
            faces=faces,
            chain=chain,
            length=float(length),
        )

    @staticmethod
    def pair_zeros(mesh: TriMesh, zeros: Sequence[ZeroPoint]) -> List[Tuple[int, int, List[int]]]:
        """Greedy nearest pairing by edge-length distance, with the joining path"""
        graph = MeshService.communication_graph(mesh)
        for (u, w), length in zip(mesh.edges.tolist(), mesh.edge_lengths):
            graph.edges[u, w]["weight"] = float(length)
        remaining = sorted(z.vertex for z in zeros)
        pairs = []
        while remaining:
            a = remaining.pop(0)
            dist, paths = nx.single_source_dijkstra(graph, a, weight="weight")
            b = min(remaining, key=lambda v: (dist[v], v))
            remaining.remove(b)
            pairs.append((a, b, paths[b]))
        return pairs

    @staticmethod
    def path_holonomy(mesh: TriMesh, he_vals: np.ndarray, path: Sequence[int]) -> complex:
        return complex(sum(he_vals[mesh.halfedge(u, w)] for u, w in zip(path[:-1], path[1:])))

    @staticmethod
    def trace_critical(
        mesh: TriMesh,
        form: HolomorphicForm,
        zeros: Sequence[ZeroPoint],
        diameter: float,
        open_prongs: bool = True,
    ) -> Tuple[CriticalGraph, List[Tuple[int, int]]]:
        """Saddle connections joining each zero pair, plus the remaining prongs.

        Returns the graph and, per zero pair, the indices of its two
        saddle connections in ``graph.segments``.
        """
        if not zeros:
            return CriticalGraph(), []
        he_vals = CoveringService.halfedge_values(mesh, form)
        stops = {z.vertex: CoveringService._zero_radius(mesh, he_vals, z.vertex) for z in zeros}
        bound = settings.TRACE_BOUND_FACTOR * diameter
        graph = CriticalGraph()
        pair_rays = []

        for a, b, path in CoveringService.pair_zeros(mesh, zeros):
            holonomy = CoveringService.path_holonomy(mesh, he_vals, path)
            direction = holonomy / abs(holonomy)
            starts = CoveringService._start_faces(mesh, he_vals, a, direction)
            if len(starts) != 2:
                raise TraceEscape(
                    f"zero {a} has {len(starts)} prongs towards {b}, expected 2", stage=STAGE
                )
            indices = []
            for h in starts:
                ray = CoveringService.trace_ray(mesh, he_vals, h, direction, stops, bound)
                if ray.end_zero != b:
                    raise TraceEscape(
                        f"prong from zero {a} ended at {ray.end_zero} instead of {b}", stage=STAGE
                    )
                if abs(ray.length - abs(holonomy)) > 2 * (stops[a] + stops[b]):
                    raise TraceEscape(
                        f"saddle connection {a}->{b} has length {ray.length:.4f}, "
                        f"path holonomy {abs(holonomy):.4f}",
                        stage=STAGE,
                    )
                indices.append(len(graph.segments))
                graph.segments.append(ray)
            pair_rays.append(tuple(indices))

        if open_prongs:
            CoveringService.trace_open_prongs(mesh, form, zeros, graph, pair_rays, diameter)
        logger.info(
            "stage=covering op=trace_critical segments=%d closed=%d",
            len(graph.segments), len(graph.closed_segments),
        )
        return graph, pair_rays

    @staticmethod
    def trace_open_prongs(
        mesh: TriMesh,
        form: HolomorphicForm,
        zeros: Sequence[ZeroPoint],
        graph: CriticalGraph,
        pair_rays: Sequence[Tuple[int, int]],
        diameter: float,
    ) -> None:
        """Trace the prongs not used by saddle connections, up to the length bound"""
        he_vals = CoveringService.halfedge_values(mesh, form)
        stops = {z.vertex: CoveringService._zero_radius(mesh, he_vals, z.vertex) for z in zeros}
        bound = settings.TRACE_BOUND_FACTOR * diameter
        for r1, _ in pair_rays:
            ray = graph.segments[r1]
            holonomy = CoveringService.path_holonomy(mesh, he_vals, ray.chain)
            direction = holonomy / abs(holonomy)
            for vertex, d in ((ray.start_zero, -direction), (ray.end_zero, direction)):
                for h in CoveringService._start_faces(mesh, he_vals, vertex, d):
                    graph.segments.append(CoveringService.trace_ray(mesh, he_vals, h, d, stops, bound))

    # segmentation

    @staticmethod
    def _chain_edges(mesh: TriMesh, chain: Sequence[int]) -> List[int]:
        return [mesh.edge_index(u, w)[0] for u, w in zip(chain[:-1], chain[1:])]

    @staticmethod
    def _side_faces(mesh: TriMesh, chain: Sequence[int]) -> Tuple[int, int]:
        """(left face, right face) of the chain's first edge"""
        u, w = chain[0], chain[1]
        return mesh.halfedge(u, w) // 3, mesh.halfedge(w, u) // 3

    @staticmethod
    def _develop(
        mesh: TriMesh,
        he_vals: np.ndarray,
        member: np.ndarray,
        barrier: np.ndarray,
        base_face: int,
        base_vertex: int,
    ) -> Tuple[Dict[int, np.ndarray], List[complex]]:
        """Breadth-first layout of one handle; translations across non-tree edges"""
        local = flat.local_corners(he_vals)
        k = int(np.flatnonzero(mesh.faces[base_face] == base_vertex)[0])
        corners = {base_face: local[base_face] - local[base_face, k]}
        queue = deque([base_face])
        tree = set()
        translations = []
        while queue:
            f = queue.popleft()
            for i in range(3):
                h = 3 * f + i
                if barrier[mesh.he_edge[h]]:
                    continue
                tw = int(mesh.he_twin[h])
                g, j = tw // 3, tw % 3
                if not member[g]:
                    continue
                anchor = corners[f][i]
                if g not in corners:
                    corners[g] = local[g] - local[g, (j + 1) % 3] + anchor
                    tree.add((min(f, g), max(f, g)))
                    queue.append(g)
                elif (min(f, g), max(f, g)) not in tree:
                    translations.append(complex(corners[g][(j + 1) % 3] - anchor))
        return corners, translations

    @staticmethod
    def _lattice(translations: Sequence[complex], area: float, scale: float) -> Optional[np.ndarray]:
        """Reduced basis of the handle's period lattice.

        The lattice must tile the handle exactly once, so only pairs whose
        covolume equals the handle's flat area qualify. None when no pair does.
        """
        tol = 1e-6 * max(scale, 1e-12)
        area_tol = 1e-6 * max(1.0, abs(area))
        distinct: List[complex] = []
        for t in sorted(translations, key=abs):
            if abs(t) > tol and all(abs(t - u) > tol and abs(t + u) > tol for u in distinct):
                distinct.append(t)
        distinct = distinct[:12]
        pool = list(distinct)
        for i, u in enumerate(distinct):
            for v in distinct[i + 1:]:
                pool.extend([u - v, u + v])
        pool = [t for t in pool if abs(t) > tol]

        best = None
        for i, u in enumerate(pool):
            for v in pool[i + 1:]:
                gap = abs(abs(flat.cross(u, v)) - abs(area))
                if gap <= area_tol and (best is None or gap < best[0]):
                    best = (gap, u, v)
        if best is None:
            logger.debug("stage=covering op=lattice area=%.6f candidates=%d match=none", area, len(pool))
            return None
        b1, b2 = flat.lagrange_reduce(best[1], best[2])
        logger.debug(
            "stage=covering op=lattice covolume=%.6f area=%.6f", abs(flat.cross(b1, b2)), area
        )
        return np.array([b1, b2])

    @staticmethod
    def segment_handles(
        mesh: TriMesh,
        form: HolomorphicForm,
        zeros: Sequence[ZeroPoint],
        critical: CriticalGraph,
        pair_rays: Sequence[Tuple[int, int]],
        base: int = 0,
    ) -> CoveringAtlas:
        """Split the surface along the saddle connections into g slit tori"""
        genus = MeshService.genus(mesh)
        he_vals = CoveringService.halfedge_values(mesh, form)
        barrier = np.zeros(mesh.n_edges, dtype=bool)
        for r1, r2 in pair_rays:
            for r in (r1, r2):
                barrier[CoveringService._chain_edges(mesh, critical.segments[r].chain)] = True

        F = mesh.n_faces
        open_he = np.flatnonzero(~barrier[mesh.he_edge])
        adjacency = sparse.coo_matrix(
            (np.ones(len(open_he)), (open_he // 3, mesh.he_twin[open_he] // 3)), shape=(F, F)
        )
        count, labels = connected_components(adjacency, directed=False)
        if count != genus:
            raise WrongComponentCount(f"{count} components, expected {genus}", stage=STAGE)
        # renumber handles by their lowest face
        first_face = {lab: int(np.flatnonzero(labels == lab)[0]) for lab in range(count)}
        renumber = {lab: rank for rank, lab in enumerate(sorted(range(count), key=first_face.get))}
        labels = np.array([renumber[lab] for lab in labels])

        sides = []
        for p, (r1, r2) in enumerate(pair_rays):
            left1, right1 = CoveringService._side_faces(mesh, critical.segments[r1].chain)
            left2, right2 = CoveringService._side_faces(mesh, critical.segments[r2].chain)
            top, bottom = labels[left1], labels[right1]
            if top == bottom or labels[left2] != bottom or labels[right2] != top:
                raise WrongComponentCount(f"slit pair {p} does not separate two handles", stage=STAGE)
            sides.append((int(top), int(bottom), left1, right1))

        bases = {}
        for p, (top, bottom, left1, right1) in enumerate(sides):
            a = critical.segments[pair_rays[p][0]].start_zero
            bases.setdefault(top, (left1, a))
            bases.setdefault(bottom, (right1, a))
        if not sides:
            base_face = next(f for f in range(F) if base in mesh.faces[f])
            bases[0] = (base_face, base)

        corners = np.zeros((F, 3), dtype=complex)
        signed = np.zeros(F)
        handles = []
        for index in range(genus):
            member = labels == index
            base_face, base_vertex = bases[index]
            layout, translations = CoveringService._develop(
                mesh, he_vals, member, barrier, base_face, base_vertex
            )
            for f, c in layout.items():
                corners[f] = c
                signed[f] = 0.5 * flat.cross(c[1] - c[0], c[2] - c[0])
            area = float(signed[member].sum())
            scale = float(np.sqrt(abs(area))) if area else 1.0
            lattice = CoveringService._lattice(translations, area, scale)
            if lattice is None:
                raise WrongComponentCount(
                    f"handle {index}: no period lattice with covolume equal to its area {area:.6g}",
                    stage=STAGE,
                    hint="the slits may not cut the surface into tori; try another form or a finer mesh",
                )
            handles.append(Handle(
                index=index,
                faces=np.flatnonzero(member),
                lattice=lattice,
                base_vertex=int(base_vertex),
                base_face=int(base_face),
                area=area,
            ))

        slits, gluings = [], []
        for p, (top, bottom, left1, right1) in enumerate(sides):
            r1, r2 = pair_rays[p]
            ray1, ray2 = critical.segments[r1], critical.segments[r2]
            a, b = ray1.start_zero, ray1.end_zero
            vector = CoveringService.path_holonomy(mesh, he_vals, ray1.chain)
            other = CoveringService.path_holonomy(mesh, he_vals, ray2.chain)
            ray1.level_residual = abs(vector.imag)
            ray2.level_residual = abs(other.imag)
            if abs(abs(vector) - abs(other)) > settings.SLIT_LENGTH_TOLERANCE * max(1.0, abs(vector)):
                raise NonHorizontalSlit(
                    f"slit pair {p} lips differ: {abs(vector):.9f} vs {abs(other):.9f}", stage=STAGE
                )
            if abs(np.arcsin(min(1.0, abs(vector.imag) / abs(vector)))) > settings.SLIT_ANGLE_TOLERANCE:
                raise NonHorizontalSlit(
                    f"slit pair {p} has angle {np.angle(vector):.3e}", stage=STAGE
                )
            k_top = int(np.flatnonzero(mesh.faces[left1] == a)[0])
            k_bottom = int(np.flatnonzero(mesh.faces[right1] == a)[0])
            for handle, face, k in ((top, left1, k_top), (bottom, right1, k_bottom)):
                handles[handle].slits.append(len(slits))
                slits.append(Slit(
                    handle=handle,
                    start=complex(corners[face, k]),
                    vector=vector,
                    zero_start=a,
                    zero_end=b,
                    pair=p,
                    top_ray=r1 if handle == top else r2,
                    bottom_ray=r2 if handle == top else r1,
                ))
            s_top, s_bottom = len(slits) - 2, len(slits) - 1
            shift = slits[s_bottom].start - slits[s_top].start
            gluings.append(Gluing(top=(top, s_top), bottom=(bottom, s_bottom), translation=shift))
            gluings.append(Gluing(top=(bottom, s_bottom), bottom=(top, s_top), translation=-shift))

        return CoveringAtlas(
            genus=genus,
            form=form,
            zeros=list(zeros),
            handles=handles,
            slits=slits,
            gluings=gluings,
            face_handle=labels,
            corners=corners,
            critical=critical,
            base_vertex=base,
        )

    @staticmethod
    def build_atlas(
        mesh: TriMesh,
        dual_tree: DualTree,
        form: HolomorphicForm,
        base: int = 0,
        label: str = "",
    ) -> CoveringAtlas:
        """Covering for one fixed form: rotate, trace, segment"""
        chart = CoveringService.integrate(mesh, dual_tree, form, base)
        zeros = CoveringService.find_zeros(mesh, form)

        if zeros:
            he_vals = CoveringService.halfedge_values(mesh, form)
            a, b, path = CoveringService.pair_zeros(mesh, zeros)[0]
            holonomy = CoveringService.path_holonomy(mesh, he_vals, path)
            form = form.rotate(np.conj(holonomy) / abs(holonomy))
            critical, pair_rays = CoveringService.trace_critical(
                mesh, form, zeros, chart.diameter, open_prongs=False
            )
            # make the first slit exactly horizontal
            he_vals = CoveringService.halfedge_values(mesh, form)
            slit = CoveringService.path_holonomy(mesh, he_vals, critical.segments[pair_rays[0][0]].chain)
            turn = np.conj(slit) / abs(slit)
            form = form.rotate(turn)
            for segment in critical.segments:
                segment.points = segment.points * turn
            CoveringService.trace_open_prongs(mesh, form, zeros, critical, pair_rays, chart.diameter)
        else:
            critical, pair_rays = CriticalGraph(), []

        atlas = CoveringService.segment_handles(mesh, form, zeros, critical, pair_rays, base)
        atlas.form_label = label
        if zeros:
            he_vals = CoveringService.halfedge_values(mesh, form)
            atlas.zero_radius = min(CoveringService._zero_radius(mesh, he_vals, z.vertex) for z in zeros)
        logger.info(
            "stage=covering op=build_atlas genus=%d zeros=%d handles=%d slits=%d",
            atlas.genus, len(zeros), len(atlas.handles), len(atlas.slits),
        )
        return atlas

    # export

    @staticmethod
    def dump_vertex_coordinates(mesh: TriMesh, atlas: CoveringAtlas, path: Union[str, Path]) -> Path:
        """CSV of one flat coordinate per vertex (first corner) and its handle"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        seen = set()
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex", "handle", "x", "y"])
            for f in range(mesh.n_faces):
                for k in range(3):
                    v = int(mesh.faces[f, k])
                    if v in seen:
                        continue
                    seen.add(v)
                    z = atlas.corners[f, k]
                    writer.writerow([v, int(atlas.face_handle[f]), repr(float(z.real)), repr(float(z.imag))])
        return path
