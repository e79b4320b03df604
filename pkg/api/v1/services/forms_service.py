import logging
from typing import List, Sequence

import numpy as np
from scipy import sparse

from api.v1.models.mesh import TriMesh
from api.v1.models.forms import OneForm, TwoForm
from api.v1.models.topology import HomologyBasis
from api.utils.exceptions import SliceFailure, RankDeficient
from api.utils import rng as streams
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "forms"


class FormsService:

    @staticmethod
    def d0_matrix(mesh: TriMesh) -> sparse.csr_matrix:
        """E x V incidence: +1 at the head, -1 at the tail of each edge"""
        E = mesh.n_edges
        rows = np.repeat(np.arange(E), 2)
        cols = mesh.edges.reshape(-1)
        data = np.tile([-1.0, 1.0], E)
        return sparse.csr_matrix((data, (rows, cols)), shape=(E, mesh.n_vertices))

    @staticmethod
    def d1_matrix(mesh: TriMesh) -> sparse.csr_matrix:
        """F x E boundary operator with orientation signs"""
        F = mesh.n_faces
        rows = np.repeat(np.arange(F), 3)
        return sparse.csr_matrix(
            (mesh.he_sign, (rows, mesh.he_edge)), shape=(F, mesh.n_edges)
        )

    @staticmethod
    def d0(mesh: TriMesh, f) -> OneForm:
        f = np.asarray(f, dtype=np.float64)
        return OneForm(f[mesh.edges[:, 1]] - f[mesh.edges[:, 0]])

    @staticmethod
    def d1(mesh: TriMesh, form: OneForm) -> TwoForm:
        return TwoForm(FormsService.halfedge_values(mesh, form).reshape(-1, 3).sum(axis=1))

    @staticmethod
    def halfedge_values(mesh: TriMesh, form: OneForm) -> np.ndarray:
        """Form evaluated on every halfedge, (3F,)"""
        return mesh.he_sign * np.asarray(form.values)[mesh.he_edge]

    @staticmethod
    def cohomology_basis(
        mesh: TriMesh, basis: HomologyBasis, seed: int = 0
    ) -> List[OneForm]:
        """One closed, non-exact form per loop, jumping by 1 across it"""
        generator = streams.substream(seed, streams.COHOMOLOGY)
        forms = []
        for k, loop in enumerate(basis.loops):
            interior = generator.random(mesh.n_vertices)
            forms.append(FormsService._loop_form(mesh, loop, interior, k))
        logger.info("stage=forms op=cohomology_basis forms=%d", len(forms))
        return forms

    @staticmethod
    def _loop_form(mesh: TriMesh, loop: Sequence[int], interior: np.ndarray, k: int) -> OneForm:
        if len(set(loop)) != len(loop) or len(loop) < 3:
            raise SliceFailure(f"loop {k} is not simple", stage=STAGE)

        corner = interior[mesh.he_source].copy()
        n = len(loop)
        for i, v in enumerate(loop):
            h_out = mesh.halfedge(v, loop[(i + 1) % n])
            h_back = mesh.halfedge(v, loop[i - 1])
            if h_out < 0 or h_back < 0:
                raise SliceFailure(f"loop {k} leaves the edge graph at vertex {v}", stage=STAGE)
            ring = mesh.outgoing(v)
            start = ring.index(h_out)
            side = 1.0
            for h in ring[start:] + ring[:start]:
                if h == h_back:
                    side = 0.0
                corner[h] = side

        he = np.arange(3 * mesh.n_faces)
        nxt = 3 * (he // 3) + (he % 3 + 1) % 3
        per_he = (corner[nxt] - corner) * mesh.he_sign
        values = np.zeros(mesh.n_edges)
        values[mesh.he_edge] = per_he
        mismatch = np.abs(per_he - values[mesh.he_edge])
        on_loop = [mesh.edge_index(s, t)[0] for s, t in HomologyBasis.oriented_edges(list(loop))]
        mismatch[np.isin(mesh.he_edge, on_loop)] = 0.0
        if mismatch.max() > 1e-12:
            raise SliceFailure(f"sides of loop {k} are inconsistent", stage=STAGE)
        values[on_loop] = 0.0
        return OneForm(values)

    @staticmethod
    def loop_matrix(mesh: TriMesh, basis: HomologyBasis) -> sparse.csr_matrix:
        """(2g x E) signed edge incidence of the loops"""
        rows, cols, data = [], [], []
        for j, loop in enumerate(basis.loops):
            for s, t in HomologyBasis.oriented_edges(loop):
                e, sign = mesh.edge_index(s, t)
                rows.append(j)
                cols.append(e)
                data.append(float(sign))
        return sparse.csr_matrix((data, (rows, cols)), shape=(len(basis), mesh.n_edges))

    @staticmethod
    def period(mesh: TriMesh, form: OneForm, loop: Sequence[int]) -> float:
        """Line integral of a form along one closed loop"""
        return float(sum(
            form.on(*mesh.edge_index(s, t)) for s, t in HomologyBasis.oriented_edges(list(loop))
        ))

    @staticmethod
    def period_matrix(mesh: TriMesh, forms: Sequence[OneForm], basis: HomologyBasis) -> np.ndarray:
        """Entry (i, j) is the period of form i over loop j"""
        values = np.stack([f.values for f in forms])
        periods = np.asarray(FormsService.loop_matrix(mesh, basis) @ values.T).T
        rank = np.linalg.matrix_rank(periods, tol=settings.PERIOD_TOLERANCE * max(1.0, np.abs(periods).max()))
        if rank < len(basis):
            raise RankDeficient(f"period matrix has rank {rank} < {len(basis)}", stage=STAGE)
        return periods

    @staticmethod
    def face_coefficients(mesh: TriMesh, form: OneForm):
        """Constant covector (a, b) per face in its isometric frame.

        Returns ``(coefficients (F, 2), residual (F,))`` where the residual is
        the third-edge mismatch, zero for closed forms.
        """
        frames = mesh.face_frames
        he_vals = FormsService.halfedge_values(mesh, form).reshape(-1, 3)
        edges = np.stack([frames[:, 1] - frames[:, 0], frames[:, 2] - frames[:, 0]], axis=1)
        rhs = np.stack([he_vals[:, 0], -he_vals[:, 2]], axis=1)
        coefficients = np.linalg.solve(edges, rhs[..., None])[..., 0]
        third = frames[:, 2] - frames[:, 1]
        residual = he_vals[:, 1] - np.einsum("ij,ij->i", third, coefficients)
        return coefficients, residual
