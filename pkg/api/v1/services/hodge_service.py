import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from api.v1.models.mesh import TriMesh, double_area
from api.v1.models.forms import OneForm
from api.v1.models.hodge import CotanWeights, HolomorphicForm
from api.v1.models.topology import HomologyBasis
from api.v1.services.forms_service import FormsService
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService
from api.utils.exceptions import DegenerateFace, SolverFailure, SingularGram
from core.config import settings

logger = logging.getLogger(__name__)

STAGE = "hodge"


class LaplaceFactor:
    """Sparse LU of the cotangent Laplacian with vertex 0 pinned"""

    def __init__(self, mesh: TriMesh, weights: CotanWeights):
        self.d0 = FormsService.d0_matrix(mesh)
        self.weights = weights.values
        laplacian = (self.d0.T @ sparse.diags(self.weights) @ self.d0).tocsc()
        self.laplacian = laplacian
        reduced = laplacian[1:, :][:, 1:].tocsc()
        try:
            self.lu = splu(reduced)
        except RuntimeError as exc:
            raise SolverFailure(f"factorization failed: {exc}", stage=STAGE) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        h = np.zeros(len(rhs))
        h[1:] = self.lu.solve(rhs[1:])
        if not np.isfinite(h).all():
            raise SolverFailure("non-finite potential", stage=STAGE)
        return h


class HodgeService:

    @staticmethod
    def cotan_weights(mesh: TriMesh) -> CotanWeights:
        p = mesh.vertices[mesh.faces]
        weights = np.zeros(mesh.n_edges)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            u = p[:, i] - p[:, k]
            v = p[:, j] - p[:, k]
            cross = double_area(u, v)
            if (cross <= 1e-14).any():
                raise DegenerateFace(
                    f"face {int(np.argmin(cross))} has zero area", stage=STAGE
                )
            cot = np.einsum("ij,ij->i", u, v) / cross
            weights += np.bincount(mesh.he_edge[i::3], weights=cot, minlength=mesh.n_edges)
        return CotanWeights(weights)

    @staticmethod
    def divergence(mesh: TriMesh, weights: CotanWeights, form: OneForm) -> np.ndarray:
        """Weighted vertex divergence sum_j w_ij * form([v_i, v_j])"""
        d0 = FormsService.d0_matrix(mesh)
        return -(d0.T @ (weights.values * form.values))

    @staticmethod
    def harmonize(
        mesh: TriMesh,
        weights: CotanWeights,
        form: OneForm,
        factor: Optional[LaplaceFactor] = None,
    ) -> OneForm:
        """Harmonic representative form + d0(h) of a closed form's class"""
        factor = factor or LaplaceFactor(mesh, weights)
        rhs = -(factor.d0.T @ (factor.weights * form.values))
        h = factor.solve(rhs)
        result = OneForm(form.values + factor.d0 @ h)

        residual = float(np.abs(HodgeService.divergence(mesh, weights, result)).max())
        bound = settings.HARMONIC_TOLERANCE * max(1.0, float(np.abs(rhs).max()))
        logger.debug("stage=hodge op=harmonize residual=%.3e", residual)
        if residual > bound:
            raise SolverFailure(f"divergence residual {residual:.3e} above {bound:.1e}", stage=STAGE)
        return result

    @staticmethod
    def hodge_star_face(coefficients: np.ndarray) -> np.ndarray:
        """(a, b) -> (-b, a), for a single covector or an (F, 2) array"""
        c = np.asarray(coefficients, dtype=np.float64)
        return np.stack([-c[..., 1], c[..., 0]], axis=-1)

    @staticmethod
    def wedge_integral(mesh: TriMesh, first: OneForm, second: OneForm) -> float:
        a, _ = FormsService.face_coefficients(mesh, first)
        b, _ = FormsService.face_coefficients(mesh, second)
        return HodgeService._wedge(mesh, a, b)

    @staticmethod
    def _wedge(mesh: TriMesh, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum((a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]) * mesh.face_areas))

    @staticmethod
    def star_wedge(mesh: TriMesh, form: OneForm) -> float:
        """Integral of form ^ (face-local star of form), i.e. sum (a^2 + b^2) * area"""
        a, _ = FormsService.face_coefficients(mesh, form)
        return HodgeService._wedge(mesh, a, HodgeService.hodge_star_face(a))

    @staticmethod
    def dirichlet_energy(mesh: TriMesh, weights: CotanWeights, form: OneForm) -> float:
        return float(0.5 * np.sum(weights.values * form.values ** 2))

    @staticmethod
    def gram_matrix(mesh: TriMesh, basis: Sequence[OneForm]) -> np.ndarray:
        coeffs = [FormsService.face_coefficients(mesh, f)[0] for f in basis]
        n = len(basis)
        gram = np.zeros((n, n))
        for k in range(n):
            for l in range(k + 1, n):
                gram[k, l] = HodgeService._wedge(mesh, coeffs[k], coeffs[l])
                gram[l, k] = -gram[k, l]
        return gram

    @staticmethod
    def conjugate(
        mesh: TriMesh,
        harmonic_basis: Sequence[OneForm],
        form: OneForm,
        gram: Optional[np.ndarray] = None,
    ) -> OneForm:
        """Conjugate harmonic form as a combination of the harmonic basis"""
        gram = HodgeService.gram_matrix(mesh, harmonic_basis) if gram is None else gram
        n = len(harmonic_basis)
        scale = max(float(np.abs(gram).max()), 1e-300)
        if np.linalg.matrix_rank(gram, tol=1e-10 * scale) < n:
            raise SingularGram("wedge matrix is singular", stage=STAGE)

        star = HodgeService.hodge_star_face(FormsService.face_coefficients(mesh, form)[0])
        rhs = np.array([
            HodgeService._wedge(mesh, star, FormsService.face_coefficients(mesh, w)[0])
            for w in harmonic_basis
        ])
        coefficients = np.linalg.solve(gram.T, rhs)
        return OneForm.combine(coefficients, harmonic_basis)


    @staticmethod
    def involution_defect(
        mesh: TriMesh,
        harmonic_basis: Sequence[OneForm],
        loops: HomologyBasis,
        gram: Optional[np.ndarray] = None,
    ) -> float:
        """Largest period of conj(conj(w)) + w over the basis loops, relative to the periods of w.

        Zero in the smooth limit; on a mesh it shrinks with the squared edge length.
        """
        gram = HodgeService.gram_matrix(mesh, harmonic_basis) if gram is None else gram
        loop_matrix = FormsService.loop_matrix(mesh, loops)
        scale = 0.0
        worst = 0.0
        for w in harmonic_basis:
            once = HodgeService.conjugate(mesh, harmonic_basis, w, gram)
            twice = HodgeService.conjugate(mesh, harmonic_basis, once, gram)
            periods = np.asarray(loop_matrix @ w.values)
            scale = max(scale, float(np.abs(periods).max()))
            worst = max(worst, float(np.abs(np.asarray(loop_matrix @ twice.values) + periods).max()))
        defect = worst / max(scale, 1e-300)
        logger.debug("stage=hodge op=involution_defect defect=%.3e", defect)
        return defect

    @staticmethod
    def involution_bound(mesh: TriMesh) -> float:
        """Discretization allowance for the conj-conj defect: c * mean_edge^2 / area"""
        return settings.INVOLUTION_FACTOR * float(mesh.edge_lengths.mean()) ** 2 / float(mesh.face_areas.sum())
    @staticmethod
    def harmonic_basis(mesh: TriMesh, weights: CotanWeights, forms: Sequence[OneForm]) -> List[OneForm]:
        factor = LaplaceFactor(mesh, weights)
        return [HodgeService.harmonize(mesh, weights, f, factor) for f in forms]

    @staticmethod
    def holomorphic_from_harmonic(mesh: TriMesh, harmonic: Sequence[OneForm]) -> List[HolomorphicForm]:
        gram = HodgeService.gram_matrix(mesh, harmonic)
        return [
            HolomorphicForm(omega=w, conj=HodgeService.conjugate(mesh, harmonic, w, gram))
            for w in harmonic
        ]

    @staticmethod
    def holomorphic_basis(mesh: TriMesh, seed: int = 0) -> List[HolomorphicForm]:
        """Cohomology basis, harmonized, paired with conjugates"""
        MeshService.require_handles(mesh)
        tree = TopologyService.dual_spanning_tree(mesh)
        cut = TopologyService.cut_graph(mesh, tree)
        loops = TopologyService.homology_basis(mesh, cut)
        closed = FormsService.cohomology_basis(mesh, loops, seed)
        weights = HodgeService.cotan_weights(mesh)
        harmonic = HodgeService.harmonic_basis(mesh, weights, closed)
        forms = HodgeService.holomorphic_from_harmonic(mesh, harmonic)
        logger.info("stage=hodge op=holomorphic_basis forms=%d", len(forms))
        return forms
