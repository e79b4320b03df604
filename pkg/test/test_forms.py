import numpy as np
import pytest

from api.v1.models.forms import OneForm
from api.v1.services.forms_service import FormsService
from api.v1.services.topology_service import TopologyService
from api.utils.exceptions import RankDeficient


@pytest.fixture(scope="module")
def torus_basis(torus):
    tree = TopologyService.dual_spanning_tree(torus)
    cut = TopologyService.cut_graph(torus, tree)
    return TopologyService.homology_basis(torus, cut)


def test_exact_forms_are_closed(torus, rng):
    f = rng.standard_normal(torus.n_vertices)
    assert FormsService.d1(torus, FormsService.d0(torus, f)).max_abs() < 1e-12
    product = FormsService.d1_matrix(torus) @ FormsService.d0_matrix(torus)
    assert abs(product).max() == 0


def test_cohomology_basis_is_closed_with_integer_periods(torus, torus_basis):
    forms = FormsService.cohomology_basis(torus, torus_basis, seed=3)
    assert len(forms) == 2
    for form in forms:
        assert FormsService.d1(torus, form).max_abs() <= 1e-12

    periods = FormsService.period_matrix(torus, forms, torus_basis)
    assert np.linalg.matrix_rank(periods) == 2
    assert np.allclose(periods, np.rint(periods), atol=1e-9)


def test_cohomology_basis_is_seeded(torus, torus_basis):
    a = FormsService.cohomology_basis(torus, torus_basis, seed=1)
    b = FormsService.cohomology_basis(torus, torus_basis, seed=1)
    c = FormsService.cohomology_basis(torus, torus_basis, seed=2)
    assert np.array_equal(a[0].values, b[0].values)
    assert not np.array_equal(a[0].values, c[0].values)
    # different seeds differ by an exact form only
    periods_a = FormsService.period_matrix(torus, a, torus_basis)
    periods_c = FormsService.period_matrix(torus, c, torus_basis)
    assert np.allclose(periods_a, periods_c, atol=1e-12)


def test_period_of_single_loop_matches_matrix(torus, torus_basis):
    forms = FormsService.cohomology_basis(torus, torus_basis)
    periods = FormsService.period_matrix(torus, forms, torus_basis)
    for i, form in enumerate(forms):
        for j, loop in enumerate(torus_basis.loops):
            assert FormsService.period(torus, form, loop) == pytest.approx(periods[i, j], abs=1e-12)


def test_rank_deficient_periods(torus, torus_basis):
    forms = FormsService.cohomology_basis(torus, torus_basis)
    with pytest.raises(RankDeficient):
        FormsService.period_matrix(torus, [forms[0], 2.0 * forms[0]], torus_basis)


def test_face_coefficients_of_closed_form(torus, torus_basis):
    form = FormsService.cohomology_basis(torus, torus_basis)[0]
    coefficients, residual = FormsService.face_coefficients(torus, form)
    assert coefficients.shape == (torus.n_faces, 2)
    assert np.abs(residual).max() < 1e-12


def test_one_form_arithmetic():
    a = OneForm(np.array([1.0, 2.0]))
    b = OneForm(np.array([0.5, -1.0]))
    assert np.array_equal((a + b).values, [1.5, 1.0])
    assert np.array_equal((a - b).values, [0.5, 3.0])
    assert np.array_equal((2 * a).values, [2.0, 4.0])
    assert np.array_equal(OneForm.combine([1.0, 2.0], [a, b]).values, [2.0, 0.0])
    assert a.on(1, -1) == -2.0


def test_genus_two_basis_is_closed_with_integer_periods(genus2, genus2_forms):
    loops, closed, _, _ = genus2_forms
    assert len(loops) == 4 and len(closed) == 4
    for form in closed:
        assert FormsService.d1(genus2, form).max_abs() <= 1e-12
    periods = FormsService.period_matrix(genus2, closed, loops)
    assert np.linalg.matrix_rank(periods) == 4
    assert np.allclose(periods, np.rint(periods), atol=1e-9)
