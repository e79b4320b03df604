import numpy as np
import pytest

from api.v1.models.forms import OneForm
from api.v1.models.hodge import HolomorphicForm
from api.v1.schemas.run_config import MeshSource, RunConfig
from api.v1.services.forms_service import FormsService
from api.v1.services.hodge_service import HodgeService
from api.v1.services.mesh_service import MeshService
from api.v1.services.topology_service import TopologyService
from api.v1.services.covering_service import CoveringService
from api.v1.services.pipeline_service import PipelineService

GRID = 8

TETRAHEDRON_OFF = """OFF
4 4 6
0 0 0
1 0 0
0 1 0
0 0 1
3 0 2 1
3 0 1 3
3 0 3 2
3 1 2 3
"""


def grid_form(mesh, n, m):
    """du + i dv on an n x m grid torus (vertex i * m + j sits at u = i/n, v = j/m)"""
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    di = (b // m - a // m + n // 2) % n - n // 2
    dj = (b % m - a % m + m // 2) % m - m // 2
    return HolomorphicForm(OneForm(di / n), OneForm(dj / m))


@pytest.fixture(scope="session")
def torus():
    return MeshService.generate_torus_grid(GRID)


@pytest.fixture(scope="session")
def genus2():
    return MeshService.generate_genus_g(2, 6)


@pytest.fixture(scope="session")
def flat_torus():
    return MeshService.generate_flat_torus(GRID)


@pytest.fixture(scope="session")
def genus2_forms(genus2):
    """(loops, closed, weights, harmonic) on the small genus-2 mesh"""
    tree = TopologyService.dual_spanning_tree(genus2)
    cut = TopologyService.cut_graph(genus2, tree)
    loops = TopologyService.homology_basis(genus2, cut)
    closed = FormsService.cohomology_basis(genus2, loops)
    weights = HodgeService.cotan_weights(genus2)
    harmonic = HodgeService.harmonic_basis(genus2, weights, closed)
    return loops, closed, weights, harmonic


@pytest.fixture(scope="session")
def torus_tree(torus):
    return TopologyService.dual_spanning_tree(torus)


@pytest.fixture(scope="session")
def flat_form(torus):
    return grid_form(torus, GRID, GRID)


@pytest.fixture(scope="session")
def flat_atlas(torus, torus_tree, flat_form):
    """Unit-square torus: the covering of the grid form"""
    return CoveringService.build_atlas(torus, torus_tree, flat_form, base=0, label="grid")


@pytest.fixture(scope="session")
def torus_graph(torus):
    return MeshService.communication_graph(torus)


@pytest.fixture(scope="session")
def torus_config():
    return RunConfig(mesh=MeshSource(generate=f"torus={GRID}"), seed=0, walk_seeds=2)


@pytest.fixture(scope="session")
def torus_pipeline(torus_config):
    return PipelineService.run(torus_config)


@pytest.fixture
def tetrahedron_file(tmp_path):
    path = tmp_path / "tetra.off"
    path.write_text(TETRAHEDRON_OFF)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(0)
