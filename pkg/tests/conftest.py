import pathlib

import pytest

from boundstate import (
    Field,
    ProblemSpec,
    StopRule,
    build_interval_mesh,
    build_radial_mesh,
    find_excited_state,
    iterate,
    linearized_spectrum,
    load_triangulation,
    solve_beta,
)

MESH_DIR = pathlib.Path(__file__).resolve().parent.parent / "meshes"


def shipped_mesh(stem):
    node = (MESH_DIR / f"{stem}.node").read_text()
    ele = (MESH_DIR / f"{stem}.ele").read_text()
    return load_triangulation(node, ele)


@pytest.fixture(scope="session")
def beta2():
    return solve_beta(2.0)


@pytest.fixture(scope="session")
def interval400():
    return build_interval_mesh(-2.0, 2.0, 400)


@pytest.fixture(scope="session")
def spec400(interval400):
    return ProblemSpec(interval400, 3.0)


@pytest.fixture(scope="session")
def parabola400(interval400):
    xs = interval400.nodes[interval400.interior_nodes]
    return Field(interval400, (2.0 - xs) * (2.0 + xs))


@pytest.fixture(scope="session")
def phi400(spec400, parabola400):
    """Fully converged 1D solution (fixed-point to roundoff)."""
    phi, _ = iterate(
        parabola400, spec400, StopRule(max_steps=150, m_tol=None, diff_tol=None)
    )
    return phi


@pytest.fixture(scope="session")
def spectrum400(phi400, spec400):
    return linearized_spectrum(phi400, spec400, 3, tol=1e-10)


@pytest.fixture(scope="session")
def radial_setup():
    mesh = build_radial_mesh(25.0, 500)
    spec = ProblemSpec(mesh, 3.0)
    r = mesh.nodes[mesh.interior_nodes]
    ground, trace = iterate(
        Field(mesh, 625.0 - r**2),
        spec,
        StopRule(max_steps=200, m_tol=1e-12, diff_tol=None),
    )
    return mesh, spec, ground, trace


@pytest.fixture(scope="session")
def excited600(radial_setup):
    _, spec, _, _ = radial_setup
    return find_excited_state(spec, tol=1e-6, n_cells_per_side=600)
