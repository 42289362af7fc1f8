import numpy as np
import pytest

from boundstate import (
    Field,
    ProblemSpec,
    StopRule,
    build_radial_mesh,
    compute_M,
    count_sign_changes,
    energy,
    h1_norm,
    iterate,
    nodal_values,
    petviashvili_step,
    scan_mismatch,
    slope_mismatch,
    solve_subdomain,
)
from boundstate.errors import BracketError


def test_full_domain_subdomain_matches_direct_solve(radial_setup):
    mesh, spec, ground, _ = radial_setup
    via_subdomain = solve_subdomain(0.0, 25.0, True, spec, 500)
    assert via_subdomain.mesh.n_interior == mesh.n_interior
    rel = np.linalg.norm(via_subdomain.values - ground.values) / np.linalg.norm(
        ground.values
    )
    assert rel <= 1e-9


def test_inner_subdomain_boundary_and_positivity(radial_setup):
    _, spec, _, _ = radial_setup
    inner = solve_subdomain(0.0, 4.0, True, spec, 200)
    assert inner.mesh.boundary_mask[-1]  # pinned at r0
    assert not inner.mesh.boundary_mask[0]  # free at the origin
    assert nodal_values(inner)[-1] == 0.0
    assert inner.values.min() > 0.0


def test_outer_subdomain_positive_interior(radial_setup):
    _, spec, _, _ = radial_setup
    outer = solve_subdomain(4.0, 25.0, False, spec, 200)
    assert outer.mesh.boundary_mask[0] and outer.mesh.boundary_mask[-1]
    assert outer.values.min() > 0.0


def test_neumann_only_at_origin(radial_setup):
    _, spec, _, _ = radial_setup
    with pytest.raises(ValueError, match="natural left boundary"):
        solve_subdomain(3.0, 25.0, True, spec, 100)


def test_mismatch_validation(radial_setup):
    _, spec, _, _ = radial_setup
    with pytest.raises(ValueError, match="matching radius"):
        slope_mismatch(30.0, spec, 100)
    with pytest.raises(ValueError, match="4 cells"):
        slope_mismatch(5.0, spec, 3)


def test_mismatch_scan_is_finite_with_sign_change(radial_setup):
    _, spec, _, _ = radial_setup
    grid, values = scan_mismatch(spec, 150, n_points=10)
    assert np.all(np.isfinite(values))
    assert grid[0] == pytest.approx(0.05 * 25.0)
    assert grid[-1] == pytest.approx(0.8 * 25.0)
    signs = np.sign(values)
    assert np.any(signs[:-1] * signs[1:] < 0)


def test_raw_difference_variant_has_no_root(radial_setup):
    # Both subdomain pieces are positive with slopes of opposite sign at
    # r0, so the plain slope difference never vanishes.
    _, spec, _, _ = radial_setup
    for r0 in (2.0, 6.0, 12.0):
        assert slope_mismatch(r0, spec, 120, raw_difference=True) < 0.0


def test_excited_state_properties(radial_setup, excited600):
    mesh, spec, ground, _ = radial_setup
    state = excited600
    assert 0.0 < state.r0 < 25.0
    assert abs(state.mismatch) <= 1e-6
    glued = state.glued

    full = nodal_values(glued)
    r0_index = np.argmin(np.abs(glued.mesh.nodes - state.r0))
    assert abs(glued.mesh.nodes[r0_index] - state.r0) <= 1e-12
    assert full[r0_index] == 0.0
    assert full[-1] == 0.0
    assert count_sign_changes(glued) == 1
    assert state.inner.values.min() > 0.0
    assert state.outer.values.min() > 0.0

    glued_spec = ProblemSpec(glued.mesh, 3.0)
    assert abs(compute_M(glued, glued_spec) - 1.0) <= 1e-3
    assert energy(glued, glued_spec) > energy(ground, spec)

    stepped = petviashvili_step(glued, glued_spec)
    residual = h1_norm(stepped - glued, glued_spec.L) / h1_norm(glued, glued_spec.L)
    assert residual <= 1e-3


def test_no_bracket_raises(radial_setup):
    from boundstate import find_excited_state

    _, spec, _, _ = radial_setup
    with pytest.raises(BracketError, match="sign"):
        find_excited_state(spec, bracket=(15.0, 20.0), n_cells_per_side=100)


def test_direct_iteration_avoids_excited_state(radial_setup):
    # A sign-changing initial guess still lands on the (positive) ground
    # state profile up to overall sign: the excited state is linearly
    # unstable for the iteration.
    mesh, spec, ground, _ = radial_setup
    r = mesh.nodes[mesh.interior_nodes]
    guess = Field(mesh, (625.0 - r**2) * np.cos(np.pi * r / 8.0))
    sol, trace = iterate(guess, spec,
                         StopRule(max_steps=300, m_tol=1e-12, diff_tol=None))
    assert count_sign_changes(sol) == 0
    assert abs(energy(sol, spec) - energy(ground, spec)) <= 1e-6


def test_count_sign_changes():
    mesh = build_radial_mesh(1.0, 6)
    f = Field(mesh, np.array([1.0, 2.0, 0.0, -1.0, -2.0, 3.0]))
    assert count_sign_changes(f) == 2
    assert count_sign_changes(Field(mesh, np.ones(6))) == 0
    assert count_sign_changes(Field(mesh, np.zeros(6))) == 0
