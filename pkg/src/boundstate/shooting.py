"""Radial excited states by subdomain solves and slope matching.

The direct iteration always lands on a radial ground state, so the one-node
excited state is built from two positive subdomain solutions: one on
(0, r0) with a natural condition at the origin, one on (r0, Rmax), both
pinned to zero at r0.  Flipping the outer piece's sign and gluing at r0
gives a candidate whose slopes must match; the matching radius is found by
root finding on the one-sided derivative mismatch.
"""

from dataclasses import dataclass

import numpy as np

from .assemble import Field, nodal_values
from .core import ProblemSpec, StopRule, iterate
from .errors import BracketError, ConvergenceError, TrivialCollapseError
from .mesh import RADIAL, Mesh, build_radial_mesh


@dataclass
class GluedState:
    """A sign-changing radial candidate glued at r0.

    ``inner`` and ``outer`` are the positive subdomain solutions on their
    own meshes; ``glued`` lives on the concatenated (0, Rmax) mesh with the
    outer piece negated, vanishing nodally at r0 and Rmax.
    """

    r0: float
    inner: Field
    outer: Field
    glued: Field
    mismatch: float


def solve_subdomain(rlo, rhi, neumann_at_left, spec, n_cells, stop=None):
    """Positive solution on the radial subinterval (rlo, rhi).

    ``neumann_at_left`` leaves the left end free and is only allowed at
    rlo = 0; every solve uses the r-weighted weak form, so annular
    subdomains keep the full radial operator.
    """
    mesh = build_radial_mesh(rhi, n_cells, rmin=rlo, neumann_at_left=neumann_at_left)
    sub_spec = ProblemSpec(
        mesh, spec.p, spec.gamma, lumped_mass=spec.lumped_mass
    )
    r = mesh.nodes[mesh.interior_nodes]
    if neumann_at_left:
        u0 = rhi**2 - r**2
    else:
        u0 = (rhi - r) * (r - rlo)
    stop = stop or StopRule(max_steps=400, m_tol=1e-12, diff_tol=1e-13)
    sol, trace = iterate(Field(mesh, u0), sub_spec, stop)
    if trace.h1_norm[-1] < 1e-8:
        raise TrivialCollapseError(
            f"subdomain ({rlo}, {rhi}) collapsed to the zero solution"
        )
    if sol.values.min() <= 0.0:
        raise ConvergenceError(
            f"subdomain ({rlo}, {rhi}) solution lost positivity"
        )
    return sol


def _one_sided_slope(field, at_left):
    """Second-order 3-point one-sided derivative at a subdomain endpoint."""
    mesh = field.mesh
    full = nodal_values(field)
    x = mesh.nodes
    if at_left:
        h = x[1] - x[0]
        return (-3.0 * full[0] + 4.0 * full[1] - full[2]) / (2.0 * h)
    h = x[-1] - x[-2]
    return (3.0 * full[-1] - 4.0 * full[-2] + full[-3]) / (2.0 * h)


def slope_mismatch(r0, spec, n_cells_per_side, raw_difference=False, stop=None):
    """Derivative mismatch of the glued candidate at r0.

    With the default convention the outer piece is sign-flipped, so the
    matching condition is ``phi0'(r0-) + phi1'(r0+) = 0`` and this function
    returns that sum (negative slope meeting positive slope).
    ``raw_difference=True`` returns the plain difference of the two
    positive pieces' slopes instead; it never vanishes (both candidates
    approach zero from above) and is kept only for comparison.
    """
    rmax = float(spec.mesh.nodes[-1])
    if not 0.0 < r0 < rmax:
        raise ValueError(f"matching radius must lie inside (0, {rmax})")
    if n_cells_per_side < 4:
        raise ValueError("need at least 4 cells per side for the slope stencils")
    inner = solve_subdomain(0.0, r0, True, spec, n_cells_per_side, stop=stop)
    outer = solve_subdomain(r0, rmax, False, spec, n_cells_per_side, stop=stop)
    d_inner = _one_sided_slope(inner, at_left=False)
    d_outer = _one_sided_slope(outer, at_left=True)
    if raw_difference:
        return d_inner - d_outer
    return d_inner + d_outer


def scan_mismatch(spec, n_cells_per_side, grid=None, n_points=20):
    """Evaluate the mismatch on a grid of matching radii.

    The default grid is ``n_points`` equispaced radii in
    (0.05 Rmax, 0.8 Rmax).  Returns (radii, mismatch values).
    """
    rmax = float(spec.mesh.nodes[-1])
    if grid is None:
        grid = np.linspace(0.05 * rmax, 0.8 * rmax, n_points)
    values = np.array(
        [slope_mismatch(r0, spec, n_cells_per_side) for r0 in grid]
    )
    return np.asarray(grid, dtype=float), values


def _glue(inner, outer, r0, mismatch):
    mesh_in, mesh_out = inner.mesh, outer.mesh
    nodes = np.concatenate([mesh_in.nodes, mesh_out.nodes[1:]])
    n = nodes.size
    elements = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    mask = np.zeros(n, dtype=bool)
    mask[-1] = True  # only the outer radius is pinned; r0 is a regular DOF
    full_mesh = Mesh(RADIAL, nodes, elements, mask)
    values = np.concatenate(
        [inner.values, [0.0], -outer.values]
    )
    return GluedState(
        r0=r0,
        inner=inner,
        outer=outer,
        glued=Field(full_mesh, values),
        mismatch=mismatch,
    )


def find_excited_state(spec, bracket=None, tol=1e-6, n_cells_per_side=600,
                       max_root_steps=80):
    """Locate the matching radius and return the glued one-node state.

    Root finding is a secant iteration safeguarded by bisection on a
    sign-change bracket; without an explicit ``bracket`` the default scan
    grid is searched for one first.
    """

    def f(r0):
        return slope_mismatch(r0, spec, n_cells_per_side)

    if bracket is None:
        grid, values = scan_mismatch(spec, n_cells_per_side)
        sign_change = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
        if sign_change.size == 0:
            raise BracketError("no sign change of the slope mismatch on the scan grid")
        i = sign_change[0]
        lo, hi = float(grid[i]), float(grid[i + 1])
        f_lo, f_hi = float(values[i]), float(values[i + 1])
    else:
        lo, hi = float(bracket[0]), float(bracket[1])
        f_lo, f_hi = f(lo), f(hi)
        if not f_lo * f_hi < 0.0:
            raise BracketError(
                f"mismatch does not change sign on [{lo}, {hi}] "
                f"(F={f_lo:.3e}, {f_hi:.3e})"
            )

    r0, f_r0 = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for _ in range(max_root_steps):
        if abs(f_r0) <= tol:
            break
        # Secant candidate from the bracket ends, bisection fallback.
        denom = f_hi - f_lo
        mid = lo + (hi - lo) * 0.5
        cand = hi - f_hi * (hi - lo) / denom if denom != 0.0 else mid
        if not lo < cand < hi:
            cand = mid
        f_cand = f(cand)
        if f_lo * f_cand <= 0.0:
            hi, f_hi = cand, f_cand
        else:
            lo, f_lo = cand, f_cand
        # Keep the better endpoint as the running root estimate.
        r0, f_r0 = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    if abs(f_r0) > tol:
        raise ConvergenceError(
            f"slope-mismatch root finding exhausted {max_root_steps} steps "
            f"(|F| = {abs(f_r0):.3e})",
            iterations=max_root_steps,
            residual=abs(f_r0),
        )

    inner = solve_subdomain(0.0, r0, True, spec, n_cells_per_side)
    outer = solve_subdomain(r0, float(spec.mesh.nodes[-1]), False, spec,
                            n_cells_per_side)
    return _glue(inner, outer, r0, f_r0)


def count_sign_changes(field):
    """Number of sign flips along the nodal values (zeros are transparent)."""
    full = nodal_values(field)
    signs = np.sign(full)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(signs) != 0))
