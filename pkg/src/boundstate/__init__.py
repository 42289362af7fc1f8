"""Fixed-point solver for semilinear elliptic Dirichlet bound states.

Computes nontrivial solutions of ``-phi + Laplacian(phi) + |phi|^(p-1) phi = 0``
with zero boundary values on intervals, radial 2D domains, and triangulated
2D domains, using a normalization-stabilized Picard iteration, and provides
the spectral and sequence diagnostics that explain when and how fast the
iteration converges.
"""

from .assemble import (
    Field,
    SparseOperator,
    assemble_L,
    assemble_mass,
    assemble_weighted_mass,
    h1_inner,
    h1_norm,
    interpolate,
    lp_norm,
    nodal_values,
    nonlinear_load,
    zeros_field,
)
from .core import (
    IterationTrace,
    ProblemSpec,
    StopRule,
    apply_linearization,
    check_sequence_inequalities,
    compute_M,
    critical_exponent,
    energy,
    gamma_star,
    iterate,
    linearized_spectrum,
    modified_energy,
    naive_step,
    petviashvili_step,
)
from .exact import EllipticParams, complete_K, exact_solution, jacobi_cn, solve_beta
from .linalg import (
    SolveConfig,
    SpectrumResult,
    solve_spd,
    top_generalized_eigenpairs,
)
from .mesh import (
    Mesh,
    build_interval_mesh,
    build_radial_mesh,
    domain_measure,
    element_measures,
    load_triangulation,
    save_triangulation,
    validate_boundary_markers,
)
from .shooting import (
    GluedState,
    count_sign_changes,
    find_excited_state,
    scan_mismatch,
    slope_mismatch,
    solve_subdomain,
)

__version__ = "0.1.0"
