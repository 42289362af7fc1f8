"""Closed-form reference solution of the 1D cubic problem.

On (-xmax, xmax) with p = 3 the positive solution is
``A cn(beta x; m)`` with ``m = (1 + beta^-2)/2``, ``A = sqrt(1 + beta^2)``
and beta chosen so the first zero of cn lands exactly on the boundary,
``beta xmax = K(m)``.  Substituting cn'' = (2m-1) cn - 2m cn^3 into the
equation forces A^2 = 2 m beta^2 = 1 + beta^2; the square root is enforced
at build time by an ODE-residual check in the test suite.

cn and K are computed with the arithmetic-geometric mean (descending
Landen) method; no external special-function library is involved so this
module can serve as an independent oracle for the finite element solver.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError

_AGM_MAX_STEPS = 64


def _agm_scale(m_complement):
    """AGM tables (a_n, c_n) for modulus with 1 - m = m_complement.

    Indexing follows the standard descending-Landen scheme: c_0 = sqrt(m)
    and c_{n+1} = (a_n - b_n)/2, so each table row carries the pair used by
    one halving step of the amplitude recursion.
    """
    a = 1.0
    b = math.sqrt(m_complement)
    c = math.sqrt(max(1.0 - m_complement, 0.0))
    table = [(a, c)]
    for _ in range(_AGM_MAX_STEPS):
        # c decreases monotonically; stop at roundoff level or stagnation.
        if abs(c) <= 1e-15 * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        if len(table) > 1 and abs(c) >= abs(table[-1][1]):
            break
        table.append((a, c))
    else:
        raise ArithmeticError("AGM did not converge")
    return table


def _check_parameter(m):
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic parameter out of range [0, 1): {m}")


def complete_K(m):
    """Complete elliptic integral of the first kind, K(m), via AGM."""
    _check_parameter(m)
    return _complete_K_from_complement(1.0 - m)


def _complete_K_from_complement(m_complement):
    if m_complement <= 0.0:
        raise ValueError("elliptic parameter out of range [0, 1)")
    table = _agm_scale(m_complement)
    a_final = table[-1][0]
    return math.pi / (2.0 * a_final)


def _cn_agm(u, m_complement):
    """cn(u; m) with 1 - m = m_complement, vectorized over u."""
    u = np.asarray(u, dtype=float)
    table = _agm_scale(m_complement)
    n_last = len(table) - 1
    a_final = table[-1][0]
    phi = (2.0**n_last) * a_final * u
    for a, c in reversed(table[1:]):
        phi = 0.5 * (phi + np.arcsin(np.clip((c / a) * np.sin(phi), -1.0, 1.0)))
    cn = np.cos(phi)
    return cn if cn.ndim else float(cn)


def jacobi_cn(u, m):
    """Jacobi elliptic cn(u; m) in the parameter convention m = k^2."""
    _check_parameter(m)
    return _cn_agm(u, 1.0 - m)


@dataclass(frozen=True)
class EllipticParams:
    """Parameters of the cn-profile solution on (-xmax, xmax)."""

    xmax: float
    beta: float
    m: float
    K: float
    amplitude: float
    branch: int = 0
    # 1 - m kept separately: for large domains m is within roundoff of 1 and
    # the complement is what the AGM actually needs.
    m_complement: float = None

    def __post_init__(self):
        if self.m_complement is None:
            object.__setattr__(self, "m_complement", 1.0 - self.m)


def solve_beta(xmax, branch=0):
    """Match the cn quarter-period to the domain: beta xmax = (2 branch + 1) K.

    The ground state is branch 0; higher branches put 2 branch interior
    zeros in the profile and are exposed but not validated against any
    reference.  Root finding is bisection on log(1 - m), which stays
    accurate in the near-soliton regime where m approaches 1.
    """
    if xmax <= 0:
        raise ValueError("domain half-width must be positive")
    if branch < 0:
        raise ValueError("branch index must be >= 0")
    periods = 2 * branch + 1

    def residual(log_t):
        t = math.exp(log_t)  # t = 1 - m
        beta = 1.0 / math.sqrt(1.0 - 2.0 * t)
        return beta * xmax - periods * _complete_K_from_complement(t)

    lo, hi = math.log(1e-250), math.log(0.5 - 1e-12)
    f_lo, f_hi = residual(lo), residual(hi)
    if not (f_lo < 0.0 < f_hi):
        raise BracketError(
            f"no sign change for the period-matching residual on xmax={xmax}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        # beta grows with t = 1 - m; stop once the bracket is tight in beta.
        beta_small = 1.0 / math.sqrt(1.0 - 2.0 * math.exp(lo))
        beta_big = 1.0 / math.sqrt(1.0 - 2.0 * math.exp(hi))
        if beta_big - beta_small <= 1e-13 * beta_big:
            break
    t = math.exp(0.5 * (lo + hi))
    beta = 1.0 / math.sqrt(1.0 - 2.0 * t)
    return EllipticParams(
        xmax=float(xmax),
        beta=beta,
        m=1.0 - t,
        K=_complete_K_from_complement(t),
        amplitude=math.sqrt(1.0 + beta * beta),
        branch=branch,
        m_complement=t,
    )


def exact_solution(x, params):
    """Profile value(s) at ``x``; vanishes at the domain endpoints."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > params.xmax * (1 + 1e-12)):
        raise ValueError(f"coordinate outside [-{params.xmax}, {params.xmax}]")
    return params.amplitude * _cn_agm(params.beta * x_arr, params.m_complement)
