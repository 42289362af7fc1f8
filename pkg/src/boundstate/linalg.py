"""Sparse SPD solves and the generalized symmetric eigensolver.

The eigensolver targets the few largest eigenvalues of ``L^{-1} B`` where B
is symmetric positive semidefinite and L is SPD; that operator is
self-adjoint in the L inner product, so plain power iteration with
L-orthogonal deflation is enough at the problem sizes used here.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import ConvergenceError, SingularMatrixError
from .rng import XorShift64Star

CONJUGATE_GRADIENT = "conjugate_gradient"
BANDED_CHOLESKY = "banded_cholesky"

# Default seed for eigensolver start vectors; recorded in every SpectrumResult.
DEFAULT_EIGEN_SEED = 20240901


@dataclass
class SolveConfig:
    rel_tolerance: float = 1e-12
    max_iterations: int = None  # defaults to 10 n
    method: str = CONJUGATE_GRADIENT

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError("rel_tolerance must lie in (0, 1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.method not in (CONJUGATE_GRADIENT, BANDED_CHOLESKY):
            raise ValueError(f"unknown solve method {self.method!r}")


def _cg(a_csr, b, rtol, max_iter):
    """Jacobi-preconditioned conjugate gradients on a CSR matrix."""
    diag = a_csr.diagonal()
    if np.any(diag <= 0):
        raise SingularMatrixError("matrix has a nonpositive diagonal entry")
    inv_diag = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    b_norm = np.linalg.norm(b)
    tol = rtol * b_norm
    for it in range(max_iter):
        if np.linalg.norm(r) <= tol:
            return x
        ap = a_csr @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(a_csr @ x - b)
    if res <= tol:
        return x
    raise ConvergenceError(
        f"conjugate gradients stalled after {max_iter} iterations "
        f"(residual {res:.3e}, target {tol:.3e})",
        iterations=max_iter,
        residual=res,
    )


def _to_banded(a_csr):
    coo = a_csr.tocoo()
    bw = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
    n = a_csr.shape[0]
    ab = np.zeros((bw + 1, n))
    upper = coo.col >= coo.row
    r, c, v = coo.row[upper], coo.col[upper], coo.data[upper]
    ab[bw - (c - r), c] = v
    return ab


def solve_spd(A, b, cfg=None):
    """Solve ``A x = b`` for SPD A to ``cfg.rel_tolerance`` residual accuracy."""
    cfg = cfg or SolveConfig()
    b = np.asarray(b, dtype=float)
    if not np.linalg.norm(b) > 0.0:
        return np.zeros_like(b)
    a_csr = A.to_scipy()
    if cfg.method == CONJUGATE_GRADIENT:
        max_iter = cfg.max_iterations or 10 * A.n
        return _cg(a_csr, b, cfg.rel_tolerance, max_iter)
    ab = _to_banded(a_csr)
    try:
        factor = scipy.linalg.cholesky_banded(ab, lower=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"banded Cholesky failed: {exc}") from exc
    return scipy.linalg.cho_solve_banded((factor, False), b)


def factorized_spd(A):
    """Return a reusable direct solve callable for an SPD SparseOperator."""
    return scipy.sparse.linalg.factorized(A.to_scipy().tocsc())


@dataclass
class SpectrumResult:
    """Leading eigenpairs of ``B psi = nu L psi``.

    ``eigenvalues`` descend; ``eigenvectors`` (rows) are L-orthonormal;
    ``residuals`` hold ``|B psi - nu L psi| / |L psi|`` per pair.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # shape (k, n), row j pairs with eigenvalues[j]
    residuals: np.ndarray
    seed: int = DEFAULT_EIGEN_SEED
    sweeps: list = field(default_factory=list)


def top_generalized_eigenpairs(B, L, k, tol=1e-10, seed=DEFAULT_EIGEN_SEED,
                               max_sweeps=20000):
    """Largest-k eigenpairs of the pencil (B, L) by deflated power iteration.

    Power iteration runs on ``L^{-1} B`` with L-orthogonal deflation against
    the converged pairs; start vectors are drawn from a seeded xorshift64*
    stream (stream j for pair j), so results are deterministic and a run
    with smaller k reproduces the leading pairs of a larger run.
    """
    n = L.n
    if not 1 <= k <= n:
        raise ValueError(f"requested {k} eigenpairs from an order-{n} pencil")
    b_csr = B.to_scipy()
    l_csr = L.to_scipy()
    solve_l = factorized_spd(L)

    def l_inner(x, y):
        return float(x @ (l_csr @ y))

    vecs = np.zeros((k, n))
    vals = np.zeros(k)
    resids = np.zeros(k)
    sweeps_used = []

    def deflate(x, count):
        for _ in range(2):  # twice for orthogonality at roundoff level
            for i in range(count):
                x = x - l_inner(vecs[i], x) * vecs[i]
        return x

    # Converge each pair well below the requested tolerance: deflation
    # contaminates later pairs at the accuracy of the earlier vectors.
    pair_tol = max(tol * 1e-2, 1e-14)

    for j in range(k):
        rng = XorShift64Star(seed, stream=j)
        x = rng.uniform_vector(n, -1.0, 1.0)
        x = deflate(x, j)
        x /= np.sqrt(l_inner(x, x))
        nu = float(x @ (b_csr @ x))
        best = (math.inf, x, nu, 0)
        converged = False
        for sweep in range(1, max_sweeps + 1):
            bx = b_csr @ x
            y = deflate(solve_l(bx), j)
            ny = np.sqrt(max(l_inner(y, y), 0.0))
            if ny <= 1e-300:
                # B annihilates the deflated subspace: eigenvalue 0, any
                # L-normalized vector in the subspace is a valid pair.
                best = (0.0, x, 0.0, sweep)
                converged = True
                break
            x = y / ny
            bx = b_csr @ x
            nu = float(x @ bx)
            lx = l_csr @ x
            resid = np.linalg.norm(bx - nu * lx) / np.linalg.norm(lx)
            if resid < best[0]:
                best = (resid, x.copy(), nu, sweep)
            if resid <= pair_tol:
                converged = True
                break
            if sweep - best[3] > 500 and best[0] <= tol:
                # Progress has stalled (roundoff floor of the deflated
                # subspace) but the pair already meets the request.
                converged = True
                break
        if not converged and best[0] > tol:
            raise ConvergenceError(
                f"eigenpair {j} did not reach residual {tol:.1e} in "
                f"{max_sweeps} sweeps (achieved {best[0]:.3e})",
                iterations=max_sweeps,
                residual=best[0],
            )
        _, x, nu, sweep = best
        sweeps_used.append(sweep)
        vecs[j] = x
        vals[j] = nu
        resids[j] = np.linalg.norm(b_csr @ x - nu * (l_csr @ x)) / np.linalg.norm(
            l_csr @ x
        )

    order = np.argsort(-vals, kind="stable")
    return SpectrumResult(
        eigenvalues=vals[order],
        eigenvectors=vecs[order],
        residuals=resids[order],
        seed=seed,
        sweeps=[sweeps_used[i] for i in order],
    )
