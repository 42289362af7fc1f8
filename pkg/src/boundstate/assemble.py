"""P1 finite element assembly for the operator I - Laplacian, mass and
nodally-weighted mass matrices, load vectors, and the norms used by the
solver diagnostics.

Conventions
-----------
* All operators act on interior DOFs only; Dirichlet values are identically
  zero and eliminated.
* Radial meshes use the r-weighted weak form ``int (u' v' + u v) r dr``;
  the measure weight realizes the 1/r first-order term and makes the origin
  condition natural, with no special treatment of r = 0.
* The nonlinear term is the nodal interpolant of ``|u|^(p-1) u``, so load
  vectors are a mass matrix applied to the nodal power of the coefficients.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import RADIAL, TRIANGULATION

# 3-point Gauss-Legendre on [0,1]: exact through degree 5, enough for the
# r-weighted cubic integrands of the 1D weighted mass.
_G3_X, _G3_W = np.polynomial.legendre.leggauss(3)
_G3_X = 0.5 * (_G3_X + 1.0)
_G3_W = 0.5 * _G3_W

# 5-point Gauss-Legendre on [0,1] for L^q norms (exact through degree 9).
_G5_X, _G5_W = np.polynomial.legendre.leggauss(5)
_G5_X = 0.5 * (_G5_X + 1.0)
_G5_W = 0.5 * _G5_W

# 7-point degree-5 rule on the reference triangle, in barycentric form.
_TA = 0.47014206410511505
_TB = 0.10128650732345633
_TRI_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_TA, _TA, 1 - 2 * _TA],
        [_TA, 1 - 2 * _TA, _TA],
        [1 - 2 * _TA, _TA, _TA],
        [_TB, _TB, 1 - 2 * _TB],
        [_TB, 1 - 2 * _TB, _TB],
        [1 - 2 * _TB, _TB, _TB],
    ]
)
_TRI_W = np.array(
    [0.225]
    + [0.13239415278850618] * 3
    + [0.12593918054482717] * 3
)


@dataclass(frozen=True)
class SparseOperator:
    """Symmetric sparse matrix over interior DOFs in CSR storage."""

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @classmethod
    def from_scipy(cls, mat):
        csr = sp.csr_matrix(mat)
        csr.sum_duplicates()
        return cls(csr.shape[0], csr.indptr, csr.indices, csr.data)

    def to_scipy(self):
        return sp.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n)
        )

    def matvec(self, x):
        return self.to_scipy() @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def diagonal(self):
        return self.to_scipy().diagonal()

    def symmetry_defect(self):
        """max |A - A^T| relative to max |A| (0 for exactly symmetric storage)."""
        a = self.to_scipy()
        d = abs(a - a.T).max()
        scale = abs(a).max()
        return float(d / scale) if scale > 0 else 0.0


class Field:
    """Nodal coefficient vector over the interior DOFs of a mesh.

    Boundary values are implicitly zero.  Entries must be finite.
    """

    __slots__ = ("mesh", "values")

    def __init__(self, mesh, values):
        values = np.ascontiguousarray(values, dtype=float)
        if values.shape != (mesh.n_interior,):
            raise ValueError(
                f"field length {values.shape} does not match "
                f"{mesh.n_interior} interior DOFs"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        self.mesh = mesh
        self.values = values

    def _require_same_mesh(self, other):
        if self.mesh is not other.mesh:
            raise ValueError("fields live on different meshes")

    def __add__(self, other):
        self._require_same_mesh(other)
        return Field(self.mesh, self.values + other.values)

    def __sub__(self, other):
        self._require_same_mesh(other)
        return Field(self.mesh, self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.mesh, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.mesh, -self.values)

    def copy(self):
        return Field(self.mesh, self.values.copy())


def zeros_field(mesh):
    return Field(mesh, np.zeros(mesh.n_interior))


def interpolate(mesh, fn):
    """Field of interior nodal values of ``fn`` (vectorized over coordinates)."""
    nodes = mesh.nodes[mesh.interior_nodes]
    if mesh.kind == TRIANGULATION:
        return Field(mesh, np.asarray(fn(nodes[:, 0], nodes[:, 1]), dtype=float))
    return Field(mesh, np.asarray(fn(nodes), dtype=float))


def nodal_values(u):
    """Per-node values including zeros on Dirichlet nodes."""
    full = np.zeros(u.mesh.n_nodes)
    full[u.mesh.interior_nodes] = u.values
    return full


def _restrict(mat_full, mesh):
    """Slice a full nodal matrix down to interior DOFs, in interior order."""
    keep = mesh.interior_nodes
    return SparseOperator.from_scipy(sp.csr_matrix(mat_full)[keep][:, keep])


def _assemble_1d(mesh, include_stiffness, weight_values=None):
    """Element-loop assembly of stiffness+mass (or mass only) on a 1D mesh.

    ``weight_values`` multiplies the mass integrand by the P1 interpolant of
    the given per-node weights.  Radial meshes additionally weight every
    integrand by r.  Quadrature is 3-point Gauss, exact for all integrands
    that occur here.
    """
    x = mesh.nodes
    left = mesh.elements[:, 0]
    right = mesh.elements[:, 1]
    h = x[right] - x[left]  # (m,)
    xg = x[left][:, None] + np.outer(h, _G3_X)  # (m, 3)
    omega = xg if mesh.kind == RADIAL else np.ones_like(xg)
    if weight_values is not None:
        wl = weight_values[left][:, None]
        wr = weight_values[right][:, None]
        omega = omega * (wl + (wr - wl) * _G3_X[None, :])
    phi_l = 1.0 - _G3_X
    phi_r = _G3_X
    qw = h[:, None] * _G3_W[None, :] * omega  # per-point weights (m, 3)

    m_ll = (qw * phi_l * phi_l).sum(axis=1)
    m_lr = (qw * phi_l * phi_r).sum(axis=1)
    m_rr = (qw * phi_r * phi_r).sum(axis=1)
    blocks = np.stack([m_ll, m_lr, m_lr, m_rr], axis=1)
    if include_stiffness:
        w0 = qw.sum(axis=1)
        k = w0 / h**2
        blocks = blocks + np.stack([k, -k, -k, k], axis=1)

    rows = np.stack([left, left, right, right], axis=1).ravel()
    cols = np.stack([left, right, left, right], axis=1).ravel()
    full = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    )
    return _restrict(full, mesh)


def _triangle_geometry(mesh):
    """Edge-difference vectors b, c (2 * signed area times the P1 gradients)
    and unsigned areas, per triangle."""
    p = mesh.nodes[mesh.elements]  # (m, 3, 2)
    b = np.stack(
        [p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]],
        axis=1,
    )
    c = np.stack(
        [p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]],
        axis=1,
    )
    area = np.abs(
        0.5
        * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )
    )
    return p, b, c, area


def _assemble_2d(mesh, include_stiffness, weight_values=None):
    _, b, c, area = _triangle_geometry(mesh)
    m = mesh.n_elements
    if weight_values is None:
        base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        blocks = area[:, None, None] * base[None, :, :]
    else:
        # int_T phi_i phi_j phi_k = area * (1/10 if i=j=k, 1/30 if two equal,
        # 1/60 otherwise); exact for the P1-interpolated weight.
        t = np.full((3, 3, 3), 1.0 / 60.0)
        for i in range(3):
            t[i, i, :] = 1.0 / 30.0
            t[i, :, i] = 1.0 / 30.0
            t[:, i, i] = 1.0 / 30.0
            t[i, i, i] = 1.0 / 10.0
        wk = weight_values[mesh.elements]  # (m, 3)
        blocks = area[:, None, None] * np.einsum("ijk,mk->mij", t, wk)
    if include_stiffness:
        grad = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
            4.0 * area[:, None, None]
        )
        blocks = blocks + grad
    rows = np.repeat(mesh.elements, 3, axis=1).reshape(m, 3, 3)
    cols = np.tile(mesh.elements, 3).reshape(m, 3, 3)
    full = sp.coo_matrix(
        (blocks.ravel(), (rows.ravel(), cols.ravel())),
        shape=(mesh.n_nodes, mesh.n_nodes),
    )
    return _restrict(full, mesh)


def assemble_L(mesh):
    """Discrete ``I - Laplacian`` (stiffness + mass) over interior DOFs.

    Symmetric positive definite for every valid mesh; radial meshes get the
    r-weighted form with a natural condition at the origin.
    """
    if mesh.kind == TRIANGULATION:
        return _assemble_2d(mesh, include_stiffness=True)
    return _assemble_1d(mesh, include_stiffness=True)


def assemble_mass(mesh, lumped=False):
    """Mass matrix (r-weighted on radial meshes); ``lumped`` row-sums it."""
    if mesh.kind == TRIANGULATION:
        mass = _assemble_2d(mesh, include_stiffness=False)
    else:
        mass = _assemble_1d(mesh, include_stiffness=False)
    if lumped:
        diag = np.asarray(mass.to_scipy().sum(axis=1)).ravel()
        return SparseOperator.from_scipy(sp.diags(diag, format="csr"))
    return mass


def assemble_weighted_mass(mesh, w):
    """Mass matrix weighted by the P1 interpolant of nonnegative nodal weights.

    ``w`` is a Field on the same mesh (implicitly zero on the boundary).
    The result is symmetric positive semidefinite.
    """
    if w.mesh is not mesh:
        raise ValueError("weight field lives on a different mesh")
    if w.values.size and w.values.min() < 0.0:
        raise ValueError("weighted mass requires nonnegative nodal weights")
    w_full = nodal_values(w)
    if mesh.kind == TRIANGULATION:
        return _assemble_2d(mesh, include_stiffness=False, weight_values=w_full)
    return _assemble_1d(mesh, include_stiffness=False, weight_values=w_full)


def nonlinear_load(u, p, mass=None, lumped=False):
    """Load vector of the interpolated nonlinearity: ``Mass @ (|u|^(p-1) u)``.

    Exactly homogeneous of degree p in the field.  Pass a preassembled mass
    matrix to avoid reassembly in inner loops.
    """
    if p <= 1:
        raise ValueError("nonlinearity exponent must satisfy p > 1")
    if mass is None:
        mass = assemble_mass(u.mesh, lumped=lumped)
    g = np.abs(u.values) ** (p - 1.0) * u.values
    return Field(u.mesh, mass @ g)


def h1_inner(u, v, L):
    """H1 inner product ``u . (L v)`` of two fields over the same DOF set."""
    if not (len(u.values) == len(v.values) == L.n):
        raise ValueError(
            f"dimension mismatch: fields {len(u.values)}/{len(v.values)}, "
            f"operator {L.n}"
        )
    return float(u.values @ (L @ v.values))


def h1_norm(u, L):
    return float(np.sqrt(max(h1_inner(u, u, L), 0.0)))


def lp_norm(u, q):
    """``(int |u_h|^q)^(1/q)`` of the P1 interpolant, by per-element Gauss
    quadrature (5-point in 1D, degree-5 rule on triangles, r-weighted on
    radial meshes)."""
    if q < 1:
        raise ValueError("Lebesgue exponent must satisfy q >= 1")
    mesh = u.mesh
    full = nodal_values(u)
    if mesh.kind == TRIANGULATION:
        _, _, _, area = _triangle_geometry(mesh)
        vals = full[mesh.elements]  # (m, 3)
        ug = vals @ _TRI_BARY.T  # (m, 7)
        total = float((area[:, None] * _TRI_W[None, :] * np.abs(ug) ** q).sum())
    else:
        x = mesh.nodes
        left = mesh.elements[:, 0]
        right = mesh.elements[:, 1]
        h = x[right] - x[left]
        ug = full[left][:, None] + np.outer(full[right] - full[left], _G5_X)
        weight = h[:, None] * _G5_W[None, :]
        if mesh.kind == RADIAL:
            weight = weight * (x[left][:, None] + np.outer(h, _G5_X))
        total = float((weight * np.abs(ug) ** q).sum())
    return total ** (1.0 / q)
