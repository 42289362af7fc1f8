"""Domain discretizations: uniform 1D intervals, radial 1D meshes, and
2D triangulations read from Triangle-format text.

All meshes carry an explicit Dirichlet mask per node and a compact
numbering of the unconstrained (interior) degrees of freedom.  Meshes are
immutable after construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshFormatError

INTERVAL = "Interval"
RADIAL = "Radial"
TRIANGULATION = "Triangulation"


@dataclass(frozen=True)
class Mesh:
    """Geometric mesh with Dirichlet boundary flags.

    Attributes
    ----------
    kind : str
        One of ``Interval``, ``Radial``, ``Triangulation``.
    nodes : ndarray
        Shape (n,) of coordinates for 1D kinds, (n, 2) for triangulations.
    elements : ndarray of int
        Shape (m, 2) segment connectivity or (m, 3) triangle connectivity.
    boundary_mask : ndarray of bool
        True where the node is Dirichlet-constrained (value pinned to 0).
    interior_index : ndarray of int
        Per-node index into the interior-DOF numbering, -1 for masked nodes.
    """

    kind: str
    nodes: np.ndarray
    elements: np.ndarray
    boundary_mask: np.ndarray
    interior_index: np.ndarray = field(default=None)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        elements = np.asarray(self.elements, dtype=np.int64)
        mask = np.asarray(self.boundary_mask, dtype=bool)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "boundary_mask", mask)
        if self.interior_index is None:
            idx = np.full(self.n_nodes, -1, dtype=np.int64)
            idx[~mask] = np.arange((~mask).sum())
            object.__setattr__(self, "interior_index", idx)
        else:
            object.__setattr__(
                self, "interior_index", np.asarray(self.interior_index, dtype=np.int64)
            )
        for arr in (self.nodes, self.elements, self.boundary_mask, self.interior_index):
            arr.setflags(write=False)
        self._check()

    def _check(self):
        n = self.n_nodes
        if self.elements.size and (self.elements.min() < 0 or self.elements.max() >= n):
            raise MeshFormatError("element references a node id outside 0..n-1")
        if np.any(element_measures(self) <= 0.0):
            raise MeshFormatError("degenerate element (zero length or area)")
        if self.kind in (INTERVAL, RADIAL):
            if np.any(np.diff(self.nodes) <= 0):
                raise ValueError("1D mesh nodes must be strictly increasing")
        interior = self.interior_index[~self.boundary_mask]
        if sorted(interior) != list(range(self.n_interior)):
            raise ValueError("interior_index is not a bijection onto 0..n_interior-1")
        if np.any(self.interior_index[self.boundary_mask] != -1):
            raise ValueError("masked nodes must carry interior index -1")

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def n_interior(self):
        return int((~self.boundary_mask).sum())

    @property
    def interior_nodes(self):
        """Node ids of the unconstrained DOFs, in interior-DOF order."""
        order = np.argsort(self.interior_index[~self.boundary_mask])
        return np.flatnonzero(~self.boundary_mask)[order]

    @property
    def dimension(self):
        """Spatial dimension of the underlying problem (radial counts as 2)."""
        return 1 if self.kind == INTERVAL else 2


def element_measures(mesh):
    """Length of each segment / area of each triangle."""
    if mesh.kind == TRIANGULATION:
        p = mesh.nodes[mesh.elements]  # (m, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    x = mesh.nodes[mesh.elements]  # (m, 2)
    return np.abs(x[:, 1] - x[:, 0])


def domain_measure(mesh):
    return float(element_measures(mesh).sum())


def build_interval_mesh(xmin, xmax, n_cells):
    """Uniform 1D mesh on (xmin, xmax) with both endpoints Dirichlet-masked."""
    if not xmin < xmax:
        raise ValueError(f"invalid bounds: need xmin < xmax, got [{xmin}, {xmax}]")
    if n_cells < 2:
        raise ValueError("mesh too coarse: need n_cells >= 2 for an interior node")
    nodes = np.linspace(xmin, xmax, n_cells + 1)
    elements = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    mask = np.zeros(n_cells + 1, dtype=bool)
    mask[0] = mask[-1] = True
    return Mesh(INTERVAL, nodes, elements, mask)


def build_radial_mesh(rmax, n_cells, rmin=0.0, neumann_at_left=None):
    """Uniform radial mesh on (rmin, rmax).

    With the default ``rmin = 0`` the origin carries a natural (Neumann)
    condition and stays an unknown; the outer end is always Dirichlet-masked.
    ``rmin > 0`` builds an annular submesh with Dirichlet ends, used by the
    two-sided excited-state construction.
    """
    if rmax <= rmin:
        raise ValueError(f"invalid bounds: need rmax > rmin, got ({rmin}, {rmax})")
    if rmin < 0:
        raise ValueError("invalid bounds: rmin must be >= 0")
    if n_cells < 2:
        raise ValueError("mesh too coarse: need n_cells >= 2")
    if neumann_at_left is None:
        neumann_at_left = rmin == 0.0
    if neumann_at_left and rmin != 0.0:
        raise ValueError("a natural left boundary is only meaningful at r = 0")
    nodes = np.linspace(rmin, rmax, n_cells + 1)
    elements = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    mask = np.zeros(n_cells + 1, dtype=bool)
    mask[0] = not neumann_at_left
    mask[-1] = True
    return Mesh(RADIAL, nodes, elements, mask)


def _tokenized_lines(text):
    """Yield (line_number, tokens) skipping blanks and '#' comments."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield lineno, body.split()


def _take_header(lines, what, n_fields):
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise MeshFormatError(f"empty {what} text") from None
    if len(tok) < n_fields:
        raise MeshFormatError(f"{what} header needs {n_fields} fields", line=lineno)
    try:
        return lineno, [int(t) for t in tok[:n_fields]]
    except ValueError:
        raise MeshFormatError(f"non-integer {what} header", line=lineno) from None


def load_triangulation(node_text, ele_text):
    """Parse Triangle ``.node`` / ``.ele`` text into a Mesh.

    Boundary flags come from the node file's marker column (nonzero marker
    means Dirichlet).  Node ids may be 0- or 1-based; the base is detected
    from the first node record and all indices are normalized to 0-based.
    """
    lines = _tokenized_lines(node_text)
    _, (n_nodes, dim, n_attrs, n_markers) = _take_header(lines, ".node", 4)
    if dim != 2:
        raise MeshFormatError(f".node dimension must be 2, got {dim}")
    if n_markers not in (0, 1):
        raise MeshFormatError(f".node boundary-marker count must be 0 or 1, got {n_markers}")
    want = 3 + n_attrs + n_markers
    coords = np.zeros((n_nodes, 2))
    markers = np.zeros(n_nodes, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=bool)
    base = None
    count = 0
    for lineno, tok in lines:
        if count == n_nodes:
            raise MeshFormatError(
                f".node header declares {n_nodes} nodes but more follow", line=lineno
            )
        if len(tok) != want:
            raise MeshFormatError(f"expected {want} fields on node line", line=lineno)
        try:
            nid = int(tok[0])
            x, y = float(tok[1]), float(tok[2])
            marker = int(tok[3 + n_attrs]) if n_markers else 0
        except ValueError:
            raise MeshFormatError("malformed node record", line=lineno) from None
        if base is None:
            base = nid
            if base not in (0, 1):
                raise MeshFormatError(f"first node id must be 0 or 1, got {nid}", line=lineno)
        idx = nid - base
        if not 0 <= idx < n_nodes:
            raise MeshFormatError(f"node id {nid} out of range", line=lineno)
        if seen[idx]:
            raise MeshFormatError(f"duplicate node id {nid}", line=lineno)
        seen[idx] = True
        coords[idx] = (x, y)
        markers[idx] = marker
        count += 1
    if count != n_nodes:
        raise MeshFormatError(f".node header declares {n_nodes} nodes, found {count}")

    lines = _tokenized_lines(ele_text)
    _, (n_tri, per_tri, _tri_attrs) = _take_header(lines, ".ele", 3)
    if per_tri != 3:
        raise MeshFormatError(f"only 3-node triangles supported, got {per_tri}")
    tris = np.zeros((n_tri, 3), dtype=np.int64)
    count = 0
    for lineno, tok in lines:
        if count == n_tri:
            raise MeshFormatError(
                f".ele header declares {n_tri} triangles but more follow", line=lineno
            )
        if len(tok) < 4:
            raise MeshFormatError("expected at least 4 fields on element line", line=lineno)
        try:
            refs = [int(t) for t in tok[1:4]]
        except ValueError:
            raise MeshFormatError("malformed element record", line=lineno) from None
        for r in refs:
            if not 0 <= r - base < n_nodes:
                raise MeshFormatError(f"element references missing node {r}", line=lineno)
        tris[count] = [r - base for r in refs]
        count += 1
    if count != n_tri:
        raise MeshFormatError(f".ele header declares {n_tri} triangles, found {count}")

    return Mesh(TRIANGULATION, coords, tris, markers != 0)


def save_triangulation(mesh):
    """Serialize a triangulation back to (.node text, .ele text), 0-based."""
    if mesh.kind != TRIANGULATION:
        raise ValueError("save_triangulation requires a Triangulation mesh")
    node_lines = [f"{mesh.n_nodes} 2 0 1"]
    for i, (x, y) in enumerate(mesh.nodes):
        node_lines.append(
            f"{i} {float(x)!r} {float(y)!r} {int(mesh.boundary_mask[i])}"
        )
    ele_lines = [f"{mesh.n_elements} 3 0"]
    for i, (a, b, c) in enumerate(mesh.elements):
        ele_lines.append(f"{i} {a} {b} {c}")
    return "\n".join(node_lines) + "\n", "\n".join(ele_lines) + "\n"


def boundary_nodes_from_edges(mesh):
    """Node set on the geometric boundary: nodes of edges owned by one triangle."""
    if mesh.kind != TRIANGULATION:
        raise ValueError("edge-based boundary detection requires a triangulation")
    counts = {}
    for a, b, c in mesh.elements:
        for e in ((a, b), (b, c), (c, a)):
            key = (min(e), max(e))
            counts[key] = counts.get(key, 0) + 1
    on_boundary = np.zeros(mesh.n_nodes, dtype=bool)
    for (a, b), cnt in counts.items():
        if cnt == 1:
            on_boundary[a] = on_boundary[b] = True
    return on_boundary


def validate_boundary_markers(mesh):
    """Cross-check file markers against the triangulation's actual boundary.

    Returns a list of human-readable warnings; empty when markers and the
    edge-derived boundary agree.  Markers are trusted either way.
    """
    computed = boundary_nodes_from_edges(mesh)
    warnings = []
    marked_not_boundary = np.flatnonzero(mesh.boundary_mask & ~computed)
    boundary_not_marked = np.flatnonzero(~mesh.boundary_mask & computed)
    if marked_not_boundary.size:
        warnings.append(
            f"{marked_not_boundary.size} node(s) marked Dirichlet but not on the "
            f"mesh boundary: {marked_not_boundary[:8].tolist()}"
        )
    if boundary_not_marked.size:
        warnings.append(
            f"{boundary_not_marked.size} boundary node(s) carry no Dirichlet marker: "
            f"{boundary_not_marked[:8].tolist()}"
        )
    return warnings
