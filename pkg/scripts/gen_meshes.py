#!/usr/bin/env python3
"""Generate the sample Triangle-format meshes shipped under meshes/.

The solver consumes meshes, it never generates them; this helper exists so
the repository's sample files are reproducible.  It writes structured
triangulations of the isosceles right triangle with vertices (0,0), (1,0),
(0,1), plus a 2-triangle unit square used by parser tests.

Usage: python scripts/gen_meshes.py [outdir]
"""

import os
import sys


def right_triangle_mesh(k):
    """Uniform triangulation with k subdivisions per leg (k^2 triangles)."""
    index = {}
    nodes = []
    for j in range(k + 1):
        for i in range(k + 1 - j):
            index[(i, j)] = len(nodes)
            nodes.append((i / k, j / k))
    tris = []
    for j in range(k):
        for i in range(k - j):
            a, b, c = index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]
            tris.append((a, b, c))
            if i + j < k - 1:
                d = index[(i + 1, j + 1)]
                tris.append((b, d, c))
    markers = []
    for j in range(k + 1):
        for i in range(k + 1 - j):
            markers.append(1 if (i == 0 or j == 0 or i + j == k) else 0)
    return nodes, tris, markers


def unit_square_mesh():
    nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    tris = [(0, 1, 2), (0, 2, 3)]
    markers = [1, 1, 1, 1]
    return nodes, tris, markers


def write_mesh(basename, nodes, tris, markers):
    with open(basename + ".node", "w", encoding="utf-8") as fh:
        fh.write(f"{len(nodes)} 2 0 1\n")
        for i, ((x, y), m) in enumerate(zip(nodes, markers), start=1):
            fh.write(f"{i} {x!r} {y!r} {m}\n")
    with open(basename + ".ele", "w", encoding="utf-8") as fh:
        fh.write(f"{len(tris)} 3 0\n")
        for i, (a, b, c) in enumerate(tris, start=1):
            fh.write(f"{i} {a + 1} {b + 1} {c + 1}\n")
    print(f"wrote {basename}.node / .ele "
          f"({len(nodes)} nodes, {len(tris)} triangles)")


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "meshes"
    os.makedirs(outdir, exist_ok=True)
    for k in (12, 48, 96):
        nodes, tris, markers = right_triangle_mesh(k)
        write_mesh(os.path.join(outdir, f"right_triangle_k{k}"), nodes, tris, markers)
    nodes, tris, markers = unit_square_mesh()
    write_mesh(os.path.join(outdir, "unit_square"), nodes, tris, markers)


if __name__ == "__main__":
    main()
