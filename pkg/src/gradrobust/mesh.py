"""Structured rectangular meshes of [0, Lx] x [0, Ly]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# local edge order inside a cell
BOTTOM, RIGHT, TOP, LEFT = range(4)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform axis-aligned rectangular mesh.

    Vertices, cells and edges are numbered lexicographically with x
    running fastest.  Horizontal edges come first (global normal +y),
    followed by vertical edges (global normal +x).  ``cell_edges[c]``
    lists the bottom, right, top and left edge of cell ``c`` and
    ``cell_edge_signs[c]`` is +1 where the global edge normal is the
    outward normal of that cell.
    """

    nx: int
    ny: int
    Lx: float
    Ly: float
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    edge_normals: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    boundary_edges: np.ndarray

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def h(self) -> float:
        """Cell diameter (all cells are congruent)."""
        return float(np.hypot(self.hx, self.hy))

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def cell_origins(self) -> np.ndarray:
        """Lower-left corner of every cell, shape (n_cells, 2)."""
        return self.vertices[self.cells[:, 0]]

    @property
    def centroids(self) -> np.ndarray:
        return self.cell_origins + 0.5 * np.array([self.hx, self.hy])

    def cell_index(self, i, j):
        return i + j * self.nx

    def ref_to_phys(self, cell, ref_pts):
        ref_pts = np.asarray(ref_pts, dtype=float)
        cell = np.asarray(cell)
        if np.any((cell < 0) | (cell >= self.n_cells)):
            raise IndexError(f"cell index out of range [0, {self.n_cells})")
        scale = np.array([self.hx, self.hy])
        return self.vertices[self.cells[cell, 0]] + ref_pts * scale

    def phys_to_ref(self, cell, pts):
        pts = np.asarray(pts, dtype=float)
        scale = np.array([self.hx, self.hy])
        return (pts - self.vertices[self.cells[np.asarray(cell), 0]]) / scale

    def locate(self, pts, tol=1e-12):
        """Return (cells, ref_pts) for physical points of shape (..., 2).

        Points on an interior cell boundary are assigned to the cell with
        the larger index along each axis, except on the top/right domain
        boundary.
        """
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        outside = ((x < -tol * self.Lx) | (x > self.Lx * (1 + tol))
                   | (y < -tol * self.Ly) | (y > self.Ly * (1 + tol)))
        if np.any(outside):
            raise ValueError("point outside the mesh domain")
        i = np.clip(np.floor(x / self.hx).astype(int), 0, self.nx - 1)
        j = np.clip(np.floor(y / self.hy).astype(int), 0, self.ny - 1)
        cells = i + j * self.nx
        return cells, self.phys_to_ref(cells, pts)


def build_rect_mesh(nx: int, ny: int, Lx: float = 1.0, Ly: float = 1.0) -> Mesh:
    """Build the nx-by-ny mesh of the rectangle [0, Lx] x [0, Ly]."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got {nx}, {ny}")
    if not (Lx > 0 and Ly > 0):
        raise ValueError(f"side lengths must be positive, got {Lx}, {Ly}")
    nx, ny = int(nx), int(ny)
    Lx, Ly = float(Lx), float(Ly)

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    vertices = np.column_stack([ii.ravel() * (Lx / nx), jj.ravel() * (Ly / ny)])

    def vid(i, j):
        return i + j * (nx + 1)

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    cells = np.column_stack([vid(ci, cj), vid(ci + 1, cj),
                             vid(ci + 1, cj + 1), vid(ci, cj + 1)])

    # horizontal edges (i, j): i < nx, j <= ny
    hi, hj = np.meshgrid(np.arange(nx), np.arange(ny + 1))
    hi, hj = hi.ravel(), hj.ravel()
    h_edges = np.column_stack([vid(hi, hj), vid(hi + 1, hj)])
    n_h = len(h_edges)
    # vertical edges (i, j): i <= nx, j < ny
    vi, vj = np.meshgrid(np.arange(nx + 1), np.arange(ny))
    vi, vj = vi.ravel(), vj.ravel()
    v_edges = np.column_stack([vid(vi, vj), vid(vi, vj + 1)])
    edges = np.vstack([h_edges, v_edges])
    normals = np.vstack([np.tile([0.0, 1.0], (n_h, 1)),
                         np.tile([1.0, 0.0], (len(v_edges), 1))])

    def hedge(i, j):
        return i + j * nx

    def vedge(i, j):
        return n_h + i + j * (nx + 1)

    cell_edges = np.column_stack([hedge(ci, cj), vedge(ci + 1, cj),
                                  hedge(ci, cj + 1), vedge(ci, cj)])
    cell_edge_signs = np.tile([-1.0, 1.0, 1.0, -1.0], (nx * ny, 1))

    on_boundary = np.concatenate([(hj == 0) | (hj == ny), (vi == 0) | (vi == nx)])
    return Mesh(nx=nx, ny=ny, Lx=Lx, Ly=Ly, vertices=vertices, cells=cells,
                edges=edges, edge_normals=normals, cell_edges=cell_edges,
                cell_edge_signs=cell_edge_signs,
                boundary_edges=np.flatnonzero(on_boundary))


def ref_to_phys(mesh: Mesh, cell: int, ref_pt) -> np.ndarray:
    """Map a point of the reference square [0, 1]^2 into ``cell``."""
    return mesh.ref_to_phys(cell, ref_pt)
