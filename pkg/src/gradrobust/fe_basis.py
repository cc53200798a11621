"""Finite element spaces on structured rectangular meshes.

Supported kinds are continuous scalar and vector Q_k Lagrange elements,
discontinuous total-degree P_m elements (monomials centred at the cell
centroid, in physical coordinates) and the BDM_k space.  All cells of a
mesh are congruent, so reference tabulations are shared by every cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bdm
from .mesh import Mesh

VECTOR_Q = "vector_q"
SCALAR_Q = "q"
DISCONTINUOUS_P = "dgp"
BDM = "bdm"


@dataclass(frozen=True)
class SpaceKind:
    family: str
    degree: int

    def __str__(self):
        return {VECTOR_Q: "VectorLagrangeQ", SCALAR_Q: "ScalarLagrangeQ",
                DISCONTINUOUS_P: "DiscontinuousP", BDM: "BDM"}[self.family] + f"({self.degree})"


def vector_lagrange_q(k):
    return SpaceKind(VECTOR_Q, k)


def scalar_lagrange_q(k):
    return SpaceKind(SCALAR_Q, k)


def discontinuous_p(m):
    return SpaceKind(DISCONTINUOUS_P, m)


def bdm_space(k):
    return SpaceKind(BDM, k)


def lagrange_1d(k, x):
    """Equispaced Lagrange polynomials on [0, 1] and their derivatives, shape (nq, k+1)."""
    x = np.asarray(x, dtype=float)
    nodes = np.linspace(0.0, 1.0, k + 1)
    vals = np.ones((len(x), k + 1))
    ders = np.zeros((len(x), k + 1))
    for i in range(k + 1):
        others = [j for j in range(k + 1) if j != i]
        denom = np.prod([nodes[i] - nodes[j] for j in others])
        vals[:, i] = np.prod([x - nodes[j] for j in others], axis=0) / denom if others else 1.0
        for m in others:
            ders[:, i] += np.prod([x - nodes[j] for j in others if j != m], axis=0) / denom
    return vals, ders


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """A finite element space and its degree-of-freedom map.

    ``cell_dofs[c]`` holds the global indices of the local basis functions
    of cell ``c``; the global basis function restricted to ``c`` is
    ``cell_signs[c, i]`` times the local one.  ``nodes`` are the Lagrange
    node coordinates (None for the other kinds).
    """

    mesh: Mesh
    kind: SpaceKind
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    n_dofs: int
    boundary_dofs: np.ndarray
    nodes: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degree(self):
        return self.kind.degree

    @property
    def is_vector(self):
        return self.kind.family in (VECTOR_Q, BDM)

    @property
    def n_local(self):
        return self.cell_dofs.shape[1]

    def tabulate(self, ref_pts):
        """Local basis values and physical gradients at reference points.

        Scalar kinds give shapes (nq, n_local) and (nq, n_local, 2); vector
        kinds give (nq, n_local, 2) and (nq, n_local, 2, 2) with the
        component axis before the derivative axis.
        """
        ref_pts = np.atleast_2d(np.asarray(ref_pts, dtype=float))
        key = ref_pts.tobytes()
        if key not in self._cache:
            out = _TABULATORS[self.kind.family](self, ref_pts)
            for a in out:
                a.setflags(write=False)
            self._cache[key] = out
        return self._cache[key]


def _tab_scalar_q(space, pts):
    k = space.degree
    hx, hy = space.mesh.hx, space.mesh.hy
    vx, dx = lagrange_1d(k, pts[:, 0])
    vy, dy = lagrange_1d(k, pts[:, 1])
    # local node (a, b) -> a + b * (k + 1)
    vals = (vy[:, :, None] * vx[:, None, :]).reshape(len(pts), -1)
    gx = (vy[:, :, None] * dx[:, None, :]).reshape(len(pts), -1) / hx
    gy = (dy[:, :, None] * vx[:, None, :]).reshape(len(pts), -1) / hy
    return vals, np.stack([gx, gy], axis=-1)


def _tab_vector_q(space, pts):
    vals, grads = _tab_scalar_q(space, pts)
    nq, n = vals.shape
    v = np.zeros((nq, 2 * n, 2))
    g = np.zeros((nq, 2 * n, 2, 2))
    v[:, :n, 0] = vals
    v[:, n:, 1] = vals
    g[:, :n, 0, :] = grads
    g[:, n:, 1, :] = grads
    return v, g


def _tab_dgp(space, pts):
    hx, hy = space.mesh.hx, space.mesh.hy
    x = (pts[:, 0] - 0.5) * hx
    y = (pts[:, 1] - 0.5) * hy
    exps = bdm.total_degree_exponents(space.degree)
    vals = np.empty((len(pts), len(exps)))
    grads = np.zeros((len(pts), len(exps), 2))
    for i, (a, b) in enumerate(exps):
        vals[:, i] = x**a * y**b
        if a:
            grads[:, i, 0] = a * x ** (a - 1) * y**b
        if b:
            grads[:, i, 1] = b * x**a * y ** (b - 1)
    return vals, grads


def _tab_bdm(space, pts):
    return bdm.tabulate(space.degree, space.mesh.hx, space.mesh.hy, pts)


_TABULATORS = {SCALAR_Q: _tab_scalar_q, VECTOR_Q: _tab_vector_q,
               DISCONTINUOUS_P: _tab_dgp, BDM: _tab_bdm}


def _lagrange_layout(mesh, k):
    """Global node coordinates and per-cell node indices of continuous Q_k."""
    gx = k * mesh.nx + 1
    gy = k * mesh.ny + 1
    ii, jj = np.meshgrid(np.arange(gx), np.arange(gy))
    nodes = np.column_stack([ii.ravel() * (mesh.hx / k), jj.ravel() * (mesh.hy / k)])
    ci = np.arange(mesh.n_cells) % mesh.nx
    cj = np.arange(mesh.n_cells) // mesh.nx
    a, b = np.meshgrid(np.arange(k + 1), np.arange(k + 1))
    a, b = a.ravel(), b.ravel()
    cell_nodes = (k * ci[:, None] + a[None, :]) + (k * cj[:, None] + b[None, :]) * gx
    tol = 1e-12 * mesh.h
    on_bd = ((nodes[:, 0] < tol) | (nodes[:, 0] > mesh.Lx - tol)
             | (nodes[:, 1] < tol) | (nodes[:, 1] > mesh.Ly - tol))
    return nodes, cell_nodes, np.flatnonzero(on_bd)


def build_space(mesh: Mesh, kind: SpaceKind) -> FunctionSpace:
    """Build the global space of ``kind`` over ``mesh``."""
    fam, k = kind.family, kind.degree
    if fam == VECTOR_Q:
        if k < 2:
            raise ValueError(f"vector Lagrange spaces need k >= 2, got {k}")
        nodes, cn, bd = _lagrange_layout(mesh, k)
        nn = len(nodes)
        dofs = np.hstack([cn, cn + nn])
        return FunctionSpace(mesh, kind, dofs, np.ones(dofs.shape), 2 * nn,
                             np.concatenate([bd, bd + nn]), nodes)
    if fam == SCALAR_Q:
        if k < 1:
            raise ValueError(f"scalar Lagrange spaces need k >= 1, got {k}")
        nodes, cn, bd = _lagrange_layout(mesh, k)
        return FunctionSpace(mesh, kind, cn, np.ones(cn.shape), len(nodes), bd, nodes)
    if fam == DISCONTINUOUS_P:
        if k < 0:
            raise ValueError(f"discontinuous spaces need degree >= 0, got {k}")
        n = (k + 1) * (k + 2) // 2
        dofs = np.arange(mesh.n_cells * n).reshape(mesh.n_cells, n)
        return FunctionSpace(mesh, kind, dofs, np.ones(dofs.shape), dofs.size,
                             np.empty(0, dtype=int))
    if fam == BDM:
        if k < 1:
            raise ValueError(f"BDM spaces need k >= 1, got {k}")
        ne = k + 1
        n_int = 2 * len(bdm.total_degree_exponents(k - 2))
        edge_dofs = (mesh.cell_edges[:, :, None] * ne + np.arange(ne)).reshape(mesh.n_cells, -1)
        edge_signs = np.repeat(mesh.cell_edge_signs, ne, axis=1)
        offset = mesh.n_edges * ne
        int_dofs = offset + np.arange(mesh.n_cells * n_int).reshape(mesh.n_cells, n_int)
        dofs = np.hstack([edge_dofs, int_dofs])
        signs = np.hstack([edge_signs, np.ones(int_dofs.shape)])
        bd = (mesh.boundary_edges[:, None] * ne + np.arange(ne)).ravel()
        return FunctionSpace(mesh, kind, dofs, signs, offset + int_dofs.size, np.sort(bd))
    raise ValueError(f"unsupported space kind {kind}")


def eval_basis(space: FunctionSpace, cell: int, ref_pt):
    """Local basis values and physical gradients of ``cell`` at one reference point."""
    if not 0 <= cell < space.mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    vals, grads = space.tabulate(np.asarray(ref_pt, dtype=float).reshape(1, 2))
    s = space.cell_signs[cell]
    if space.is_vector:
        return vals[0] * s[:, None], grads[0] * s[:, None, None]
    return vals[0] * s, grads[0] * s[:, None]


@dataclass
class DiscreteField:
    space: FunctionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs,):
            raise ValueError(f"expected {self.space.n_dofs} coefficients, got {self.coeffs.shape}")

    def local_coeffs(self):
        """Signed local coefficients, shape (n_cells, n_local)."""
        return self.coeffs[self.space.cell_dofs] * self.space.cell_signs

    def at_ref(self, ref_pts):
        """Values and gradients at the same reference points in every cell.

        Returns arrays of shape (n_cells, nq[, 2]) and (n_cells, nq[, 2], 2).
        """
        vals, grads = self.space.tabulate(ref_pts)
        lc = self.local_coeffs()
        if self.space.is_vector:
            return (np.einsum("ci,qik->cqk", lc, vals),
                    np.einsum("ci,qikd->cqkd", lc, grads))
        return np.einsum("ci,qi->cq", lc, vals), np.einsum("ci,qid->cqd", lc, grads)

    def evaluate(self, pts, gradient=False):
        """Evaluate at physical points of shape (..., 2)."""
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        cells, ref = self.space.mesh.locate(flat)
        vals, grads = self.space.tabulate(ref)
        lc = self.local_coeffs()[cells]
        if self.space.is_vector:
            v = np.einsum("pi,pik->pk", lc, vals).reshape(shape + (2,))
            g = np.einsum("pi,pikd->pkd", lc, grads).reshape(shape + (2, 2))
        else:
            v = np.einsum("pi,pi->p", lc, vals).reshape(shape)
            g = np.einsum("pi,pid->pd", lc, grads).reshape(shape + (2,))
        return (v, g) if gradient else v

    def __call__(self, pts):
        return self.evaluate(pts)

    def grad(self, pts):
        return self.evaluate(pts, gradient=True)[1]


def eval_field(field: DiscreteField, phys_pt):
    """Value and gradient of ``field`` at physical point(s)."""
    return field.evaluate(phys_pt, gradient=True)


def interpolate(space: FunctionSpace, g) -> DiscreteField:
    """Nodal interpolant of ``g`` (callable on (..., 2) arrays) in a Lagrange space."""
    if space.nodes is None:
        raise ValueError(f"nodal interpolation needs a Lagrange space, got {space.kind}")
    vals = np.asarray(g(space.nodes), dtype=float)
    if space.is_vector:
        coeffs = np.concatenate([vals[:, 0], vals[:, 1]])
    else:
        coeffs = np.broadcast_to(vals, (len(space.nodes),)).copy()
    return DiscreteField(space, coeffs)


def zero_field(space: FunctionSpace) -> DiscreteField:
    return DiscreteField(space, np.zeros(space.n_dofs))
