"""Assembly of the elasticity saddle-point system and the heat problem.

Sign convention follows the weak form

    a(u, v) + b(p, v) = load(v),    b(q, u) - (p, q) / lam = 0,

with a(u, v) = 2 mu (eps(u), eps(v)) and b(q, v) = (q, div v).  The load
is either the plain L2 pairing (f, v) or the reconstructed pairing
(f, pi v) with the BDM interpolation pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import bdm
from .fe_basis import BDM, DISCONTINUOUS_P, SCALAR_Q, VECTOR_Q, FunctionSpace
from .quadrature import tensor_rule
from .reconstruction import build_local_reconstruction

STANDARD = "standard"
RECONSTRUCTED = "reconstructed"
MEAN_PRESSURE_ZERO = "mean_pressure_zero"


def matrix_order(space):
    """Gauss points per direction for bilinear forms (exact on affine cells)."""
    return space.degree + 1


def load_order(space):
    """Gauss points per direction for loads and error norms."""
    return space.degree + 3


def cell_quadrature(mesh, n):
    """Reference points, physical weights and physical points (n_cells, nq, 2)."""
    rule = tensor_rule(n)
    w = rule.weights * mesh.cell_area
    scale = np.array([mesh.hx, mesh.hy])
    pts = mesh.cell_origins[:, None, :] + rule.points[None, :, :] * scale
    return rule.points, w, pts


def _scatter_matrix(row_space, col_space, local):
    """Global sparse matrix from one local matrix shared by every cell."""
    rs, cs = row_space.cell_signs, col_space.cell_signs
    data = rs[:, :, None] * local[None, :, :] * cs[:, None, :]
    rows = np.broadcast_to(row_space.cell_dofs[:, :, None], data.shape)
    cols = np.broadcast_to(col_space.cell_dofs[:, None, :], data.shape)
    mat = sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())),
                        shape=(row_space.n_dofs, col_space.n_dofs)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def _scatter_vector(space, local):
    vals = (local * space.cell_signs).ravel()
    return np.bincount(space.cell_dofs.ravel(), weights=vals, minlength=space.n_dofs)


def _require(space, family, what):
    if space.kind.family != family:
        raise ValueError(f"{what} needs a {family} space, got {space.kind}")


def _same_mesh(a, b):
    if a.mesh is not b.mesh:
        raise ValueError("spaces are defined on different meshes")


def assemble_stiffness(space_V: FunctionSpace, mu: float):
    """A_ij = 2 mu (eps(phi_i), eps(phi_j))."""
    _require(space_V, VECTOR_Q, "stiffness")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    ref, w, _ = cell_quadrature(space_V.mesh, matrix_order(space_V))
    _, grads = space_V.tabulate(ref)
    eps = 0.5 * (grads + np.swapaxes(grads, 2, 3))
    local = 2.0 * mu * np.einsum("q,qikd,qjkd->ij", w, eps, eps)
    return _scatter_matrix(space_V, space_V, local)


def assemble_divergence(space_V: FunctionSpace, space_Q: FunctionSpace):
    """B_qi = (q, div phi_i); ``space_V`` may be vector Lagrange or BDM."""
    if space_V.kind.family not in (VECTOR_Q, BDM):
        raise ValueError(f"divergence needs a vector space, got {space_V.kind}")
    _same_mesh(space_V, space_Q)
    ref, w, _ = cell_quadrature(space_V.mesh, matrix_order(space_V))
    _, grads = space_V.tabulate(ref)
    q_vals, _ = space_Q.tabulate(ref)
    div = np.trace(grads, axis1=2, axis2=3)
    local = np.einsum("q,qa,qi->ai", w, q_vals, div)
    return _scatter_matrix(space_Q, space_V, local)


def assemble_pressure_mass(space_Q: FunctionSpace):
    """M_qr = (q, r) for a scalar space."""
    if space_Q.is_vector:
        raise ValueError("pressure mass needs a scalar space")
    ref, w, _ = cell_quadrature(space_Q.mesh, space_Q.degree + 1)
    vals, _ = space_Q.tabulate(ref)
    return _scatter_matrix(space_Q, space_Q, np.einsum("q,qa,qb->ab", w, vals, vals))


def assemble_scalar_load(space: FunctionSpace, g):
    """(g, phi_i) for a scalar space; ``g`` maps (..., 2) points to (...)."""
    ref, w, pts = cell_quadrature(space.mesh, load_order(space))
    vals, _ = space.tabulate(ref)
    gv = np.broadcast_to(np.asarray(g(pts), dtype=float), pts.shape[:-1])
    return _scatter_vector(space, np.einsum("q,cq,qa->ca", w, gv, vals))


def integrals(space: FunctionSpace):
    """Integral of every basis function of a scalar space."""
    return assemble_scalar_load(space, lambda x: np.ones(x.shape[:-1]))


def assemble_load(space_V: FunctionSpace, f, mode: str = STANDARD):
    """Load vector (f, phi_i) or (f, pi phi_i).

    ``f`` maps points of shape (..., 2) to values of shape (..., 2).  The
    reconstructed mode integrates f against the local BDM image of each
    basis function; the global BDM field is never formed.
    """
    _require(space_V, VECTOR_Q, "load")
    mesh = space_V.mesh
    ref, w, pts = cell_quadrature(mesh, load_order(space_V))
    fv = np.asarray(f(pts), dtype=float)
    if fv.shape != pts.shape:
        raise ValueError(f"load must return shape {pts.shape}, got {fv.shape}")
    if mode == STANDARD:
        vals, _ = space_V.tabulate(ref)
        local = np.einsum("q,cqk,qik->ci", w, fv, vals)
    elif mode == RECONSTRUCTED:
        R = build_local_reconstruction(space_V, 0).matrix
        psi, _ = bdm.tabulate(space_V.degree, mesh.hx, mesh.hy, ref)
        local = np.einsum("q,cqk,qik->ci", w, fv, psi) @ R
    else:
        raise ValueError(f"unknown load mode {mode!r}")
    return _scatter_vector(space_V, local)


def eliminate(K, dofs):
    """Symmetric elimination: zero rows and columns of ``dofs``, unit diagonal."""
    keep = np.ones(K.shape[0])
    keep[dofs] = 0.0
    D = sp.diags(keep)
    out = (D @ K @ D + sp.diags(1.0 - keep)).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


@dataclass(frozen=True)
class SaddleSystem:
    """Blocks of [A B^T; B -M/lam] with its right-hand side.

    For ``lam = inf`` the pressure mass is dropped and the constraint
    ``mean_pressure_zero`` borders the system with the row of basis
    integrals ``mean_vector``.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    M: sp.csr_matrix | None
    lam: float
    rhs_u: np.ndarray
    constraint: str | None = None
    mean_vector: np.ndarray | None = None
    bc_dofs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def n_u(self):
        return self.A.shape[0]

    @property
    def n_p(self):
        return self.B.shape[0]

    def compose(self):
        """Return the full sparse matrix (CSR) and right-hand side."""
        blocks = [[self.A, self.B.T], [self.B, None]]
        if math.isfinite(self.lam):
            blocks[1][1] = -self.M / self.lam
        else:
            blocks[1][1] = sp.csr_matrix((self.n_p, self.n_p))
        rhs = [self.rhs_u, np.zeros(self.n_p)]
        if self.constraint == MEAN_PRESSURE_ZERO:
            c = sp.csr_matrix(self.mean_vector.reshape(-1, 1))
            blocks[0].append(None)
            blocks[1].append(c)
            blocks.append([None, c.T, sp.csr_matrix((1, 1))])
            rhs.append(np.zeros(1))
        K = sp.bmat(blocks, format="csr")
        K.sort_indices()
        return K, np.concatenate(rhs)

    def split(self, x):
        """Displacement and pressure parts of a solution vector."""
        return x[: self.n_u], x[self.n_u: self.n_u + self.n_p]


def apply_dirichlet(system: SaddleSystem, space_V: FunctionSpace) -> SaddleSystem:
    """Impose u = 0 on the boundary by symmetric elimination."""
    bc = space_V.boundary_dofs
    keep = np.ones(system.n_u)
    keep[bc] = 0.0
    rhs = system.rhs_u.copy()
    rhs[bc] = 0.0
    B = (system.B @ sp.diags(keep)).tocsr()
    B.eliminate_zeros()
    return replace(system, A=eliminate(system.A, bc), B=B, rhs_u=rhs,
                   bc_dofs=np.union1d(system.bc_dofs, bc))


def check_pair(space_V, space_Q):
    _require(space_V, VECTOR_Q, "displacement")
    _same_mesh(space_V, space_Q)
    k = space_V.degree
    ok = ((space_Q.kind.family == DISCONTINUOUS_P and space_Q.degree == k - 1)
          or (space_Q.kind.family == SCALAR_Q and space_Q.degree == k - 1))
    if not ok:
        raise ValueError(f"{space_V.kind} x {space_Q.kind} is not a supported inf-sup stable pair")


def build_saddle_system(mu, lam, space_V, space_Q, f, mode=STANDARD,
                        dirichlet=True) -> SaddleSystem:
    """Assemble the (modified) mixed elasticity system.

    ``lam`` may be ``math.inf``; the pressure is then fixed by a zero-mean
    constraint.
    """
    check_pair(space_V, space_Q)
    if not lam > 0:
        raise ValueError(f"lambda must be positive or inf, got {lam}")
    A = assemble_stiffness(space_V, mu)
    B = assemble_divergence(space_V, space_Q)
    rhs = assemble_load(space_V, f, mode)
    if math.isfinite(lam):
        system = SaddleSystem(A, B, assemble_pressure_mass(space_Q), float(lam), rhs)
    else:
        system = SaddleSystem(A, B, None, math.inf, rhs, MEAN_PRESSURE_ZERO,
                              integrals(space_Q))
    return apply_dirichlet(system, space_V) if dirichlet else system


def assemble_heat(space_T: FunctionSpace, gamma: float, source):
    """Stiffness gamma (grad th, grad tau) and load (source, tau), Dirichlet applied."""
    _require(space_T, SCALAR_Q, "heat problem")
    if not gamma > 0:
        raise ValueError(f"conductivity must be positive, got {gamma}")
    ref, w, _ = cell_quadrature(space_T.mesh, matrix_order(space_T))
    _, grads = space_T.tabulate(ref)
    K = _scatter_matrix(space_T, space_T,
                        gamma * np.einsum("q,qid,qjd->ij", w, grads, grads))
    F = assemble_scalar_load(space_T, source)
    F[space_T.boundary_dofs] = 0.0
    return eliminate(K, space_T.boundary_dofs), F
