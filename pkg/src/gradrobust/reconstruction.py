"""Canonical BDM_k interpolation of continuous vector Q_k fields.

The interpolation is applied cell by cell: on every cell the BDM degrees
of freedom of the local Q_k basis functions form a dense matrix that
maps local Q_k coefficients to local BDM coefficients.  Because Q_k
fields are continuous, edge moments computed from the two neighbouring
cells agree, so the local pieces define one H(div)-conforming field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import bdm
from .fe_basis import (BDM, DISCONTINUOUS_P, VECTOR_Q, DiscreteField, FunctionSpace,
                       bdm_space, build_space)
from .mesh import Mesh
from .quadrature import tensor_rule


@dataclass(frozen=True)
class DofFunctional:
    """Moment functional ``v -> sum_q w_q v(x_q) . d_q`` at physical points.

    ``entity`` is the global edge index for edge moments and the cell
    index for interior moments.
    """

    kind: str
    entity: int
    index: int
    points: np.ndarray
    weights: np.ndarray
    directions: np.ndarray

    def __call__(self, g):
        vals = np.asarray(g(self.points), dtype=float)
        return float(np.sum(self.weights * np.sum(vals * self.directions, axis=-1)))


def bdm_dof_functionals(mesh: Mesh, cell: int, k: int = 2,
                        orientation: str = "global") -> list[DofFunctional]:
    """BDM_k degrees of freedom of ``cell`` as physical moment functionals.

    With the default ``orientation="global"`` edge moments use the global
    edge normal, so a shared edge yields the same functionals from both
    neighbouring cells.
    """
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    out = []
    for f in bdm.local_functionals(k, mesh.hx, mesh.hy, orientation):
        entity = int(mesh.cell_edges[cell, f.entity]) if f.kind == "edge" else cell
        out.append(DofFunctional(f.kind, entity, f.index,
                                 mesh.ref_to_phys(cell, f.ref_points),
                                 f.weights, f.directions))
    return out


@dataclass(frozen=True)
class TestSpaceQtilde:
    """Per-cell vector polynomials (P_{k-2})^2 in centred, scaled coordinates."""

    __test__ = False  # not a pytest class despite the name

    mesh: Mesh
    k: int

    @property
    def dim(self):
        return 2 * len(bdm.total_degree_exponents(self.k - 2))

    def tabulate(self, ref_pts):
        ref_pts = np.atleast_2d(ref_pts)
        x = ref_pts[:, 0] - 0.5
        y = ref_pts[:, 1] - 0.5
        exps = bdm.total_degree_exponents(self.k - 2)
        out = np.zeros((len(ref_pts), self.dim, 2))
        for comp in range(2):
            for i, (a, b) in enumerate(exps):
                out[:, comp * len(exps) + i, comp] = x**a * y**b
        return out


@dataclass(frozen=True)
class LocalReconstruction:
    cell: int
    matrix: np.ndarray


_MATRIX_CACHE: dict = {}


def _local_matrix(space_V: FunctionSpace) -> np.ndarray:
    mesh = space_V.mesh
    key = (space_V.degree, mesh.hx, mesh.hy)
    if key not in _MATRIX_CACHE:
        funcs = bdm.local_functionals(space_V.degree, mesh.hx, mesh.hy)
        rows = []
        for f in funcs:
            vals, _ = space_V.tabulate(f.ref_points)
            rows.append(f.apply_values(vals))
        mat = np.array(rows)
        mat.setflags(write=False)
        _MATRIX_CACHE[key] = mat
    return _MATRIX_CACHE[key]


def _check_vector_space(space_V):
    if space_V.kind.family != VECTOR_Q:
        raise ValueError(f"reconstruction needs a vector Lagrange space, got {space_V.kind}")


def build_local_reconstruction(space_V: FunctionSpace, cell: int) -> LocalReconstruction:
    """Matrix mapping local Q_k coefficients of ``cell`` to local BDM_k coefficients.

    All cells of a uniform mesh share one matrix; it is computed once per
    cell geometry.
    """
    _check_vector_space(space_V)
    if not 0 <= cell < space_V.mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    return LocalReconstruction(cell, _local_matrix(space_V))


def local_bdm_coeffs(field: DiscreteField) -> np.ndarray:
    """Local (outward-oriented) BDM coefficients of the reconstruction, per cell."""
    _check_vector_space(field.space)
    return field.local_coeffs() @ _local_matrix(field.space).T


def reconstruct(field: DiscreteField, space_M: FunctionSpace | None = None) -> DiscreteField:
    """Global BDM_k field of the reconstruction (for diagnostics only)."""
    if space_M is None:
        space_M = build_space(field.space.mesh, bdm_space(field.space.degree))
    if space_M.kind.family != BDM or space_M.degree != field.space.degree:
        raise ValueError(f"target must be BDM({field.space.degree}), got {space_M.kind}")
    coeffs = np.zeros(space_M.n_dofs)
    coeffs[space_M.cell_dofs] = local_bdm_coeffs(field) * space_M.cell_signs
    return DiscreteField(space_M, coeffs)


def reconstructed_at_ref(field: DiscreteField, ref_pts):
    """Values (n_cells, nq, 2) and divergence (n_cells, nq) of the reconstruction."""
    mesh = field.space.mesh
    vals, grads = bdm.tabulate(field.space.degree, mesh.hx, mesh.hy, ref_pts)
    lc = local_bdm_coeffs(field)
    div = np.trace(grads, axis1=2, axis2=3)
    return np.einsum("ci,qik->cqk", lc, vals), np.einsum("ci,qi->cq", lc, div)


class Defects(NamedTuple):
    commuting_defect: float
    orthogonality_defect: float
    approx_ratio: float


def reconstruction_defects(space_V: FunctionSpace, space_Q: FunctionSpace,
                           field: DiscreteField) -> Defects:
    """Check the defining properties of the reconstruction on one field.

    The commuting and orthogonality defects are the largest moment
    mismatches, each divided by the corresponding sum of absolute
    contributions, so that round-off level values are of order 1e-16.
    ``approx_ratio`` is the largest cell-wise ratio
    ||pi v - v||_{0,T} / (h_T |v|_{1,T}), with 0/0 counted as 0.
    """
    _check_vector_space(space_V)
    if space_Q.kind.family != DISCONTINUOUS_P:
        raise ValueError("commuting check needs a discontinuous pressure space")
    if field.space is not space_V:
        raise ValueError("field does not belong to space_V")
    mesh = space_V.mesh
    k = space_V.degree
    rule = tensor_rule(k + 3)
    w = rule.weights * mesh.cell_area
    v_vals, v_grads = space_V.tabulate(rule.points)
    m_vals, m_grads = bdm.tabulate(k, mesh.hx, mesh.hy, rule.points)
    q_vals, _ = space_Q.tabulate(rule.points)
    R = _local_matrix(space_V)
    lc = field.local_coeffs()
    pc = lc @ R.T

    v_div = np.trace(v_grads, axis1=2, axis2=3)
    m_div = np.trace(m_grads, axis1=2, axis2=3)
    b_v = np.einsum("q,qa,qj->aj", w, q_vals, v_div)
    b_m = np.einsum("q,qa,qi->ai", w, q_vals, m_div)
    lhs, rhs = pc @ b_m.T, lc @ b_v.T
    scale = np.abs(pc) @ np.abs(b_m).T + np.abs(lc) @ np.abs(b_v).T
    commuting = _relative(lhs - rhs, scale)

    qt = TestSpaceQtilde(mesh, k).tabulate(rule.points)
    o_v = np.einsum("q,qak,qjk->aj", w, qt, v_vals)
    o_m = np.einsum("q,qak,qik->ai", w, qt, m_vals)
    scale = np.abs(lc) @ np.abs(o_v).T + np.abs(pc) @ np.abs(o_m).T
    ortho = _relative(lc @ o_v.T - pc @ o_m.T, scale)

    diff = np.einsum("ci,qik->cqk", lc, v_vals) - np.einsum("ci,qik->cqk", pc, m_vals)
    err = np.sqrt(np.einsum("q,cqk->c", w, diff**2))
    semi = np.sqrt(np.einsum("q,cqkd->c", w, np.einsum("ci,qikd->cqkd", lc, v_grads) ** 2))
    ratio = np.divide(err, mesh.h * semi, out=np.zeros_like(err),
                      where=semi > 1e-14 * max(semi.max(), 1e-300))
    return Defects(commuting, ortho, float(ratio.max()))


def _relative(defect, scale):
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(defect) / scale, initial=0.0))


def approximation_constant(space_V: FunctionSpace) -> float:
    """Sharp cell-wise constant c in ||pi v - v||_{0,T} <= c h_T |v|_{1,T}.

    Computed from a generalised eigenvalue problem over the local Q_k
    space; the value does not depend on the cell size for a fixed aspect
    ratio.
    """
    from scipy.linalg import eigh

    _check_vector_space(space_V)
    mesh = space_V.mesh
    rule = tensor_rule(space_V.degree + 3)
    w = rule.weights * mesh.cell_area
    v_vals, v_grads = space_V.tabulate(rule.points)
    m_vals, _ = bdm.tabulate(space_V.degree, mesh.hx, mesh.hy, rule.points)
    diff = v_vals - np.einsum("qik,ij->qjk", m_vals, _local_matrix(space_V))
    E = np.einsum("q,qik,qjk->ij", w, diff, diff)
    S = np.einsum("q,qikd,qjkd->ij", w, v_grads, v_grads)
    # restrict to the complement of constants (the kernel of S)
    evals, evecs = np.linalg.eigh(S)
    keep = evals > 1e-10 * evals.max()
    Z = evecs[:, keep]
    top = eigh(Z.T @ E @ Z, Z.T @ S @ Z, eigvals_only=True)[-1]
    return float(np.sqrt(max(top, 0.0)) / mesh.h)
