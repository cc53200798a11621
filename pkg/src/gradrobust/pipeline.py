"""Discretize, solve and measure one elasticity problem."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (ErrorReport, constitutive_residual, div_residual, field_norm_h1,
                       h1_error)
from .assembly import RECONSTRUCTED, STANDARD, SaddleSystem, build_saddle_system
from .fe_basis import (DiscreteField, build_space, discontinuous_p, scalar_lagrange_q,
                       vector_lagrange_q)
from .linsolve import solve_saddle
from .mesh import Mesh, build_rect_mesh
from .problems import ProblemSpec

ELEMENTS = ("q2_dgp1", "q2_q1")
METHODS = ("robust", "naive")


def spaces(mesh: Mesh, elements: str = "q2_dgp1", k: int = 2):
    """Displacement and pressure spaces of an element pair."""
    V = build_space(mesh, vector_lagrange_q(k))
    if elements == "q2_dgp1":
        return V, build_space(mesh, discontinuous_p(k - 1))
    if elements == "q2_q1":
        return V, build_space(mesh, scalar_lagrange_q(k - 1))
    raise ValueError(f"unknown element pair {elements!r}")


def load_mode(method: str, elements: str) -> str:
    if method == "naive":
        return STANDARD
    if method != "robust":
        raise ValueError(f"unknown method {method!r}")
    if elements != "q2_dgp1":
        # the reconstruction needs div BDM_k inside the pressure space
        raise ValueError("the robust method is only available for q2_dgp1")
    return RECONSTRUCTED


@dataclass(frozen=True)
class Solution:
    u_h: DiscreteField
    p_h: DiscreteField
    system: SaddleSystem
    residual: float


def solve_problem(problem: ProblemSpec, mesh: Mesh, elements: str = "q2_dgp1",
                  method: str = "robust", k: int = 2) -> Solution:
    mode = load_mode(method, elements)
    V, Q = spaces(mesh, elements, k)
    system = build_saddle_system(problem.mu, problem.lam, V, Q, problem.f, mode)
    x, residual = solve_saddle(system)
    u, p = system.split(x)
    return Solution(DiscreteField(V, u), DiscreteField(Q, p), system, residual)


def unit_mesh(n: int, problem: ProblemSpec | None = None) -> Mesh:
    lx, ly = problem.extent if problem is not None else (1.0, 1.0)
    return build_rect_mesh(n, n, lx, ly)


def error_report(problem: ProblemSpec, sol: Solution) -> ErrorReport:
    """Errors against the problem's reference displacement (zero if none)."""
    u_h, p_h = sol.u_h, sol.p_h
    err_h1, err_semi, err_l2 = h1_error(u_h, problem.exact_u, problem.exact_grad_u)
    div_res = div_residual(u_h, p_h.space)
    if math.isfinite(problem.lam):
        const_res = constitutive_residual(u_h, p_h, problem.lam)
    else:
        const_res = div_res
    mesh = u_h.space.mesh
    return ErrorReport(h=mesh.hx, dofs=int(u_h.space.n_dofs + p_h.space.n_dofs),
                       err_h1=err_h1, err_h1_semi=err_semi, err_l2=err_l2,
                       norm_u_h1=field_norm_h1(u_h), div_residual=div_res,
                       constitutive_residual=const_res, solver_residual=sol.residual)


def sample_grid(u_h: DiscreteField, n: int = 50) -> np.ndarray:
    """Rows (x, y, u1, u2) on a uniform n-by-n grid covering the domain."""
    mesh = u_h.space.mesh
    xs = np.linspace(0.0, mesh.Lx, n)
    ys = np.linspace(0.0, mesh.Ly, n)
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return np.column_stack([pts, u_h(pts)])
