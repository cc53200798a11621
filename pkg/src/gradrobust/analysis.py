"""Error norms, L2 projections, divergence diagnostics and rate fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import (assemble_divergence, assemble_pressure_mass, assemble_scalar_load,
                       cell_quadrature, load_order)
from .fe_basis import DiscreteField, FunctionSpace


@dataclass(frozen=True)
class ErrorReport:
    h: float
    dofs: int
    err_h1: float
    err_h1_semi: float
    err_l2: float
    norm_u_h1: float
    div_residual: float
    constitutive_residual: float
    solver_residual: float

    def as_dict(self):
        return asdict(self)


def h1_error(u_h: DiscreteField, exact=None, exact_grad=None):
    """Return (||u - u_h||_1, |u - u_h|_1, ||u - u_h||_0).

    Missing ``exact`` / ``exact_grad`` are taken as zero.  Integrals use
    degree+3 Gauss points per direction on every cell.
    """
    space = u_h.space
    ref, w, pts = cell_quadrature(space.mesh, load_order(space))
    vals, grads = u_h.at_ref(ref)
    if exact is not None:
        vals = vals - np.asarray(exact(pts), dtype=float).reshape(vals.shape)
    if exact_grad is not None:
        grads = grads - np.asarray(exact_grad(pts), dtype=float).reshape(grads.shape)
    l2 = float(np.einsum("q,cq->", w, (vals**2).reshape(vals.shape[:2] + (-1,)).sum(-1)))
    semi = float(np.einsum("q,cq->", w, (grads**2).reshape(grads.shape[:2] + (-1,)).sum(-1)))
    return math.sqrt(l2 + semi), math.sqrt(semi), math.sqrt(l2)


def field_norm_h1(u_h: DiscreteField) -> float:
    return h1_error(u_h)[0]


def field_norm_l2(u_h: DiscreteField) -> float:
    return h1_error(u_h)[2]


def l2_project(space_Q: FunctionSpace, g) -> DiscreteField:
    """L2 projection of a scalar callable onto ``space_Q``."""
    M = assemble_pressure_mass(space_Q)
    return DiscreteField(space_Q, spla.splu(M.tocsc()).solve(assemble_scalar_load(space_Q, g)))


def projected_divergence(u_h: DiscreteField, space_Q: FunctionSpace):
    """Coefficients of pi^{L2} div u_h in ``space_Q`` and the mass matrix."""
    M = assemble_pressure_mass(space_Q)
    B = assemble_divergence(u_h.space, space_Q)
    return spla.splu(M.tocsc()).solve(B @ u_h.coeffs), M


def div_residual(u_h: DiscreteField, space_Q: FunctionSpace) -> float:
    """||pi^{L2} div u_h||_0."""
    d, M = projected_divergence(u_h, space_Q)
    return math.sqrt(max(float(d @ (M @ d)), 0.0))


def constitutive_residual(u_h: DiscreteField, p_h: DiscreteField, lam: float) -> float:
    """||pi^{L2} div u_h - p_h / lam||_0 for finite lambda."""
    if not math.isfinite(lam):
        raise ValueError("constitutive residual needs finite lambda; use div_residual")
    d, M = projected_divergence(u_h, p_h.space)
    r = d - p_h.coeffs / lam
    return math.sqrt(max(float(r @ (M @ r)), 0.0))


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
        raise ValueError("need two equally long 1D arrays with at least 2 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def rates(hs, errs):
    """Successive convergence rates log(e_i / e_{i+1}) / log(h_i / h_{i+1})."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
