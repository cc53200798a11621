"""Sparse direct solution of symmetric indefinite systems (SuperLU, partial pivoting)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class Factorization:
    matrix: sp.csc_matrix
    lu: spla.SuperLU

    @property
    def perm_r(self):
        return self.lu.perm_r

    @property
    def perm_c(self):
        return self.lu.perm_c

    @property
    def smallest_pivot(self):
        return float(np.abs(self.lu.U.diagonal()).min())


def factorize(system) -> Factorization:
    """Factorize a sparse matrix or anything with a ``compose()`` method."""
    K = system.compose()[0] if hasattr(system, "compose") else system
    K = sp.csc_matrix(K, dtype=float)
    if K.shape[0] != K.shape[1]:
        raise ValueError(f"matrix must be square, got {K.shape}")
    try:
        lu = spla.splu(K, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrixError(f"matrix is singular: {exc}") from exc
    fact = Factorization(K, lu)
    pivot = fact.smallest_pivot
    if not np.isfinite(pivot) or pivot <= np.finfo(float).tiny:
        raise SingularMatrixError(f"matrix is singular to working precision "
                                  f"(smallest pivot {pivot:.3e})")
    return fact


def solve(fact: Factorization, rhs) -> np.ndarray:
    """Solve for one right-hand side or a column block of them."""
    rhs = np.asarray(rhs, dtype=float)
    x = fact.lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError(f"non-finite solution (smallest pivot {fact.smallest_pivot:.3e})")
    return x


def relative_residual(K, x, rhs) -> float:
    """||Kx - rhs||_inf / (||K||_inf ||x||_inf + ||rhs||_inf)."""
    r = K @ x - rhs
    k_norm = spla.norm(K, np.inf) if sp.issparse(K) else np.linalg.norm(K, np.inf)
    denom = k_norm * np.abs(x).max(initial=0.0) + np.abs(rhs).max(initial=0.0)
    return float(np.abs(r).max(initial=0.0) / denom) if denom > 0 else 0.0


def pressure_scale(system) -> float:
    """Scale for the pressure unknowns that balances B against A.

    Displacement and pressure coefficients can differ by many orders of
    magnitude (u ~ 1/lam for gradient loads); without balancing, partial
    pivoting loses the displacement to round-off.
    """
    free = np.setdiff1d(np.arange(system.n_u), system.bc_dofs)
    diag = np.abs(system.A.diagonal()[free])
    return float(np.median(diag)) if len(diag) else 1.0


def solve_saddle(system, refinement_steps: int = 2):
    """Solve a composed saddle system with symmetric pressure scaling.

    The scaled factorization is followed by a fixed number of iterative
    refinement steps on the unscaled system, which restores the accuracy
    of the pressure rows lost to the scaling.  Returns the solution and
    its relative residual, both for the unscaled system.
    """
    K, rhs = system.compose()
    sigma = pressure_scale(system)
    d = np.ones(K.shape[0])
    d[system.n_u: system.n_u + system.n_p] = sigma
    D = sp.diags(d)
    fact = factorize(D @ K @ D)
    x = d * solve(fact, d * rhs)
    for _ in range(refinement_steps):
        x = x + d * solve(fact, d * (rhs - K @ x))
    return x, relative_residual(K, x, rhs)
