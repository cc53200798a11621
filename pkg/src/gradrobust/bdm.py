"""Local Brezzi-Douglas-Marini element on an axis-aligned rectangle.

The local space is P_k^2 plus the curls of x^{k+1} y and x y^{k+1}.  It
is spanned by a "prime" basis of scaled monomials in the centred
reference coordinates xi = s - 1/2, eta = t - 1/2; the nodal basis is
obtained by inverting the matrix of degrees of freedom applied to the
prime basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import legval

from .quadrature import gauss_1d, tensor_rule

MAX_CONDITION = 1e8

# (start, direction, outward normal) per local edge in reference
# coordinates; the parameter always runs in +x or +y
_EDGES = (
    ((0.0, 0.0), (1.0, 0.0), (0.0, -1.0)),  # bottom
    ((1.0, 0.0), (0.0, 1.0), (1.0, 0.0)),   # right
    ((0.0, 1.0), (1.0, 0.0), (0.0, 1.0)),   # top
    ((0.0, 0.0), (0.0, 1.0), (-1.0, 0.0)),  # left
)


def total_degree_exponents(m):
    """Exponent pairs (a, b) with a + b <= m, ordered by degree then a descending."""
    if m < 0:
        return []
    return [(d - b, b) for d in range(m + 1) for b in range(d + 1)]


def shifted_legendre(j, t):
    c = np.zeros(j + 1)
    c[j] = 1.0
    return legval(2.0 * np.asarray(t) - 1.0, c)


@dataclass(frozen=True)
class LocalFunctional:
    """A moment functional ``v -> sum_q w_q v(x_q) . d_q`` on one cell.

    ``ref_points`` live in the reference square, ``weights`` carry the
    physical measure and ``directions`` already include the test
    polynomial (and the normal, for edge moments).
    """

    kind: str
    entity: int
    index: int
    ref_points: np.ndarray
    weights: np.ndarray
    directions: np.ndarray

    def apply_values(self, values):
        """Apply to tabulated vector values of shape (nq, ..., 2)."""
        return np.einsum("q,q...c,qc->...", self.weights, values, self.directions)


def local_functionals(k, hx, hy, orientation="outward"):
    """Degrees of freedom of BDM_k on an hx-by-hy cell.

    Edge moments against shifted Legendre polynomials come first (bottom,
    right, top, left; k+1 each), then interior moments against the two
    components of P_{k-2} monomials in (x - c_x)/hx, (y - c_y)/hy.
    ``orientation`` selects the outward cell normal or the global mesh
    normal (+x / +y).
    """
    if orientation not in ("outward", "global"):
        raise ValueError(f"unknown orientation {orientation!r}")
    g = gauss_1d(k + 2)
    lengths = (hx, hy, hx, hy)
    out = []
    for e, (start, direction, normal) in enumerate(_EDGES):
        pts = np.asarray(start) + g.points[:, None] * np.asarray(direction)
        n = np.abs(normal) if orientation == "global" else np.asarray(normal)
        for j in range(k + 1):
            dirs = shifted_legendre(j, g.points)[:, None] * n
            out.append(LocalFunctional("edge", e, j, pts, g.weights * lengths[e], dirs))
    t = tensor_rule(k + 2)
    # centroid-centred monomials, scaled by the cell size
    xc = t.points[:, 0] - 0.5
    yc = t.points[:, 1] - 0.5
    i = 0
    for comp in range(2):
        for a, b in total_degree_exponents(k - 2):
            dirs = np.zeros((len(t), 2))
            dirs[:, comp] = xc**a * yc**b
            out.append(LocalFunctional("interior", 0, i, t.points,
                                       t.weights * hx * hy, dirs))
            i += 1
    return out


def _mono(x, a):
    return x**a if a > 0 else np.ones_like(x)


def _dmono(x, a):
    return a * x ** (a - 1) if a > 0 else np.zeros_like(x)


def prime_basis(k, hx, hy, ref_pts):
    """Values (nq, n, 2) and physical gradients (nq, n, 2, 2) of the prime basis."""
    ref_pts = np.atleast_2d(np.asarray(ref_pts, dtype=float))
    xi = ref_pts[:, 0] - 0.5
    eta = ref_pts[:, 1] - 0.5
    exps = total_degree_exponents(k)
    n = 2 * len(exps) + 2
    vals = np.zeros((len(xi), n, 2))
    grads = np.zeros((len(xi), n, 2, 2))
    col = 0
    for comp in range(2):
        for a, b in exps:
            vals[:, col, comp] = _mono(xi, a) * _mono(eta, b)
            grads[:, col, comp, 0] = _dmono(xi, a) * _mono(eta, b) / hx
            grads[:, col, comp, 1] = _mono(xi, a) * _dmono(eta, b) / hy
            col += 1
    m = k + 1
    # curl of x^{k+1} y, rescaled
    r = hy / hx
    vals[:, col, 0] = xi**m
    vals[:, col, 1] = -m * r * xi**k * eta
    grads[:, col, 0, 0] = m * xi**k / hx
    grads[:, col, 1, 0] = -m * r * _dmono(xi, k) * eta / hx
    grads[:, col, 1, 1] = -m * r * xi**k / hy
    col += 1
    # curl of x y^{k+1}, rescaled
    r = hx / hy
    vals[:, col, 0] = m * r * xi * eta**k
    vals[:, col, 1] = -eta**m
    grads[:, col, 0, 0] = m * r * eta**k / hx
    grads[:, col, 0, 1] = m * r * xi * _dmono(eta, k) / hy
    grads[:, col, 1, 1] = -m * eta**k / hy
    return vals, grads


def local_dimension(k):
    return (k + 1) * (k + 2) + 2


@lru_cache(maxsize=32)
def dual_coefficients(k, hx, hy):
    """Coefficients C with nodal basis_i = sum_j C[j, i] * prime_j.

    Rejects elements whose dof matrix is ill conditioned.
    """
    funcs = local_functionals(k, hx, hy)
    dof = np.empty((len(funcs), local_dimension(k)))
    for i, f in enumerate(funcs):
        vals, _ = prime_basis(k, hx, hy, f.ref_points)
        dof[i] = f.apply_values(vals)
    # functional scaling is arbitrary; equilibrate rows before inverting
    scale = 1.0 / np.abs(dof).max(axis=1)
    scaled = dof * scale[:, None]
    cond = np.linalg.cond(scaled)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise np.linalg.LinAlgError(
            f"BDM_{k} dof matrix ill conditioned (cond = {cond:.3e})")
    coeffs = np.linalg.inv(scaled) * scale[None, :]
    coeffs.setflags(write=False)
    return coeffs


def tabulate(k, hx, hy, ref_pts):
    """Nodal BDM_k basis: values (nq, n, 2) and physical gradients (nq, n, 2, 2)."""
    c = dual_coefficients(k, float(hx), float(hy))
    vals, grads = prime_basis(k, hx, hy, ref_pts)
    return (np.einsum("qjc,ji->qic", vals, c),
            np.einsum("qjcd,ji->qicd", grads, c))
