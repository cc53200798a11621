"""Closed-form test problems and the thermo-elastic pipeline.

All loads are given for the weak form used by :mod:`gradrobust.assembly`,
whose strong form reads -2 mu div eps(u) - grad p = f.  Examples written
with +grad p store the negated pressure in ``exact_p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import assemble_heat
from .fe_basis import DiscreteField, build_space, scalar_lagrange_q
from .linsolve import factorize, solve
from .mesh import Mesh

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """Material parameters, load and (optional) reference solution.

    Callables take points of shape (..., 2).  ``exact_grad_u`` returns
    (..., 2, 2) with the component axis first.
    """

    mu: float
    lam: float
    f: Field
    exact_u: Field | None = None
    exact_grad_u: Field | None = None
    exact_p: Field | None = None
    phi: Field | None = None
    label: str = ""
    extent: tuple[float, float] = (1.0, 1.0)
    theta: DiscreteField | None = field(default=None, repr=False)


def _xy(pts):
    pts = np.asarray(pts, dtype=float)
    return pts[..., 0], pts[..., 1]


# x^2 (1-x)^2 and y (1-y)(1-2y) = g'/2 with derivatives
def _g(t):
    return t**2 * (1 - t) ** 2


def _g2(t):
    return 2 - 12 * t + 12 * t**2


def _w(t):
    return t - 3 * t**2 + 2 * t**3


def _w1(t):
    return 1 - 6 * t + 6 * t**2


def _w2(t):
    return -6 + 12 * t


def stokes_velocity(pts):
    """Divergence-free field, the curl of 100 x^2 (1-x)^2 y^2 (1-y)^2."""
    x, y = _xy(pts)
    return np.stack([200 * _g(x) * _w(y), -200 * _w(x) * _g(y)], axis=-1)


def stokes_velocity_grad(pts):
    x, y = _xy(pts)
    g = np.empty(x.shape + (2, 2))
    g[..., 0, 0] = 400 * _w(x) * _w(y)
    g[..., 0, 1] = 200 * _g(x) * _w1(y)
    g[..., 1, 0] = -200 * _w1(x) * _g(y)
    g[..., 1, 1] = -400 * _w(x) * _w(y)
    return g


def stokes_velocity_laplacian(pts):
    x, y = _xy(pts)
    return np.stack([200 * (_g2(x) * _w(y) + _g(x) * _w2(y)),
                     -200 * (_w2(x) * _g(y) + _w(x) * _g2(y))], axis=-1)


def cubic_potential(pts):
    """-10 (x - 1/2)^3 y^2 + (1 - x)^3 (y - 1/2)^3, without constant."""
    x, y = _xy(pts)
    return -10 * (x - 0.5) ** 3 * y**2 + (1 - x) ** 3 * (y - 0.5) ** 3


def cubic_potential_grad(pts):
    x, y = _xy(pts)
    return np.stack([-30 * (x - 0.5) ** 2 * y**2 - 3 * (1 - x) ** 2 * (y - 0.5) ** 3,
                     -20 * (x - 0.5) ** 3 * y + 3 * (1 - x) ** 3 * (y - 0.5) ** 2], axis=-1)


def zero_vector(pts):
    return np.zeros(np.shape(pts))


def zero_gradient(pts):
    return np.zeros(np.shape(pts)[:-1] + (2, 2))


def _stokes_load(mu):
    def f(pts):
        return -mu * stokes_velocity_laplacian(pts) + cubic_potential_grad(pts)
    return f


def example_incompressible(mu: float = 1.0) -> ProblemSpec:
    """Stokes-type solution with a cubic pressure, lambda = inf.

    The source pressure is -10 (x-1/2)^3 y^2 + (1-x)^3 (y-1/2)^3 + 1/8,
    which has mean 1/8; ``exact_p`` is its zero-mean counterpart in the
    sign convention of the weak form.
    """
    return ProblemSpec(mu=mu, lam=math.inf, f=_stokes_load(mu),
                       exact_u=stokes_velocity, exact_grad_u=stokes_velocity_grad,
                       exact_p=lambda pts: -cubic_potential(pts), label="ex1_incompressible")


def example_gradient_poly(mu: float = 1e-5, lam: float = 1.0) -> ProblemSpec:
    """Pure gradient load f = grad(x^6 + y^6); the reference displacement is 0."""
    def phi(pts):
        x, y = _xy(pts)
        return x**6 + y**6

    def f(pts):
        x, y = _xy(pts)
        return np.stack([6 * x**5, 6 * y**5], axis=-1)

    return ProblemSpec(mu=mu, lam=lam, f=f, exact_u=zero_vector,
                       exact_grad_u=zero_gradient, phi=phi, label="ex2_gradient_poly")


def example_gradient_cubic(mu: float = 1e-5, lam: float = 1.0) -> ProblemSpec:
    """Pure gradient load f = grad(-10 (x-1/2)^3 y^2 + (1-x)^3 (y-1/2)^3 - 1/8)."""
    return ProblemSpec(mu=mu, lam=lam, f=cubic_potential_grad, exact_u=zero_vector,
                       exact_grad_u=zero_gradient,
                       phi=lambda pts: cubic_potential(pts) - 0.125,
                       label="ex3_gradient_cubic")


def example_nearly_incompressible(mu: float = 1e-5, lam: float = 1e5) -> ProblemSpec:
    """Load of :func:`example_incompressible` at finite lambda.

    ``exact_u`` is the incompressible limit u^inf, so the reported error
    is ||u^inf - u_h^lam||.
    """
    return ProblemSpec(mu=mu, lam=lam, f=_stokes_load(mu), exact_u=stokes_velocity,
                       exact_grad_u=stokes_velocity_grad, label="ex4_nearly_incompressible")


@dataclass(frozen=True)
class ThermoParams:
    """Hard rubber on [0, L]^2 heated by 4 exp(-40 r^2) W/m^3."""

    E: float = 5e7
    nu_poisson: float = 0.4999
    alpha: float = 8e-5
    gamma: float = 0.2
    L: float = 0.1
    heat_source: Field | None = None

    @property
    def lam(self):
        nu = self.nu_poisson
        return self.E * nu / ((1 + nu) * (1 - 2 * nu))

    @property
    def mu(self):
        return self.E / (2 * (1 + self.nu_poisson))

    def source(self, pts):
        if self.heat_source is not None:
            return self.heat_source(pts)
        x, y = _xy(pts)
        r2 = (x - 0.5 * self.L) ** 2 + (y - 0.5 * self.L) ** 2
        return 4.0 * np.exp(-40.0 * r2)


def solve_heat(params: ThermoParams, mesh: Mesh, k: int = 2) -> DiscreteField:
    """Q_k solution of -div(gamma grad theta) = source, theta = 0 on the boundary."""
    space = build_space(mesh, scalar_lagrange_q(k))
    K, F = assemble_heat(space, params.gamma, params.source)
    return DiscreteField(space, solve(factorize(K), F))


def thermo_pipeline(params: ThermoParams, mesh: Mesh, lam: float | None = None,
                    k: int = 2) -> ProblemSpec:
    """Thermal load f = -(2 mu + 3 lam) alpha grad theta_h on ``mesh``.

    ``lam`` overrides the Lame parameter derived from (E, nu); the load
    coefficient follows it.
    """
    if not (np.isclose(mesh.Lx, params.L) and np.isclose(mesh.Ly, params.L)):
        raise ValueError(f"mesh must cover [0, {params.L}]^2")
    lam = params.lam if lam is None else lam
    theta = solve_heat(params, mesh, k)
    coef = (2 * params.mu + 3 * lam) * params.alpha

    def f(pts):
        return -coef * theta.grad(pts)

    def phi(pts):
        return -coef * theta(pts)

    return ProblemSpec(mu=params.mu, lam=lam, f=f, phi=phi, label="thermo",
                       extent=(params.L, params.L), theta=theta)
