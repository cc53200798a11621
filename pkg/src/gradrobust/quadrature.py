"""Gauss-Legendre rules on [0, 1], the unit square and mesh edges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

MAX_POINTS = 10


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def _check(n):
    if int(n) != n or not 1 <= n <= MAX_POINTS:
        raise ValueError(f"number of Gauss points must be in 1..{MAX_POINTS}, got {n}")


def gauss_1d(n: int) -> QuadRule:
    """n-point Gauss-Legendre rule on [0, 1], exact up to degree 2n-1."""
    _check(n)
    x, w = leggauss(int(n))
    return QuadRule(points=0.5 * (x + 1.0), weights=0.5 * w)


def tensor_rule(n: int) -> QuadRule:
    """Tensor Gauss rule on [0, 1]^2; points are ordered with x fastest."""
    g = gauss_1d(n)
    px, py = np.meshgrid(g.points, g.points)
    wx, wy = np.meshgrid(g.weights, g.weights)
    return QuadRule(points=np.column_stack([px.ravel(), py.ravel()]),
                    weights=(wx * wy).ravel())


def edge_rule(n: int, start=None, end=None) -> QuadRule:
    """Gauss rule along a straight edge.

    Without endpoints this is ``gauss_1d(n)`` (the arc-length parameter
    normalised to [0, 1]).  With endpoints the points are placed on the
    segment and the weights carry the edge length, so that
    ``sum(w * g(p))`` approximates the line integral of ``g``.
    """
    g = gauss_1d(n)
    if start is None and end is None:
        return g
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    pts = start + g.points[:, None] * (end - start)
    return QuadRule(points=pts, weights=g.weights * np.linalg.norm(end - start))
