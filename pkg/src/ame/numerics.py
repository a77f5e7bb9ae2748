"""Small numerical kernels: composite Gauss-Legendre quadrature and golden-section search."""

from __future__ import annotations

import numpy as np

# 8-point Gauss-Legendre rule on [-1, 1]; exact through degree 15 per panel.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def panel_integrals(fn, edges):
    """Integral of fn over each interval [edges[i], edges[i+1]].

    fn must accept a flat numpy array. Returns an array of per-panel integrals.
    """
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
    return (vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half


def integrate(fn, a, b, panels=64):
    """Integral of a smooth vectorized fn over [a, b]."""
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    return float(panel_integrals(fn, edges).sum())


def cumulative(fn, grid):
    """Cumulative integral of fn from grid[0] to every grid point (leading zero)."""
    out = np.zeros(len(grid))
    out[1:] = np.cumsum(panel_integrals(fn, grid))
    return out


def golden_max(fn, lo, hi, tol=1e-5, max_iter=200):
    """Golden-section maximization of a unimodal fn on [lo, hi].

    Returns (argmax, value). Does not require smoothness, only unimodality
    on the bracket.
    """
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = fn(x1)
        it += 1
    xm = 0.5 * (a + b)
    return xm, fn(xm)
