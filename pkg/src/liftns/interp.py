"""Monotone piecewise-cubic Hermite interpolation (Fritsch-Butland / PCHIP slopes).

Slopes use the weighted harmonic mean of adjacent secants in the interior and a
shape-limited three-point formula at the ends, the same rule as
``scipy.interpolate.PchipInterpolator``. Slopes at a knot depend only on its
neighbours, so a window of at most four knots reproduces the global slopes of
any interval, which the lifted stepper relies on.
"""

from __future__ import annotations

import numpy as np


def _edge(h0, h1, m0, m1):
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > 3.0 * abs(m0):
        return 3.0 * m0
    return d


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-D arrays of equal length")
    return slopes_from_steps(np.diff(x), np.diff(y))


def slopes_from_steps(h: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Knot slopes from interval widths ``h`` and rises ``dy`` (one fewer than knots)."""
    h = np.asarray(h, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if h.size < 1:
        raise ValueError("need at least two knots")
    if np.any(h <= 0):
        raise ValueError("knots must be strictly increasing")
    m = dy / h
    if h.size == 1:
        return np.array([m[0], m[0]])

    d = np.empty(h.size + 1)
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    same_sign = (np.sign(m[1:]) == np.sign(m[:-1])) & (m[1:] != 0) & (m[:-1] != 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        whmean = (w1 / m[:-1] + w2 / m[1:]) / (w1 + w2)
        d[1:-1] = np.where(same_sign, 1.0 / whmean, 0.0)
    d[0] = _edge(h[0], h[1], m[0], m[1])
    d[-1] = _edge(h[-1], h[-2], m[-1], m[-2])
    return d


def hermite_increment(h, dy, d0, d1, s):
    """p(s) - p(0) on one interval of width ``h`` with rise ``dy``; ``s`` in [0, 1].

    The increment form avoids cancellation against a large left-knot value, and
    returns ``dy`` exactly at ``s = 1``.
    """
    s2 = s * s
    s3 = s2 * s
    return dy * (3.0 * s2 - 2.0 * s3) + h * (d0 * (s - 2.0 * s2 + s3) + d1 * (s3 - s2))


def hermite_derivative(h, dy, d0, d1, s):
    return (dy / h) * (6.0 * s - 6.0 * s * s) + d0 * (1.0 - 4.0 * s + 3.0 * s * s) + d1 * (
        3.0 * s * s - 2.0 * s
    )


def locate(x: np.ndarray, xq: np.ndarray) -> np.ndarray:
    """Interval index i with x[i] <= xq <= x[i+1]; the last knot maps to the last interval."""
    i = np.searchsorted(x, xq, side="right") - 1
    return np.clip(i, 0, x.size - 2)


def hermite_eval(x, y, d, xq, derivative: bool = False):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xq = np.asarray(xq, dtype=float)
    i = locate(x, xq)
    h = x[i + 1] - x[i]
    s = (xq - x[i]) / h
    dy = y[i + 1] - y[i]
    if derivative:
        return hermite_derivative(h, dy, d[i], d[i + 1], s)
    out = y[i] + hermite_increment(h, dy, d[i], d[i + 1], s)
    # Knots are reproduced exactly.
    return np.where(xq == x[i], y[i], np.where(xq == x[i + 1], y[i + 1], out))


class Pchip:
    """Callable monotone cubic through ``(x, y)``."""

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.d = pchip_slopes(self.x, self.y)

    def __call__(self, xq, derivative: bool = False):
        return hermite_eval(self.x, self.y, self.d, xq, derivative=derivative)
