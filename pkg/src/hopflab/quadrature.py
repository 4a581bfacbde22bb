"""Quadrature rules on the reference n-simplex, in barycentric coordinates.

Weights are normalized to sum to one, so a rule integrates the *average* of
a function over a simplex; multiply by the simplex volume for the integral.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


def _symmetric_order2(n: int):
    # n+1 points, exact for quadratics
    b = (n + 2 - np.sqrt(n + 2)) / ((n + 1) * (n + 2))
    a = 1 - n * b
    bary = np.full((n + 1, n + 1), b)
    np.fill_diagonal(bary, a)
    return bary, np.full(n + 1, 1.0 / (n + 1))


def _conical_product(n: int, m: int):
    # Stroud collapsed-coordinate rule, exact to degree 2m - 1
    axes = []
    for i in range(1, n + 1):
        x, w = roots_jacobi(m, n - i, 0)
        axes.append(((x + 1) / 2, w))
    pts, wts = [], []
    for combo in itertools.product(range(m), repeat=n):
        xi = [axes[i][0][j] for i, j in enumerate(combo)]
        w = np.prod([axes[i][1][j] for i, j in enumerate(combo)])
        y, scale = [], 1.0
        for v in xi:
            y.append(scale * v)
            scale *= 1 - v
        pts.append([1 - sum(y)] + y)
        wts.append(w)
    wts = np.array(wts)
    return np.array(pts), wts / wts.sum()


@lru_cache(maxsize=None)
def simplex_rule(n: int, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes ``(Q, n+1)`` and weights ``(Q,)`` exact to ``order``.

    Order <= 2 uses the symmetric (n+1)-point rule; higher orders use a
    conical product of Gauss-Jacobi rules.
    """
    if n == 0:
        return np.ones((1, 1)), np.ones(1)
    if order <= 2:
        bary, w = _symmetric_order2(n)
    else:
        bary, w = _conical_product(n, (order + 2) // 2)
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w
