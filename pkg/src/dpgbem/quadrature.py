"""Gauss rules on the unit interval and on the reference triangle.

The reference triangle is ``{(xi, eta): xi >= 0, eta >= 0, xi + eta <= 1}``;
triangle weights sum to its area 1/2.
"""
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def gauss_interval(n):
    """n-point Gauss-Legendre rule on [0, 1] (exact to degree 2n - 1)."""
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_gauss(degree):
    """Collapsed (Stroud) Gauss rule on the reference triangle.

    Tensor product of Gauss-Jacobi(1, 0) in the collapsed direction and
    Gauss-Legendre in the other one; exact for polynomials of total degree
    ``degree``.

    Returns
    -------
    points : (n, 2) array of reference coordinates
    weights : (n,) array
    """
    if degree < 0:
        raise ValueError(f"degree must be non-negative, got {degree}")
    n = degree // 2 + 1
    a, wa = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (a + 1.0)          # collapsed coordinate, weight (1 - s)
    ws = wa / 4.0
    t, wt = gauss_interval(n)
    xi = np.repeat(s, n)
    eta = np.outer(1.0 - s, t).ravel()
    pts = np.column_stack([xi, eta])
    w = np.outer(ws, wt).ravel()
    return pts, w


@lru_cache(maxsize=None)
def triangle_radon7():
    """Radon's symmetric 7-point rule, exact to degree 5."""
    r = np.sqrt(15.0)
    a1, a2 = (6.0 - r) / 21.0, (6.0 + r) / 21.0
    w1, w2 = (155.0 - r) / 2400.0, (155.0 + r) / 2400.0
    pts = np.array([
        [1.0 / 3.0, 1.0 / 3.0],
        [a1, a1], [1.0 - 2.0 * a1, a1], [a1, 1.0 - 2.0 * a1],
        [a2, a2], [1.0 - 2.0 * a2, a2], [a2, 1.0 - 2.0 * a2],
    ])
    w = np.array([9.0 / 80.0, w1, w1, w1, w2, w2, w2])
    return pts, w


def triangle_rule(degree):
    """Default triangle rule exact to ``degree``.

    Uses the symmetric 7-point rule up to degree 5, collapsed Gauss above.
    """
    if degree <= 5:
        return triangle_radon7()
    return triangle_gauss(degree)


def graded_breakpoints(center, scale, depth_cap):
    """Breakpoints on [0, 1] refined geometrically toward ``center``.

    Pieces adjacent to ``center`` have length ``scale`` and double outward.
    ``scale`` is clamped to ``2**-depth_cap``; the second return value flags
    that clamping happened.
    """
    clamped = scale < 2.0 ** -depth_cap
    scale = max(scale, 2.0 ** -depth_cap)
    pts = {0.0, 1.0}
    if 0.0 < center < 1.0:
        pts.add(center)
    d = scale
    while d < 1.0:
        for p in (center - d, center + d):
            if 0.0 < p < 1.0:
                pts.add(p)
        d *= 2.0
    return np.array(sorted(pts)), clamped


@lru_cache(maxsize=None)
def graded_interval(left=True, right=True, levels=8, order=6):
    """Composite Gauss rule on [0, 1] graded geometrically toward the chosen ends.

    Suited to integrands like ``d log d`` near an endpoint.  Without grading
    it is a plain ``order``-point rule.
    """
    bp = {0.0, 1.0}
    for k in range(1, levels + 1):
        if left:
            bp.add(2.0 ** -k)
        if right:
            bp.add(1.0 - 2.0 ** -k)
    bp = np.array(sorted(bp))
    x, w = gauss_interval(order)
    h = np.diff(bp)
    return (bp[:-1, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()


@lru_cache(maxsize=None)
def graded_triangle(edges=(False, False, False), vertices=(False, False, False),
                    levels=8, order=6):
    """Collapsed tensor rule graded toward selected edges and vertices.

    Local edge k joins vertices k and k+1 of the reference triangle.  The
    collapsed map ``(u, v) -> (u, (1 - u) v)`` sends edge 0 to ``v = 0``,
    edge 1 to ``v = 1``, edge 2 to ``u = 0`` and vertex 1 to ``u = 1``.
    """
    u0 = edges[2] or vertices[0] or vertices[2]
    u1 = vertices[1]
    v0 = edges[0] or vertices[0]
    v1 = edges[1] or vertices[2]
    u, wu = graded_interval(u0, u1, levels, order)
    v, wv = graded_interval(v0, v1, levels, order)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv) * (1.0 - uu)
    return np.column_stack([uu.ravel(), ((1.0 - uu) * vv).ravel()]), ww.ravel()
