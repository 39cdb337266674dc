"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules are conical products of Gauss-Legendre and Gauss-Jacobi
(weight 1-y) rules pushed through the Duffy map, so all weights are
positive and the declared exactness degree is certified rather than
transcribed from a table.  Edge rules are plain Gauss-Legendre on [0, 1].
"""

import numpy as np
from scipy.special import roots_jacobi

# reference triangle: vertices (0,0), (1,0), (0,1)
MAX_TRIANGLE_DEGREE = 20
MAX_EDGE_DEGREE = 21


class QuadRule:
    """Points, weights, and the polynomial degree integrated exactly."""

    def __init__(self, points, weights, degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.degree = degree
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")

    def __len__(self):
        return self.weights.shape[0]


def triangle_rule(degree):
    """Rule on the reference triangle exact for total degree <= `degree`.

    Weights sum to the reference area 1/2.  The conical product with n
    one-dimensional points per direction is exact through degree 2n - 1,
    which is what the returned rule declares.
    """
    if not 0 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"triangle rules cover degrees 0..{MAX_TRIANGLE_DEGREE}")
    n = max((degree + 2) // 2, 1)  # smallest n with 2n-1 >= degree
    xg, wg = np.polynomial.legendre.leggauss(n)
    xi = 0.5 * (xg + 1.0)
    wxi = 0.5 * wg
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta = 0.5 * (xj + 1.0)
    weta = 0.25 * wj
    pts = np.empty((n * n, 2))
    wts = np.empty(n * n)
    k = 0
    for j in range(n):
        for i in range(n):
            pts[k, 0] = xi[i] * (1.0 - eta[j])
            pts[k, 1] = eta[j]
            wts[k] = wxi[i] * weta[j]
            k += 1
    return QuadRule(pts, wts, 2 * n - 1)


def edge_rule(degree):
    """Gauss rule on [0, 1] exact for degree <= `degree`; weights sum to 1."""
    if not 0 <= degree <= MAX_EDGE_DEGREE:
        raise ValueError(f"edge rules cover degrees 0..{MAX_EDGE_DEGREE}")
    n = max((degree + 2) // 2, 1)
    xg, wg = np.polynomial.legendre.leggauss(n)
    return QuadRule(0.5 * (xg + 1.0), 0.5 * wg, 2 * n - 1)


def map_to_triangle(rule, coords):
    """Push a reference-triangle rule to the physical triangle `coords`.

    Returns (points (nq, 2), weights (nq,)); weights sum to the triangle area.
    """
    coords = np.asarray(coords, dtype=float)
    d1 = coords[1] - coords[0]
    d2 = coords[2] - coords[0]
    jac = d1[0] * d2[1] - d1[1] * d2[0]
    if jac <= 0.0:
        raise ValueError("triangle must be CCW and non-degenerate")
    pts = coords[0] + np.outer(rule.points[:, 0], d1) + np.outer(rule.points[:, 1], d2)
    return pts, rule.weights * jac


def map_to_edge(rule, p0, p1):
    """Push an interval rule to the segment p0-p1; weights sum to its length."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    pts = p0 + np.outer(rule.points, p1 - p0)
    return pts, rule.weights * np.hypot(*(p1 - p0))
