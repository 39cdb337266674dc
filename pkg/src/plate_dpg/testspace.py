"""Broken polynomial test space on a single triangle.

Scalar shape functions are Bernstein polynomials of the barycentric
coordinates of the physical triangle.  A test function is a 4-tuple
(z, Theta, tau) with scalar z, symmetric 2x2 tensor Theta stored as
(11, 12, 22), and vector tau; each component is spanned by the same
scalar basis, giving 6 * n_scalar local degrees of freedom.  For the
degenerate thickness t = 0 the tau block is dropped from the layout.
"""

import math

import numpy as np

MIN_DEGREE, MAX_DEGREE = 2, 5


def scalar_basis_size(degree):
    return (degree + 1) * (degree + 2) // 2


def _multi_indices(degree):
    out = []
    for i in range(degree, -1, -1):
        for j in range(degree - i, -1, -1):
            out.append((i, j, degree - i - j))
    return out


def barycentric(coords):
    """Affine barycentric map of a triangle: returns (to_lambda, grad_lambda).

    to_lambda(pts) maps (nq, 2) points to (nq, 3) barycentric coordinates;
    grad_lambda is the constant (3, 2) array of their gradients.
    """
    coords = np.asarray(coords, dtype=float)
    A = np.vstack([coords.T, np.ones(3)])
    Ainv = np.linalg.inv(A)
    grad = Ainv[:, :2].copy()

    def to_lambda(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ Ainv[:, :2].T + Ainv[:, 2]

    return to_lambda, grad


def eval_scalar_basis(coords, pts, degree=3):
    """Bernstein basis values, gradients, and Hessians at points.

    Returns (val (nq, nb), grad (nq, nb, 2), hess (nq, nb, 3)) with the
    Hessian stored as (xx, xy, yy).
    """
    if not MIN_DEGREE <= degree <= MAX_DEGREE:
        raise ValueError(f"test-space degree must be in [{MIN_DEGREE}, {MAX_DEGREE}]")
    to_lambda, glam = barycentric(coords)
    lam = to_lambda(pts)
    nq = lam.shape[0]
    nb = scalar_basis_size(degree)
    # lam powers, pw[m][a] = lam[:, m] ** a
    pw = [[np.ones(nq)] for _ in range(3)]
    for m in range(3):
        for _ in range(degree):
            pw[m].append(pw[m][-1] * lam[:, m])

    val = np.empty((nq, nb))
    grad = np.zeros((nq, nb, 2))
    hess = np.zeros((nq, nb, 3))
    for b, e in enumerate(_multi_indices(degree)):
        cmb = math.factorial(degree) // (
            math.factorial(e[0]) * math.factorial(e[1]) * math.factorial(e[2])
        )
        val[:, b] = cmb * pw[0][e[0]] * pw[1][e[1]] * pw[2][e[2]]
        for m in range(3):
            if e[m] == 0:
                continue
            em = list(e)
            em[m] -= 1
            mono = pw[0][em[0]] * pw[1][em[1]] * pw[2][em[2]]
            grad[:, b, 0] += cmb * e[m] * mono * glam[m, 0]
            grad[:, b, 1] += cmb * e[m] * mono * glam[m, 1]
            for n in range(3):
                cnt = em[n]
                if cnt == 0:
                    continue
                emn = list(em)
                emn[n] -= 1
                mono2 = pw[0][emn[0]] * pw[1][emn[1]] * pw[2][emn[2]]
                w = cmb * e[m] * cnt * mono2
                hess[:, b, 0] += w * glam[m, 0] * glam[n, 0]
                hess[:, b, 1] += w * glam[m, 0] * glam[n, 1]
                hess[:, b, 2] += w * glam[m, 1] * glam[n, 1]
    return val, grad, hess


class BrokenTestBasis:
    """Degree-of-freedom layout of the broken test space on one element.

    Blocks are ordered (z, Theta11, Theta12, Theta22, tau1, tau2), each of
    size n_scalar; at t = 0 the two tau blocks are absent.
    """

    def __init__(self, degree=3):
        if not MIN_DEGREE <= degree <= MAX_DEGREE:
            raise ValueError(f"test-space degree must be in [{MIN_DEGREE}, {MAX_DEGREE}]")
        self.degree = degree
        self.n_scalar = scalar_basis_size(degree)

    def n_components(self, t):
        return 6 if t > 0.0 else 4

    def n_test(self, t):
        return self.n_components(t) * self.n_scalar

    def block(self, comp):
        """Slice of component `comp` in (z, th11, th12, th22, tau1, tau2)."""
        ns = self.n_scalar
        return slice(comp * ns, (comp + 1) * ns)

    def tables(self, coords, pts):
        """Scalar basis tables at `pts` for the element with `coords`."""
        return eval_scalar_basis(coords, pts, self.degree)
