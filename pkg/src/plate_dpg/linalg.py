"""Dense Cholesky and sparse symmetric positive definite solves.

Thin wrappers around LAPACK (via scipy.linalg) and SuperLU / conjugate
gradients (via scipy.sparse) that add the contracts the solver relies on:
symmetry checks, loud failure on indefinite matrices with the offending
pivot, a problem-size guard on the direct path, and deterministic results.
"""

import re

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_SIZE_LIMIT = 200_000


class NotPositiveDefiniteError(Exception):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class IterativeSolveError(Exception):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"conjugate gradients failed to converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


def dense_cholesky(A):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises ValueError on an asymmetric input and NotPositiveDefiniteError
    (carrying the 0-based pivot index) when a pivot fails.
    """
    A = np.asarray(A, dtype=float)
    scale = np.abs(A).max()
    if scale > 0.0 and np.abs(A - A.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    try:
        return scipy.linalg.cholesky(A, lower=True)
    except scipy.linalg.LinAlgError as err:
        m = re.search(r"(\d+)-th leading minor", str(err))
        pivot = int(m.group(1)) - 1 if m else -1
        raise NotPositiveDefiniteError(pivot) from err


class SparseSymMatrix:
    """Symmetric sparse matrix stored as its lower triangle in CSR form."""

    def __init__(self, lower):
        lower = sp.csr_matrix(lower)
        if lower.shape[0] != lower.shape[1]:
            raise ValueError("matrix must be square")
        self.lower = lower
        self.n = lower.shape[0]

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Build from COO triplets of the full matrix; duplicates are summed.

        Only entries with row >= col are kept, so symmetric pairs may be
        passed redundantly or not at all.
        """
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        vals = np.asarray(vals, dtype=float)
        keep = rows >= cols
        m = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
        return cls(m.tocsr())

    @classmethod
    def from_full(cls, A):
        return cls(sp.tril(sp.csr_matrix(A), format="csr"))

    def full(self):
        d = sp.diags(self.lower.diagonal())
        return (self.lower + self.lower.T - d).tocsc()

    def diagonal(self):
        return self.lower.diagonal()


def solve_spd(A, b, method="direct", tol=1e-12, maxiter=None):
    """Solve A x = b for symmetric positive definite A.

    `A` is a SparseSymMatrix (or anything scipy.sparse accepts, taken as
    the full matrix).  The direct path factors with SuperLU in symmetric
    mode and diagonal pivoting, so non-positive pivots are detected and
    reported; it refuses systems beyond DIRECT_SIZE_LIMIT unknowns.  The
    cg path runs Jacobi-preconditioned conjugate gradients to relative
    tolerance `tol` and fails loudly when it does not converge.
    """
    b = np.asarray(b, dtype=float)
    full = A.full() if isinstance(A, SparseSymMatrix) else sp.csc_matrix(A)
    n = full.shape[0]
    d = full.diagonal()
    if np.any(d <= 0.0):
        raise NotPositiveDefiniteError(int(np.argmin(d)))
    if method == "direct":
        if n > DIRECT_SIZE_LIMIT:
            raise ValueError(
                f"direct solver limited to {DIRECT_SIZE_LIMIT} unknowns (got {n}); "
                "use method='cg'"
            )
        # symmetric Jacobi equilibration: the diagonal blocks of the normal
        # equations span many orders of magnitude in h and t, the scaled
        # system is the same one in exact arithmetic
        s = 1.0 / np.sqrt(d)
        scaled = sp.diags(s) @ full @ sp.diags(s)
        lu = spla.splu(
            scaled.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        pivots = lu.U.diagonal()
        bad = np.flatnonzero(pivots <= 0.0)
        if bad.size:
            raise NotPositiveDefiniteError(int(bad[0]))
        return s * lu.solve(s * b)
    if method == "cg":
        precond = spla.LinearOperator(full.shape, matvec=lambda v: v / d)
        if maxiter is None:
            maxiter = max(200 * n, 10_000)
        x, info = spla.cg(full, b, rtol=tol, atol=0.0, maxiter=maxiter, M=precond)
        if info != 0:
            res = np.linalg.norm(full @ x - b) / max(np.linalg.norm(b), 1e-300)
            raise IterativeSolveError(info if info > 0 else maxiter, res)
        return x
    raise ValueError(f"unknown method {method!r}")
