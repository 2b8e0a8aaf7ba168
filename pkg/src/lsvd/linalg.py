"""Dense matrix helpers and an in-house thin SVD.

All matrices are row-major float64 ``numpy`` arrays.  Nothing here calls
LAPACK factorisations: the SVD is a one-sided Jacobi, the spectral norm is a
power iteration and the SPD solver is a hand-rolled Cholesky, so results are
reproducible down to the algorithm level and can be cross-checked against
library routines in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

DEFAULT_SVD_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 60


class ShapeError(ValueError):
    """Raised when operand dimensions do not compose."""


class SpdError(ValueError):
    """Raised when a matrix fails a symmetry / positive-definiteness check."""


class ConvergenceError(RuntimeError):
    """Raised when an iteration does not reach its tolerance.

    Carries the achieved off-diagonal ratio in ``achieved``.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def as_matrix(a, name: str = "a") -> np.ndarray:
    """Validate and convert to a 2-D float64 array with finite entries."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``a = u @ diag(s) @ v.T`` with orthonormal columns.

    ``u`` is (n, r), ``s`` is (r,) non-increasing and non-negative, ``v`` is
    (m, r), where r = min(n, m).
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        """Numerical rank at the 1e-10 relative cut used throughout."""
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.sum(self.s > RANK_TOL * self.s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T

    def truncate(self, r: int) -> "SvdFactorization":
        return SvdFactorization(self.u[:, :r], self.s[:r], self.v[:, :r])


RANK_TOL = 1e-10


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


@numba.njit(cache=True)
def _jacobi_kernel(wt, vt, tol, max_sweeps):  # pragma: no cover - exercised via svd_thin
    """Cyclic Hestenes sweeps over the rows of ``wt`` (columns of the matrix).

    Rotates every row pair whose normalised dot product exceeds ``tol`` until
    a full sweep applies no rotation.  ``vt`` accumulates the rotations (its
    rows end up as the right singular vectors).  Returns (sweeps, worst
    off-diagonal ratio of the last sweep); sweeps = -1 flags non-convergence.
    """
    m, n = wt.shape
    norms2 = np.empty(m)
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += wt[i, j] * wt[i, j]
        norms2[i] = acc
    worst = 0.0
    for sweep in range(max_sweeps):
        rotated = False
        worst = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                denom2 = norms2[p] * norms2[q]
                if denom2 <= 0.0:
                    continue
                apq = 0.0
                for j in range(n):
                    apq += wt[p, j] * wt[q, j]
                ratio = abs(apq) / np.sqrt(denom2)
                if ratio > worst:
                    worst = ratio
                if ratio <= tol:
                    continue
                rotated = True
                app = norms2[p]
                aqq = norms2[q]
                tau = (aqq - app) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for j in range(n):
                    xp = wt[p, j]
                    xq = wt[q, j]
                    wt[p, j] = c * xp - s * xq
                    wt[q, j] = s * xp + c * xq
                for j in range(m):
                    xp = vt[p, j]
                    xq = vt[q, j]
                    vt[p, j] = c * xp - s * xq
                    vt[q, j] = s * xp + c * xq
                # the rotation annihilates the (p, q) cross term exactly
                norms2[p] = app - t * apq
                norms2[q] = aqq + t * apq
        if not rotated:
            return sweep + 1, worst
        # refresh cached norms once per sweep against update drift
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc += wt[i, j] * wt[i, j]
            norms2[i] = acc
    return -1, worst


def _jacobi_sweeps(wt: np.ndarray, tol: float, max_sweeps: int):
    """Orthogonalise the rows of ``wt`` in place; returns (vt, worst ratio)."""
    vt = np.eye(wt.shape[0])
    sweeps, worst = _jacobi_kernel(wt, vt, tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(
            f"one-sided Jacobi did not converge in {max_sweeps} sweeps "
            f"(worst off-diagonal ratio {worst:.3e})",
            achieved=worst,
        )
    return vt, worst


def _complete_orthonormal(u: np.ndarray, n_fill: int) -> np.ndarray:
    """Append n_fill orthonormal columns to ``u`` (deterministic)."""
    n = u.shape[0]
    cols = [u[:, j] for j in range(u.shape[1])]
    for _ in range(n_fill):
        # canonical basis vector least represented by the current columns
        if cols:
            basis = np.stack(cols, axis=1)
            residual2 = 1.0 - np.einsum("ij,ij->i", basis, basis)
        else:
            residual2 = np.ones(n)
        cand = np.zeros(n)
        cand[int(np.argmax(residual2))] = 1.0
        for _ in range(2):  # twice-is-enough Gram-Schmidt
            for col in cols:
                cand -= (col @ cand) * col
        cand /= np.linalg.norm(cand)
        cols.append(cand)
    return np.stack(cols, axis=1)


def svd_thin(
    a, tol_svd: float = DEFAULT_SVD_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS
) -> SvdFactorization:
    """Thin SVD by one-sided Jacobi on the taller orientation.

    Columns of the working matrix are rotated until all pairwise dot products
    fall below ``tol_svd`` relative to the column norms.  Singular values are
    sorted non-increasingly and the sign of each right-singular vector is
    fixed so its largest-magnitude entry is positive.
    """
    a = as_matrix(a)
    n, m = a.shape
    transposed = n < m
    # rows of wt are the columns of the taller orientation (copy: sweeps mutate)
    wt = (a if transposed else a.T).copy()
    rot_t, _ = _jacobi_sweeps(wt, tol_svd, max_sweeps)

    s = np.sqrt(np.einsum("ij,ij->i", wt, wt))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    wt = wt[order]
    rot = rot_t[order].T

    nonzero = s > 0.0
    left = np.zeros_like(wt.T)
    left[:, nonzero] = wt[nonzero].T / s[nonzero]
    n_zero = int(np.sum(~nonzero))
    if n_zero:
        left = _complete_orthonormal(left[:, nonzero], n_zero)

    if transposed:
        u, v = rot, left
    else:
        u, v = left, rot

    # deterministic sign: largest-magnitude entry of each v column positive
    flip = v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])] < 0.0
    v[:, flip] *= -1.0
    u[:, flip] *= -1.0
    return SvdFactorization(np.ascontiguousarray(u), s, np.ascontiguousarray(v))


def spectral_norm(a, tol: float = 1e-10, max_iter: int = 50_000) -> float:
    """Largest singular value via power iteration on ``a.T @ a``."""
    a = as_matrix(a)
    if not np.any(a):
        return 0.0
    rng = np.random.default_rng(0x5EED)
    x = rng.standard_normal(a.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = a.T @ (a @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:  # x landed in the null space; restart
            x = rng.standard_normal(a.shape[1])
            x /= np.linalg.norm(x)
            continue
        lam_new = x @ y
        x = y / nrm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return float(np.sqrt(lam_new))
        lam = lam_new
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", achieved=lam
    )


def cholesky_spd(a, sym_tol: float = 1e-10) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    a = as_matrix(a)
    n_rows, n_cols = a.shape
    if n_rows != n_cols:
        raise ShapeError(f"matrix must be square, got {a.shape}")
    scale = np.max(np.abs(a)) or 1.0
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise SpdError("matrix is not symmetric")
    lower = np.zeros_like(a)
    for j in range(n_rows):
        d = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not np.isfinite(d) or d <= 0.0:
            raise SpdError(f"matrix is not positive definite (pivot {j})")
        lower[j, j] = np.sqrt(d)
        if j + 1 < n_rows:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive definite ``a`` via Cholesky."""
    b = as_vector(b, "b")
    lower = cholesky_spd(a)
    n = lower.shape[0]
    if b.shape[0] != n:
        raise ShapeError(f"b has length {b.shape[0]}, expected {n}")
    y = np.zeros(n)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def save_matrix_csv(path, a) -> None:
    """Dump a matrix as CSV: one row per line, ',' separator, no header."""
    a = as_matrix(a)
    np.savetxt(path, a, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2), "csv matrix")
