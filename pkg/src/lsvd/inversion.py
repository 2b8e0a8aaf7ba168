"""Non-iterative reconstruction formulas built on a thin SVD.

All solvers filter the measurement coefficients u_i.y and decode with the
right singular vectors: pseudoinverse (1/s), Tikhonov (s/(s^2+alpha)),
truncation (1/s up to rank r), the Gaussian-prior MAP scaling, and an
affine MMSE baseline estimated from training pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import RANK_TOL, SvdFactorization, as_matrix, as_vector, cholesky_spd, solve_spd


@dataclass(frozen=True)
class GaussianPrior:
    """Noise covariance B (n x n) and prior factor C_Vn (n x n), both SPD.

    The prior covariance on the signal is V_n C_Vn V_n^T for the operator's
    right singular vectors V_n.
    """

    noise_cov_b: np.ndarray
    prior_cov_cvn: np.ndarray

    def __post_init__(self):
        for name in ("noise_cov_b", "prior_cov_cvn"):
            mat = as_matrix(getattr(self, name), name)
            scale = np.max(np.abs(mat)) or 1.0
            if np.max(np.abs(mat - mat.T)) > 1e-12 * scale:
                raise ValueError(f"{name} is not symmetric within 1e-12")
            cholesky_spd(mat)  # raises SpdError on a non-PD matrix


def mle_reconstruct(svd: SvdFactorization, y) -> np.ndarray:
    """Pseudoinverse solution: rank-deficient directions are zeroed."""
    y = as_vector(y, "y")
    coeff = svd.u.T @ y
    filt = np.zeros_like(svd.s)
    if svd.s.size and svd.s[0] > 0.0:
        keep = svd.s > RANK_TOL * svd.s[0]
        filt[keep] = 1.0 / svd.s[keep]
    return svd.v @ (filt * coeff)


def tikhonov_reconstruct(svd: SvdFactorization, y, alpha: float) -> np.ndarray:
    """Spectral filter s_i / (s_i^2 + alpha) applied to u_i.y.

    alpha = 0 falls back to the pseudoinverse convention: exactly zero
    singular values are zeroed, never divided.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha == 0.0:
        return mle_reconstruct(svd, y)
    y = as_vector(y, "y")
    filt = svd.s / (svd.s**2 + alpha)
    return svd.v @ (filt * (svd.u.T @ y))


def tsvd_reconstruct(svd: SvdFactorization, y, r: int) -> np.ndarray:
    """Truncated-SVD solution using the top r modes."""
    rank = svd.rank
    if not 1 <= r <= rank:
        raise ValueError(f"truncation r={r} outside 1..numerical rank {rank}")
    y = as_vector(y, "y")
    coeff = svd.u[:, :r].T @ y
    return svd.v[:, :r] @ (coeff / svd.s[:r])


def bayes_map_reconstruct(svd: SvdFactorization, prior: GaussianPrior, y) -> np.ndarray:
    """Gaussian MAP estimate under a rank-n prior V_n C_Vn V_n^T.

    Uses the SPD rearrangement of the MAP scaling: with ytil = U^T y, solving
    (B~ + S C S) w = ytil and decoding x = V C S w applies
    [B~ (C S)^{-1} + S]^{-1} without forming any explicit inverse.
    """
    y = as_vector(y, "y")
    n = y.size
    if svd.u.shape[0] != n:
        raise ValueError(f"y has length {n}, operator expects {svd.u.shape[0]}")
    if svd.s.size < n or svd.rank < n:
        raise ValueError(
            "bayes_map_reconstruct requires a full row-rank operator "
            f"(rank {svd.rank} < {n} measurement dimensions)"
        )
    b_til = svd.u.T @ prior.noise_cov_b @ svd.u
    c = prior.prior_cov_cvn
    s = svd.s
    lhs = b_til + (s[:, None] * c) * s[None, :]
    w = solve_spd(lhs, svd.u.T @ y)
    return svd.v @ (c @ (s * w))


def linear_mmse_reconstruct(train_x, train_y, y, ridge: float | None = None) -> np.ndarray:
    """Affine MMSE estimate from empirical means and covariances.

    x_hat = mean_x + C_xy (C_yy + ridge I)^{-1} (y - mean_y).  The default
    ridge is 1e-6 * trace(C_yy) / n.
    """
    train_x = as_matrix(np.atleast_2d(train_x), "train_x")
    train_y = as_matrix(np.atleast_2d(train_y), "train_y")
    y = as_vector(y, "y")
    if train_x.shape[0] != train_y.shape[0]:
        raise ValueError("train_x and train_y need matching sample counts")
    if train_x.shape[0] < 2:
        raise ValueError("need at least 2 training pairs")
    if train_y.shape[1] != y.size:
        raise ValueError(f"y has length {y.size}, training measurements have {train_y.shape[1]}")
    mean_x = train_x.mean(axis=0)
    mean_y = train_y.mean(axis=0)
    dx = train_x - mean_x
    dy = train_y - mean_y
    denom = train_x.shape[0] - 1
    c_yy = (dy.T @ dy) / denom
    c_xy = (dx.T @ dy) / denom
    if ridge is None:
        ridge = 1e-6 * np.trace(c_yy) / c_yy.shape[0]
    lhs = c_yy + ridge * np.eye(c_yy.shape[0])
    try:
        gain = solve_spd(lhs, y - mean_y)
    except Exception as exc:
        raise ValueError(
            f"measurement covariance is singular at ridge={ridge:g}; increase the ridge"
        ) from exc
    return mean_x + c_xy @ gain
