"""Weighted least-squares state estimation and its sensitivity matrices.

Provides the gain matrix K = (H^T R^-1 H)^-1 H^T R^-1, the hat matrix
T = H K, and the residual sensitivity S = I - T, both for the full
measurement set and for a reduced set where availability-attacked rows
have been masked to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import GridModel, UnobservableError

# A reduced measurement set is declared unobservable when the smallest
# Cholesky pivot of the normal matrix falls below this fraction of the
# largest pivot.
PIVOT_RTOL = 1e-10


def _normal_factor(h: np.ndarray, r_inv_diag: np.ndarray):
    """Cholesky factor of H^T R^-1 H, with an explicit pivot-ratio check.

    Returns the lower-triangular factor; raises UnobservableError when the
    normal matrix is singular or numerically rank-deficient.
    """
    g = h.T @ (r_inv_diag[:, None] * h)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise UnobservableError(
            "normal matrix is not positive definite; measurement set "
            "cannot determine the state"
        ) from exc
    pivots = np.diag(chol) ** 2
    if pivots.min() < PIVOT_RTOL * pivots.max():
        raise UnobservableError(
            f"normal-matrix pivot ratio {pivots.min() / pivots.max():.3e} "
            f"below {PIVOT_RTOL:.0e}; measurement set is numerically unobservable"
        )
    return chol


@dataclass(frozen=True)
class EstimatorGains:
    """Gain, hat and residual-sensitivity matrices for the full model."""

    K: np.ndarray
    T: np.ndarray
    S: np.ndarray
    dof: int
    sigma: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        for arr in (self.K, self.T, self.S, self.sigma):
            arr.setflags(write=False)


@dataclass(frozen=True)
class ReducedGains:
    """Gains for a model whose availability-attacked rows are zeroed.

    d is the 0/1 mask of removed rows; H_d = (I - diag(d)) H keeps the
    original row count so measurement indices stay aligned.
    """

    d: np.ndarray
    k_d: int
    H_d: np.ndarray
    K: np.ndarray
    T: np.ndarray
    S: np.ndarray
    dof: int
    sigma: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        for arr in (self.d, self.H_d, self.K, self.T, self.S, self.sigma):
            arr.setflags(write=False)


def _gain_matrices(h: np.ndarray, sigma: np.ndarray):
    r_inv = 1.0 / sigma**2
    chol = _normal_factor(h, r_inv)
    # K = G^-1 H^T R^-1 via two triangular solves; no explicit inverse.
    rhs = h.T * r_inv[None, :]
    k = scipy.linalg.cho_solve((chol, True), rhs)
    t = h @ k
    s = np.eye(h.shape[0]) - t
    return k, t, s


def compute_gains(model: GridModel) -> EstimatorGains:
    k, t, s = _gain_matrices(model.H, model.sigma)
    return EstimatorGains(
        K=k, T=t, S=s, dof=model.m - model.n, sigma=model.sigma.copy(),
        m=model.m, n=model.n,
    )


def compute_reduced_gains(model: GridModel, d) -> ReducedGains:
    """Gains after masking the rows flagged in d (0/1 vector of length m)."""
    d = np.asarray(d, dtype=float)
    if d.shape != (model.m,):
        raise ValueError(f"d must have shape ({model.m},)")
    if not np.all((d == 0.0) | (d == 1.0)):
        raise ValueError("d must be a 0/1 mask")
    k_d = int(d.sum())
    h_d = (1.0 - d)[:, None] * model.H
    k, t, s = _gain_matrices(h_d, model.sigma)
    return ReducedGains(
        d=d, k_d=k_d, H_d=h_d, K=k, T=t, S=s,
        dof=model.m - model.n - k_d, sigma=model.sigma.copy(),
        m=model.m, n=model.n,
    )


def solve_wls(gains, z) -> np.ndarray:
    """Weighted least-squares state estimate x_hat = K z."""
    z = np.asarray(z, dtype=float)
    if z.shape != (gains.m,):
        raise ValueError(f"z must have shape ({gains.m},)")
    return gains.K @ z


def residual(gains, z) -> np.ndarray:
    """Measurement residual r = z - H x_hat = S z."""
    z = np.asarray(z, dtype=float)
    if z.shape != (gains.m,):
        raise ValueError(f"z must have shape ({gains.m},)")
    return gains.S @ z
