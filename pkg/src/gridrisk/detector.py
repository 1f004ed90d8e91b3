"""Residual-based bad-data detection and attack detection probabilities.

The detector compares the weighted residual statistic ||R^-1/2 r||^2
against a chi-squared threshold chosen for a given false-alarm rate.
Under an additive attack the statistic follows a noncentral chi-squared
law, which gives closed-form detection probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chi2 import central_cdf, detection_delta, noncentral_cdf, threshold


@dataclass(frozen=True)
class BddConfig:
    """Detector configuration: false-alarm rate, degrees of freedom, threshold."""

    alpha: float
    dof: int
    tau: float


def make_bdd_config(alpha: float, dof: int) -> BddConfig:
    return BddConfig(alpha=alpha, dof=dof, tau=threshold(alpha, dof))


@dataclass(frozen=True)
class BddOutcome:
    statistic: float
    tau: float
    bad: bool


def j_test(gains, z, config: BddConfig) -> BddOutcome:
    """Chi-squared bad-data test on the residual of z.

    For reduced gains the masked rows are excluded from the statistic;
    config.dof must match the gains' degrees of freedom.  The verdict is
    bad only when the statistic strictly exceeds the threshold.
    """
    if config.dof != gains.dof:
        raise ValueError(
            f"config dof {config.dof} does not match gains dof {gains.dof}"
        )
    z = np.asarray(z, dtype=float)
    r = gains.S @ z
    keep = np.ones(gains.m, dtype=bool)
    d = getattr(gains, "d", None)
    if d is not None:
        keep = d == 0.0
    statistic = float(np.sum((r[keep] / gains.sigma[keep]) ** 2))
    return BddOutcome(statistic=statistic, tau=config.tau, bad=statistic > config.tau)


def noncentrality(gains, a) -> float:
    """Noncentrality lambda = ||R^-1/2 S a||^2 induced by attack vector a."""
    a = np.asarray(a, dtype=float)
    if a.shape != (gains.m,):
        raise ValueError(f"attack vector must have shape ({gains.m},)")
    return float(np.sum((gains.S @ a / gains.sigma) ** 2))


@dataclass(frozen=True)
class DetectionAnalysis:
    lam: float
    dof: int
    tau: float
    alpha: float
    delta: float


def detection_probability(gains, a, alpha: float) -> DetectionAnalysis:
    """Theoretical detection probability of attack vector a under gains.

    delta = 1 - F(tau; dof, lambda) with F the noncentral chi-squared CDF,
    lambda = ||R^-1/2 S a||^2 and tau the threshold at false-alarm rate
    alpha for the gains' degrees of freedom.  At lambda = 0 this reduces
    to delta = alpha.
    """
    lam = noncentrality(gains, a)
    tau = threshold(alpha, gains.dof)
    return DetectionAnalysis(
        lam=lam,
        dof=gains.dof,
        tau=tau,
        alpha=alpha,
        delta=detection_delta(tau, gains.dof, lam),
    )
