"""Thresholding procedures.

Every procedure returns a :class:`DecisionSet`.  Ranking statistics are
sorted stably, so ties are broken by original index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .estimation import (HartOptions, TStatVector, estimate_tstats,
                         silverman_bandwidth, univariate_kde)
from .model import (DomainError, Gaussian, MixtureModel, _INV_ROOT2PI,
                    true_lfdr_full, true_lfdr_z)

PROCEDURES = ("HART", "BH", "AZ", "OR_FULL", "OR_Z", "OR_P")


@dataclass(frozen=True)
class DecisionSet:
    reject: np.ndarray
    k: int
    threshold: float
    procedure: str
    alpha: float

    def __post_init__(self):
        if self.k != int(np.count_nonzero(self.reject)):
            raise ValueError("k does not match the rejection vector")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)")


def _reject_first(order, k, m):
    reject = np.zeros(m, dtype=bool)
    reject[order[:k]] = True
    return reject


def step_up(tstats, alpha: float, procedure: str = "HART") -> DecisionSet:
    """Reject the k smallest statistics, k the largest j whose running mean is <= alpha."""
    _check_alpha(alpha)
    t = np.asarray(tstats, dtype=float)
    m = t.size
    if m == 0:
        return DecisionSet(np.zeros(0, dtype=bool), 0, float("nan"), procedure, alpha)
    if np.any((t < 0) | (t > 1)) or np.any(np.isnan(t)):
        raise DomainError("step_up statistics must lie in [0, 1]")
    order = np.argsort(t, kind="stable")
    running_mean = np.cumsum(t[order]) / np.arange(1, m + 1)
    # running means of ascending values are nondecreasing
    k = int(np.count_nonzero(running_mean <= alpha))
    threshold = float(t[order[k - 1]]) if k else float("nan")
    return DecisionSet(_reject_first(order, k, m), k, threshold, procedure, alpha)


def bh(pvalues, alpha: float) -> DecisionSet:
    _check_alpha(alpha)
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    if m == 0:
        return DecisionSet(np.zeros(0, dtype=bool), 0, float("nan"), "BH", alpha)
    order = np.argsort(p, kind="stable")
    below = np.flatnonzero(p[order] <= alpha * np.arange(1, m + 1) / m)
    k = int(below[-1]) + 1 if below.size else 0
    threshold = float(p[order[k - 1]]) if k else float("nan")
    return DecisionSet(_reject_first(order, k, m), k, threshold, "BH", alpha)


def pvalue_from_z(z, sigma0: float = 1.0):
    """Two-sided p-value of z under a N(0, sigma0^2) null."""
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    return (2.0 * ndtr(-np.abs(np.asarray(z, dtype=float)) / sigma0))[()]


def az_lfdr(zvalues, pi_hat: float, sigma0: float, h: float):
    z = np.asarray(zvalues, dtype=float)
    f_hat = univariate_kde(z, z, h)
    f0 = _INV_ROOT2PI * np.exp(-0.5 * (z / sigma0) ** 2) / sigma0
    with np.errstate(divide="ignore", invalid="ignore"):
        lfdr = (1.0 - pi_hat) * f0 / f_hat
    return np.clip(np.where(f_hat > 0, lfdr, 1.0), 0.0, 1.0)


def az(zvalues, alpha: float, pi_hat: float, sigma0: float = 1.0,
       h: float | None = None) -> DecisionSet:
    """Adaptive z-value rule: kernel-estimated Lfdr followed by step_up.

    ``h`` defaults to Silverman's bandwidth for the z-values.
    """
    z = np.asarray(zvalues, dtype=float)
    if z.size < 10:
        raise DomainError(f"az needs at least 10 z-values, got {z.size}")
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    if h is None:
        h = silverman_bandwidth(z)
    return step_up(az_lfdr(z, pi_hat, sigma0, h), alpha, procedure="AZ")


def hart(x, sigma, alpha: float, options: HartOptions | None = None,
         tstats: TStatVector | None = None) -> DecisionSet:
    """Data-driven HART: estimated T statistics thresholded by step_up.

    Hypotheses dropped by the sigma filter are never rejected.  Precomputed
    statistics can be passed as ``tstats``.
    """
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if tstats is None:
        tstats = estimate_tstats(x, sigma, options)
    inner = step_up(tstats.t, alpha)
    reject = np.zeros(x.size, dtype=bool)
    reject[tstats.index[inner.reject]] = True
    return DecisionSet(reject, inner.k, inner.threshold, "HART", alpha)


def _require_gaussian(model):
    if not isinstance(model.noise, Gaussian):
        raise DomainError("oracle procedures are defined for Gaussian noise only")


def oracle_full(x, sigma, model: MixtureModel, alpha: float) -> DecisionSet:
    _require_gaussian(model)
    t = np.atleast_1d(true_lfdr_full(np.asarray(x, float), np.asarray(sigma, float), model))
    return step_up(t, alpha, procedure="OR_FULL")


def oracle_z(zvalues, model: MixtureModel, alpha: float) -> DecisionSet:
    _require_gaussian(model)
    t = np.atleast_1d(true_lfdr_z(np.asarray(zvalues, float), model))
    return step_up(t, alpha, procedure="OR_Z")


def oracle_p(zvalues, model: MixtureModel, alpha: float) -> DecisionSet:
    """Fixed two-sided rule |z| >= t_p with the mFDR-exhausting t_p."""
    from .oracle_calc import pvalue_threshold

    _check_alpha(alpha)
    _require_gaussian(model)
    z = np.asarray(zvalues, dtype=float)
    if model.pi == 0:
        return DecisionSet(np.zeros(z.size, dtype=bool), 0, float("inf"), "OR_P", alpha)
    t_p = pvalue_threshold(model, alpha)
    reject = np.abs(z) >= t_p
    return DecisionSet(reject, int(reject.sum()), float(t_p), "OR_P", alpha)
