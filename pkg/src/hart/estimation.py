"""Data-driven estimates of the heteroscedasticity-adjusted statistic T.

The estimator of the alternative density at ``(x, sigma)`` is

    f1_hat(x | sigma) = sum_j  w_j K_hs(sigma - sigma_j) / sum_k w_k K_hs(sigma - sigma_k)
                               * phi_{hx * sigma_j}(x - x_j)

with weights ``w_j`` estimating ``P(theta_j = 1 | x_j, sigma_j)``.  The pilot
pass uses unit weights (which estimates the full mixture density), and two
refinement passes reweight by ``1 - T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .model import TINY, DomainError, _lfdr, null_density

log = logging.getLogger(__name__)

_ROOT2PI = np.sqrt(2.0 * np.pi)


class EstimationError(RuntimeError):
    """Density estimate undefined (all effective kernel weights vanish)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InsufficientDataError(DomainError):
    """Too few observations for the requested estimator."""


@dataclass(frozen=True)
class Bandwidths:
    h_x: float
    h_sigma: float
    fallback_x: bool = False
    fallback_sigma: bool = False

    def __post_init__(self):
        for name in ("h_x", "h_sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class TStatVector:
    """Estimated (or oracle) T statistics.

    ``t[k]`` belongs to original hypothesis ``index[k]``; hypotheses removed
    by a sigma filter do not appear.
    """

    t: np.ndarray
    pi_hat: float
    bandwidths: Bandwidths | None
    stage: str
    jackknife: bool
    index: np.ndarray
    null_scale: float = 1.0
    f1: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class EmpiricalNull:
    sigma0: float
    coverage: float


@dataclass(frozen=True)
class HartOptions:
    lam: float = 0.5
    jackknife: bool = True
    null_scale: float = 1.0
    sigma_filter: float | None = None
    # coordinate fed to Silverman's rule for h_x: "z" (x / sigma) or "x"
    bandwidth_coord: str = "z"


# --------------------------------------------------------------------------
# non-null proportion and bandwidths


def storey_pi(pvalues, lam: float = 0.5) -> float:
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        raise DomainError("storey_pi needs at least one p-value")
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda={lam} outside (0, 1)")
    null_frac = np.count_nonzero(p > lam) / (p.size * (1.0 - lam))
    return float(min(1.0, max(0.0, 1.0 - null_frac)))


def _silverman_1d(values):
    """Silverman's rule for one coordinate; returns (h, used_fallback)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n >= 2:
        sd = np.std(v, ddof=1)
        q75, q25 = np.percentile(v, [75, 25])
        spread = min(sd, (q75 - q25) / 1.34)
        if spread <= 0:
            spread = sd
        if spread > 0:
            return 0.9 * spread * n ** -0.2, False
    span = float(np.ptp(v)) if n else 0.0
    return 0.1 * (span + 1.0), True


def silverman_bandwidth(values) -> float:
    return _silverman_1d(values)[0]


def silverman_bandwidths(x, sigma) -> Bandwidths:
    """Per-coordinate Silverman bandwidths for the pairs ``(x, sigma)``."""
    h_x, fb_x = _silverman_1d(x)
    h_s, fb_s = _silverman_1d(sigma)
    if fb_x or fb_s:
        log.warning("degenerate bandwidth subset; fallback used for %s",
                    ", ".join(n for n, f in (("h_x", fb_x), ("h_sigma", fb_s)) if f))
    return Bandwidths(h_x, h_s, fb_x, fb_s)


# --------------------------------------------------------------------------
# kernel density estimates


def weighted_bivariate_kde(eval_x, eval_sigma, x, sigma, weights, h: Bandwidths):
    """Weighted bivariate estimate of the density of x given sigma.

    Raises ``EstimationError`` if the sigma-kernel weights vanish at an
    evaluation point.
    """
    ex = np.atleast_1d(np.asarray(eval_x, dtype=float))
    es = np.atleast_1d(np.asarray(eval_sigma, dtype=float))
    ex, es = np.broadcast_arrays(ex, es)
    num, den = kernels.bivariate_kde_parts(
        np.ascontiguousarray(ex), np.ascontiguousarray(es),
        np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(sigma, dtype=float),
        np.ascontiguousarray(weights, dtype=float), h.h_x, h.h_sigma, False)
    bad = ~(den > 0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise EstimationError("all effective kernel weights are zero",
                              point=(float(ex[k]), float(es[k])))
    out = num / den
    return out if np.ndim(eval_x) or np.ndim(eval_sigma) else float(out[0])


def _self_kde(x, sigma, w, h, jackknife):
    """Estimate at every sample point; points with no effective weight get 0."""
    num, den = kernels.bivariate_kde_parts(x, sigma, x, sigma, w, h.h_x, h.h_sigma,
                                           jackknife)
    empty = ~(den > 0)
    if np.any(empty):
        log.warning("%d points have no kernel support; alternative density set to 0",
                    int(empty.sum()))
    return np.where(empty, 0.0, num / np.where(empty, 1.0, den))


def univariate_kde(z, sample, h: float):
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0 or not h > 0:
        raise DomainError("univariate_kde needs a nonempty sample and h > 0")
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    out = kernels.gaussian_kde(np.ascontiguousarray(zz.ravel()), sample, float(h))
    return out.reshape(zz.shape) if np.ndim(z) else float(out[0])


# --------------------------------------------------------------------------
# T statistics


def _as_arrays(x, sigma):
    x = np.ascontiguousarray(x, dtype=float)
    sigma = np.ascontiguousarray(sigma, dtype=float)
    if x.shape != sigma.shape or x.ndim != 1:
        raise DomainError("x and sigma must be 1-d arrays of equal length")
    if np.any(sigma <= 0):
        raise DomainError("sigma must be positive")
    return x, sigma


def pilot_tstats(x, sigma, pi_hat, h: Bandwidths, null_scale=1.0,
                 jackknife=False) -> TStatVector:
    """Pilot statistics min{(1 - pi) f0 / f_hat, 1} with unit-weight f_hat."""
    x, sigma = _as_arrays(x, sigma)
    if x.size < 2:
        raise InsufficientDataError("pilot_tstats needs at least 2 observations")
    f_star = _self_kde(x, sigma, np.ones_like(x), h, jackknife)
    f0 = np.maximum(null_density(x, sigma, null_scale), TINY)
    t = np.minimum((1.0 - pi_hat) * f0 / np.maximum(f_star, TINY), 1.0)
    return TStatVector(t, float(pi_hat), h, "pilot", bool(jackknife),
                       np.arange(x.size), null_scale)


def refine_tstats(x, sigma, pilot: TStatVector, pi_hat, h: Bandwidths,
                  null_scale=1.0, jackknife=False) -> TStatVector:
    """Two reweighting passes starting from the pilot statistics."""
    x, sigma = _as_arrays(x, sigma)
    if pilot.stage != "pilot":
        raise ValueError(f"expected pilot statistics, got stage={pilot.stage!r}")
    if pilot.t.shape != x.shape:
        raise ValueError("pilot statistics do not match the data")
    index = np.arange(x.size)
    if pi_hat == 0:
        return TStatVector(np.ones(x.size), 0.0, h, "refined", bool(jackknife),
                           index, null_scale, np.zeros(x.size))
    null_part = (1.0 - pi_hat) * null_density(x, sigma, null_scale)
    t = pilot.t
    f1 = None
    for _ in range(2):
        w = 1.0 - t
        if not np.any(w > 0):
            raise EstimationError("all refinement weights are zero")
        f1 = _self_kde(x, sigma, w, h, jackknife)
        t = _lfdr(null_part, null_part + pi_hat * f1)
    return TStatVector(t, float(pi_hat), h, "refined", bool(jackknife), index,
                       null_scale, f1)


def estimate_tstats(x, sigma, options: HartOptions | None = None) -> TStatVector:
    """Full pipeline: Storey proportion, Silverman bandwidths, pilot, refine.

    Bandwidths are chosen on the hypotheses with p-value below the estimated
    non-null proportion. Because the x-kernel width is ``h_x * sigma_j``,
    ``h_x`` is by default computed from the standardized values x / sigma.
    With ``options.sigma_filter`` set, only hypotheses with
    ``sigma < sigma_filter`` are analysed.
    """
    opts = options or HartOptions()
    x, sigma = _as_arrays(x, sigma)
    index = np.arange(x.size)
    if opts.sigma_filter is not None:
        index = index[sigma < opts.sigma_filter]
        x, sigma = x[index], sigma[index]
    if x.size < 10:
        raise InsufficientDataError(f"estimate_tstats needs m >= 10, got {x.size}")
    p = 2.0 * ndtr(-np.abs(x / sigma) / opts.null_scale)
    pi_hat = storey_pi(p, opts.lam)
    if pi_hat == 0:
        # typical when the null scale is overestimated; every T is then 1
        log.warning("estimated non-null proportion is 0 (null_scale=%.4g); "
                    "no hypothesis can be rejected", opts.null_scale)
    subset = p < pi_hat
    if subset.sum() < 2:
        log.warning("bandwidth subset {p < pi_hat} too small (%d); using all data",
                    int(subset.sum()))
        subset = np.ones(x.size, dtype=bool)
    if opts.bandwidth_coord == "z":
        h = silverman_bandwidths(x[subset] / sigma[subset], sigma[subset])
    elif opts.bandwidth_coord == "x":
        h = silverman_bandwidths(x[subset], sigma[subset])
    else:
        raise DomainError(f"unknown bandwidth_coord {opts.bandwidth_coord!r}")
    pilot = pilot_tstats(x, sigma, pi_hat, h, opts.null_scale, opts.jackknife)
    refined = refine_tstats(x, sigma, pilot, pi_hat, h, opts.null_scale, opts.jackknife)
    return TStatVector(refined.t, pi_hat, h, "refined", opts.jackknife, index,
                       opts.null_scale, refined.f1)


# --------------------------------------------------------------------------
# empirical null


def truncated_sd_factor(coverage: float) -> float:
    """Sd of a standard normal truncated to its central ``coverage`` mass."""
    b = ndtri(0.5 + 0.5 * coverage)
    phi_b = np.exp(-0.5 * b * b) / _ROOT2PI
    return float(np.sqrt(1.0 - 2.0 * b * phi_b / (2.0 * ndtr(b) - 1.0)))


def empirical_null(zvalues, coverage: float = 0.99) -> EmpiricalNull:
    """Null scale from the central ``coverage`` fraction of the z-values."""
    z = np.asarray(zvalues, dtype=float)
    if z.size < 100:
        raise InsufficientDataError(f"empirical_null needs n >= 100, got {z.size}")
    if not 0.0 < coverage < 1.0:
        raise DomainError("coverage must lie in (0, 1)")
    tail = 0.5 * (1.0 - coverage)
    lo, hi = np.quantile(z, [tail, 1.0 - tail])
    core = z[(z >= lo) & (z <= hi)]
    sigma0 = float(np.std(core, ddof=1) / truncated_sd_factor(coverage))
    if not sigma0 > 0:
        raise DomainError("z-values have no spread")
    return EmpiricalNull(sigma0, coverage)
