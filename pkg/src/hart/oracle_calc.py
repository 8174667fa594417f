"""Oracle thresholds and average powers for the two-point toy model.

Model: ``mu_i ~ (1 - pi) delta_0 + pi delta_{mu_a}`` and
``sigma_i ~ U[sigma_lo, sigma_hi]``.  Three mFDR-exhausting rules are
compared: a two-sided p-value cut ``|z| > t_p``, a one-sided z cut
``z > t_z`` and the full-data cut ``P(null | x, sigma) < lambda*``.
All sigma integrals use 256-point Gauss-Legendre.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .model import DomainError, MixtureModel, alt_z_sf

T_BRACKET = (0.0, 20.0)
LAMBDA_BRACKET = (1e-9, 1.0 - 1e-9)
XTOL = 1e-9
_GL_ORDER = 256


def _sf(t):
    return ndtr(-np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ToyModel:
    pi: float = 0.1
    mu_a: float = 2.0
    sigma_lo: float = 0.5
    sigma_hi: float = 4.0
    alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise DomainError(f"pi={self.pi} must lie in (0, 1)")
        if self.mu_a == 0 or not np.isfinite(self.mu_a):
            raise DomainError("mu_a must be finite and nonzero")
        if not 0.0 < self.sigma_lo < self.sigma_hi:
            raise DomainError("need 0 < sigma_lo < sigma_hi")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha={self.alpha} must lie in (0, 1)")

    def nodes(self):
        return _gl_nodes(self.sigma_lo, self.sigma_hi)


@dataclass(frozen=True)
class ToyOracleReport:
    t_p: float
    p_cut: float
    t_z: float
    lfdr_cut_z: float
    lambda_star: float
    ap_p: float
    ap_z: float
    ap_full: float


def _gl_nodes(lo, hi):
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    half = 0.5 * (hi - lo)
    # weights already normalized by the uniform density 1 / (hi - lo)
    return 0.5 * (hi + lo) + half * x, 0.5 * w


def _bisect_decreasing(fn, target, lo, hi, xtol=XTOL):
    """Root of the decreasing function ``fn(t) = target`` on ``[lo, hi]``.

    Returns the smallest t with ``fn(t) <= target`` to within ``xtol``.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo <= target:
        return lo
    if f_hi > target:
        raise DomainError(f"functional never reaches {target} on [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if not f_hi <= f_mid <= f_lo:
            raise ArithmeticError(f"functional not monotone near t={mid}")
        if f_mid > target:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return hi


def _ratio(null_part, alt_part):
    den = null_part + alt_part
    return null_part / den if den > 0 else 0.0


# --------------------------------------------------------------------------
# mFDR functionals


def mfdr_p(t, model: ToyModel):
    s, w = model.nodes()
    mu = abs(model.mu_a)
    null_part = 2.0 * (1.0 - model.pi) * _sf(t)
    alt_part = model.pi * np.dot(w, _sf(t + mu / s) + _sf(t - mu / s))
    return _ratio(null_part, alt_part)


def mfdr_z(t, model: ToyModel):
    s, w = model.nodes()
    null_part = (1.0 - model.pi) * _sf(t)
    alt_part = model.pi * np.dot(w, _sf(t - abs(model.mu_a) / s))
    return _ratio(null_part, alt_part)


def full_rule_z_threshold(lam, sigma, model: ToyModel):
    """z cutoff at scale sigma of the rule P(null | x, sigma) < lam."""
    mu = abs(model.mu_a)
    log_odds = np.log(lam * model.pi / ((1.0 - lam) * (1.0 - model.pi)))
    sigma = np.asarray(sigma, dtype=float)
    return (mu * mu - 2.0 * sigma * sigma * log_odds) / (2.0 * mu * sigma)


def mfdr_full(lam, model: ToyModel):
    s, w = model.nodes()
    t = full_rule_z_threshold(lam, s, model)
    null_part = (1.0 - model.pi) * np.dot(w, _sf(t))
    alt_part = model.pi * np.dot(w, _sf(t - abs(model.mu_a) / s))
    return _ratio(null_part, alt_part)


# --------------------------------------------------------------------------
# thresholds and powers


def toy_threshold_p(model: ToyModel) -> float:
    return _bisect_decreasing(lambda t: mfdr_p(t, model), model.alpha, *T_BRACKET)


def toy_threshold_z(model: ToyModel) -> float:
    return _bisect_decreasing(lambda t: mfdr_z(t, model), model.alpha, *T_BRACKET)


def toy_lambda_star(model: ToyModel) -> float:
    """Largest lambda whose full-data rule keeps the mFDR at or below alpha."""
    lo, hi = LAMBDA_BRACKET
    f_lo, f_hi = mfdr_full(lo, model), mfdr_full(hi, model)
    if f_hi <= model.alpha:
        return hi
    if f_lo > model.alpha:
        raise DomainError("no lambda in the bracket meets the mFDR bound")
    while hi - lo > XTOL:
        mid = 0.5 * (lo + hi)
        f_mid = mfdr_full(mid, model)
        if not f_lo <= f_mid <= f_hi:
            raise ArithmeticError(f"mFDR not monotone near lambda={mid}")
        if f_mid <= model.alpha:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo


def lfdr_at_z(t, model: ToyModel):
    s, w = model.nodes()
    phi = lambda u: np.exp(-0.5 * np.square(u))  # noqa: E731 (constant cancels)
    null_part = (1.0 - model.pi) * phi(t)
    alt_part = model.pi * np.dot(w, phi(t - abs(model.mu_a) / s))
    return _ratio(null_part, alt_part)


def toy_average_powers(model: ToyModel, t_p=None, t_z=None, lambda_star=None):
    """Average powers (p-value rule, z rule, full-data rule)."""
    t_p = toy_threshold_p(model) if t_p is None else t_p
    t_z = toy_threshold_z(model) if t_z is None else t_z
    lam = toy_lambda_star(model) if lambda_star is None else lambda_star
    s, w = model.nodes()
    mu = abs(model.mu_a)
    ap_p = np.dot(w, _sf(t_p + mu / s) + _sf(t_p - mu / s))
    ap_z = np.dot(w, _sf(t_z - mu / s))
    ap_full = np.dot(w, _sf(full_rule_z_threshold(lam, s, model) - mu / s))
    return float(ap_p), float(ap_z), float(ap_full)


def toy_report(model: ToyModel) -> ToyOracleReport:
    t_p = toy_threshold_p(model)
    t_z = toy_threshold_z(model)
    lam = toy_lambda_star(model)
    ap = toy_average_powers(model, t_p, t_z, lam)
    return ToyOracleReport(
        t_p=t_p, p_cut=float(2.0 * _sf(t_p)), t_z=t_z,
        lfdr_cut_z=float(lfdr_at_z(t_z, model)), lambda_star=lam,
        ap_p=ap[0], ap_z=ap[1], ap_full=ap[2])


# --------------------------------------------------------------------------
# general models (used by the p-value oracle procedure)


def pvalue_threshold(model: MixtureModel, alpha: float) -> float:
    """Two-sided |z| cutoff exhausting the mFDR for an arbitrary mixture model."""
    s0 = model.null_scale

    def mfdr(t):
        null_part = 2.0 * (1.0 - model.pi) * _sf(t / s0)
        alt_part = model.pi * (alt_z_sf(t, model) + alt_z_sf(-t, model, lower=True))
        return _ratio(float(null_part), float(alt_part))

    return _bisect_decreasing(mfdr, alpha, *T_BRACKET)
