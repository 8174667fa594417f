"""Generative two-group models and their exact densities.

Data are pairs ``(x_i, sigma_i)`` with ``x_i | mu_i, sigma_i ~ N(mu_i, sigma_i^2)``,
``mu_i ~ (1 - pi) delta_0 + pi g_mu`` and ``sigma_i ~ g_sigma``.  Everything in
this module assumes Gaussian noise; heavy-tailed noise only exists in the
simulator.

All density functions broadcast over numpy arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

log = logging.getLogger(__name__)

TINY = 1e-300
_INV_ROOT2PI = 1.0 / np.sqrt(2.0 * np.pi)
# |standardized residual| beyond this contributes < phi(12) ~ 5e-32
_WINDOW = 12.0


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


def _phi(u):
    return _INV_ROOT2PI * np.exp(-0.5 * np.square(u))


# --------------------------------------------------------------------------
# effect laws


@dataclass(frozen=True)
class PointMass:
    mu: float

    def components(self):
        return ((1.0, float(self.mu), 0.0),)


@dataclass(frozen=True)
class TwoPointMass:
    mu1: float
    w1: float
    mu2: float
    w2: float

    def __post_init__(self):
        if self.w1 <= 0 or self.w2 <= 0 or abs(self.w1 + self.w2 - 1.0) > 1e-12:
            raise DomainError("two-point weights must be positive and sum to 1")

    def components(self):
        return ((self.w1, float(self.mu1), 0.0), (self.w2, float(self.mu2), 0.0))


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of normals given as ``(weight, mean, sd)`` triples."""

    parts: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        parts = tuple(tuple(float(v) for v in p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise DomainError("empty Gaussian mixture")
        weights = [p[0] for p in parts]
        if min(weights) <= 0 or abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError("mixture weights must be positive and sum to 1")
        if min(p[2] for p in parts) < 0:
            raise DomainError("mixture sds must be nonnegative")

    def components(self):
        return self.parts


@dataclass(frozen=True)
class Zero:
    """Degenerate effect law: every hypothesis is null."""

    def components(self):
        return ()


EffectLaw = PointMass | TwoPointMass | GaussianMixture | Zero


def sample_effects(effect: EffectLaw, rng: np.random.Generator, n: int) -> np.ndarray:
    comps = effect.components()
    if not comps or n == 0:
        return np.zeros(n)
    weights = np.array([c[0] for c in comps])
    means = np.array([c[1] for c in comps])
    sds = np.array([c[2] for c in comps])
    k = rng.choice(len(comps), size=n, p=weights / weights.sum())
    return means[k] + sds[k] * rng.standard_normal(n)


# --------------------------------------------------------------------------
# scale laws


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo < 0 or not self.hi > self.lo:
            raise DomainError(f"invalid uniform scale law [{self.lo}, {self.hi}]")

    def sample(self, rng, n):
        # (lo, hi] so that sigma == 0 cannot be drawn
        return self.hi - (self.hi - self.lo) * rng.random(n)


@dataclass(frozen=True)
class TwoValues:
    sigma_a: float
    sigma_b: float
    prob_a: float = 0.5

    def __post_init__(self):
        if self.sigma_a <= 0 or self.sigma_b <= 0:
            raise DomainError("both scale values must be positive")
        if not 0.0 <= self.prob_a <= 1.0:
            raise DomainError("prob_a must lie in [0, 1]")

    def sample(self, rng, n):
        return np.where(rng.random(n) < self.prob_a, self.sigma_a, self.sigma_b)


@dataclass(frozen=True)
class Fixed:
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError("fixed scale must be positive")

    def sample(self, rng, n):
        return np.full(n, float(self.sigma))


ScaleLaw = Uniform | TwoValues | Fixed


@lru_cache(maxsize=8)
def _composite_gl(lo: float, hi: float, panels: int, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wts = (half[:, None] * weights[None, :]).ravel()
    return pts, wts


def expect_over_scale(scale: ScaleLaw, fn, panels: int = 128, order: int = 16):
    """Integrate ``fn(sigma)`` against the scale law.

    ``fn`` receives sigma with a trailing axis appended and must broadcast;
    the integral over that axis is returned. Uniform laws use composite
    Gauss-Legendre; discrete laws are summed exactly.
    """
    if isinstance(scale, Fixed):
        return fn(np.array([scale.sigma]))[..., 0]
    if isinstance(scale, TwoValues):
        vals = fn(np.array([scale.sigma_a, scale.sigma_b]))
        return scale.prob_a * vals[..., 0] + (1.0 - scale.prob_a) * vals[..., 1]
    if isinstance(scale, Uniform):
        pts, wts = _composite_gl(float(scale.lo), float(scale.hi), panels, order)
        # sigma == 0 is never a node (Gauss-Legendre nodes are interior)
        return fn(pts) @ wts / (scale.hi - scale.lo)
    raise DomainError(f"unsupported scale law {scale!r}")


# --------------------------------------------------------------------------
# noise and the full model


@dataclass(frozen=True)
class Gaussian:
    pass


@dataclass(frozen=True)
class StudentT:
    df: float

    def __post_init__(self):
        if not self.df > 2:
            raise DomainError("Student t noise needs df > 2")


@dataclass(frozen=True)
class MixtureModel:
    pi: float
    effect: EffectLaw
    scale: ScaleLaw
    noise: Gaussian | StudentT = field(default_factory=Gaussian)
    null_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise DomainError(f"pi={self.pi} outside [0, 1]")
        if not self.null_scale > 0:
            raise DomainError("null_scale must be positive")
        if self.pi > 0 and isinstance(self.effect, Zero):
            raise DomainError("a Zero effect law requires pi == 0")


@dataclass(frozen=True)
class TruthVector:
    theta: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if not (len(self.theta) == len(self.mu) == len(self.sigma)):
            raise ValueError("truth arrays must have equal length")


@dataclass(frozen=True)
class TestItem:
    """One hypothesis: summary statistic ``x`` and its standard deviation."""

    __test__ = False  # not a pytest class

    x: float
    sigma: float
    null_scale: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    @property
    def z(self) -> float:
        return self.x / self.sigma

    @property
    def p(self) -> float:
        return float(2.0 * ndtr(-abs(self.z) / self.null_scale))


# --------------------------------------------------------------------------
# densities on the (x, sigma) scale


def _check_positive(name, value):
    if np.any(np.asarray(value) <= 0):
        raise DomainError(f"{name} must be positive")


def null_density(x, sigma, null_scale=1.0):
    _check_positive("sigma", sigma)
    _check_positive("null_scale", null_scale)
    scale = np.asarray(sigma, dtype=float) * null_scale
    return _phi(np.asarray(x, dtype=float) / scale) / scale


def alt_density(x, sigma, effect: EffectLaw):
    """Density of ``x`` given sigma under the alternative.

    Each ``(w, m, s)`` component contributes ``w * N(m, sigma^2 + s^2)``.
    """
    _check_positive("sigma", sigma)
    comps = effect.components()
    if not comps:
        raise DomainError("alternative density undefined for the Zero effect law")
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = 0.0
    for w, m, s in comps:
        scale = np.sqrt(sigma * sigma + s * s)
        out = out + w * _phi((x - m) / scale) / scale
    return out


def mixture_density(x, sigma, model: MixtureModel):
    f0 = null_density(x, sigma, model.null_scale)
    if model.pi == 0:
        return f0
    return (1.0 - model.pi) * f0 + model.pi * alt_density(x, sigma, model.effect)


def _lfdr(null_part, mix):
    """Ratio null_part / mix with the underflow convention (T = 1)."""
    mix = np.asarray(mix, dtype=float)
    under = mix < TINY
    if np.any(under):
        log.debug("%d mixture densities underflowed; T set to 1", int(np.sum(under)))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(under, 1.0, null_part / np.where(under, 1.0, mix))
    return np.clip(t, 0.0, 1.0)


def true_lfdr_full(x, sigma, model: MixtureModel):
    """Posterior null probability given the pair (x, sigma) under ``model``."""
    f0 = null_density(x, sigma, model.null_scale)
    if model.pi == 0:
        return np.ones(np.broadcast(np.asarray(x), np.asarray(sigma)).shape)[()]
    null_part = (1.0 - model.pi) * f0
    mix = null_part + model.pi * alt_density(x, sigma, model.effect)
    return _lfdr(null_part, mix)[()]


# --------------------------------------------------------------------------
# densities on the standardized z scale


def _point_mass_z_density(z, m, scale: Uniform, order=32, panels=4):
    """Integral of phi(z - m/sigma) over sigma ~ U[lo, hi].

    Substituting u = 1/sigma turns the integrand into phi(z - m u) / u^2,
    whose mass sits within 12/|m| of u = z/m; only that window is
    integrated so arbitrarily small lo (large z) is handled exactly.
    """
    u_lo = 1.0 / scale.hi
    u_hi = np.inf if scale.lo == 0 else 1.0 / scale.lo
    z = np.atleast_1d(np.asarray(z, dtype=float))
    a = (z - _WINDOW * np.sign(m)) / m
    b = (z + _WINDOW * np.sign(m)) / m
    a = np.clip(a, u_lo, u_hi)
    b = np.clip(b, u_lo, u_hi)
    nodes, weights = _composite_gl(-1.0, 1.0, panels, order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    u = mid[:, None] + half[:, None] * nodes[None, :]
    vals = _phi(z[:, None] - m * u) / (u * u)
    return (vals @ weights) * half / (scale.hi - scale.lo)


def alt_z_density(z, model: MixtureModel):
    """Non-null density of z = x / sigma, integrated over the scale law."""
    comps = model.effect.components()
    if not comps:
        raise DomainError("alternative density undefined for the Zero effect law")
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    for w, m, s in comps:
        if s == 0 and m == 0:
            out = out + w * _phi(z)
        elif s == 0 and isinstance(model.scale, Uniform):
            out = out + w * _point_mass_z_density(z.ravel(), m, model.scale).reshape(z.shape)
        else:

            def integrand(sig, m=m, s=s):
                zz = z[..., None]
                r = np.sqrt(1.0 + (s / sig) ** 2)
                return _phi((zz - m / sig) / r) / r

            out = out + w * expect_over_scale(model.scale, integrand)
    return out


def marginal_z_density(z, model: MixtureModel):
    z = np.asarray(z, dtype=float)
    s0 = model.null_scale
    f0 = _phi(z / s0) / s0
    if model.pi == 0:
        return f0[()]
    return ((1.0 - model.pi) * f0 + model.pi * alt_z_density(z, model))[()]


def true_lfdr_z(z, model: MixtureModel):
    """Local fdr of the standardized statistic alone."""
    z = np.asarray(z, dtype=float)
    if model.pi == 0:
        return np.ones(z.shape)[()]
    s0 = model.null_scale
    null_part = (1.0 - model.pi) * _phi(z / s0) / s0
    mix = null_part + model.pi * alt_z_density(z, model)
    return _lfdr(null_part, mix)[()]


def alt_z_sf(t, model: MixtureModel, lower=False):
    """P(Z > t) under the alternative (``lower=True``: P(Z < t))."""
    comps = model.effect.components()
    if not comps:
        raise DomainError("alternative undefined for the Zero effect law")
    t = np.asarray(t, dtype=float)
    sign = -1.0 if lower else 1.0
    out = np.zeros(t.shape)
    for w, m, s in comps:

        def integrand(sig, m=m, s=s):
            tt = t[..., None]
            return ndtr(sign * (m - tt * sig) / np.sqrt(sig * sig + s * s))

        out = out + w * expect_over_scale(model.scale, integrand)
    return out[()]
