"""Seeded simulation harness.

Each replication draws from its own generator, derived from
``(seed, rep_index, stream)``, so results do not depend on the order or
concurrency in which replications run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky_banded
from scipy.signal import lfilter

from .estimation import HartOptions, empirical_null, estimate_tstats, storey_pi
from .model import (Gaussian, MixtureModel, StudentT, TruthVector, TwoValues,
                    sample_effects)
from .procedures import (DecisionSet, az, bh, hart, oracle_full, oracle_p,
                         oracle_z, pvalue_from_z)

log = logging.getLogger(__name__)

PROCEDURE_NAMES = ("hart", "bh", "az", "or-full", "or-z", "or-p")
ORACLES = ("or-full", "or-z", "or-p")
DEPENDENCE = ("independent", "banded", "ar1")

FULL_BLOCK = 4000
AR1_RHO = 0.5
BANDED_LAGS = (0.5, 0.4)

_STREAM_THETA, _STREAM_MU, _STREAM_SIGMA, _STREAM_NOISE = range(4)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    model: MixtureModel
    m: int = 5000
    alpha: float = 0.1
    reps: int = 20
    seed: int = 0
    dependence: str = "independent"
    replicates_per_unit: int = 1
    sigma_known: bool = True
    procedures: tuple[str, ...] = ("hart", "bh", "az", "or-full", "or-z")
    null: str = "theoretical"
    coverage: float = 0.99
    hart: HartOptions = field(default_factory=HartOptions)

    def __post_init__(self):
        object.__setattr__(self, "procedures", tuple(self.procedures))
        if self.m < 1 or self.reps < 1 or self.replicates_per_unit < 1:
            raise ConfigError("m, reps and replicates_per_unit must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1)")
        if self.dependence not in DEPENDENCE:
            raise ConfigError(f"unknown dependence {self.dependence!r}")
        if self.null not in ("theoretical", "empirical"):
            raise ConfigError(f"unknown null mode {self.null!r}")
        if self.dependence != "independent" and (
                not isinstance(self.model.noise, Gaussian) or self.replicates_per_unit > 1):
            raise ConfigError("dependent designs need Gaussian noise and one draw per unit")
        if not self.sigma_known and self.replicates_per_unit < 2:
            raise ConfigError("sigma_known=false needs replicates_per_unit >= 2")
        for proc in self.procedures:
            if proc not in PROCEDURE_NAMES:
                raise ConfigError(f"unknown procedure {proc!r}")
            if proc in ORACLES and not (self.sigma_known
                                        and isinstance(self.model.noise, Gaussian)):
                raise ConfigError(
                    f"procedure {proc!r} is incompatible with this config: oracles "
                    "need known sigma and Gaussian noise")


@dataclass(frozen=True)
class Scenario:
    x: np.ndarray
    sigma: np.ndarray
    truth: TruthVector
    block: int = 0


def _rng(seed, rep, stream):
    ss = np.random.SeedSequence(seed, spawn_key=(rep, stream))
    return np.random.Generator(np.random.Philox(ss))


def block_size(m: int) -> int:
    """Size of the correlated block: one fifth of m, capped at 4000."""
    return min(m // 5, FULL_BLOCK)


@lru_cache(maxsize=4)
def _banded_factor(n: int) -> np.ndarray:
    ab = np.zeros((3, n))
    ab[0] = 1.0
    ab[1, : n - 1] = BANDED_LAGS[0]
    ab[2, : n - 2] = BANDED_LAGS[1]
    return cholesky_banded(ab, lower=True)


def _banded_noise(eps):
    """Apply the lower Cholesky factor of the lag-1/lag-2 banded correlation."""
    cb = _banded_factor(eps.size)
    out = cb[0] * eps
    out[1:] += cb[1, :-1] * eps[:-1]
    out[2:] += cb[2, :-2] * eps[:-2]
    return out


def _ar1_noise(eps, rho=AR1_RHO):
    e = eps.copy()
    e[0] /= np.sqrt(1.0 - rho * rho)  # stationary start
    return lfilter([np.sqrt(1.0 - rho * rho)], [1.0, -rho], e)


def _noise(model, rng, shape):
    if isinstance(model.noise, StudentT):
        eps = rng.standard_t(model.noise.df, size=shape)
    else:
        eps = rng.standard_normal(shape)
    return eps * model.null_scale


def generate_scenario(config: ScenarioConfig, rep_index: int) -> Scenario:
    model, m = config.model, config.m
    theta = _rng(config.seed, rep_index, _STREAM_THETA).random(m) < model.pi
    mu = np.zeros(m)
    mu[theta] = sample_effects(model.effect, _rng(config.seed, rep_index, _STREAM_MU),
                               int(theta.sum()))
    theta = mu != 0
    sigma = model.scale.sample(_rng(config.seed, rep_index, _STREAM_SIGMA), m)
    noise_rng = _rng(config.seed, rep_index, _STREAM_NOISE)
    n = config.replicates_per_unit
    block = 0
    if n > 1:
        draws = mu[:, None] + sigma[:, None] * _noise(model, noise_rng, (m, n))
        x = np.sqrt(n) * draws.mean(axis=1)
        s_obs = draws.std(axis=1, ddof=1)
        if config.sigma_known:
            s_obs = sigma
    else:
        eps = _noise(model, noise_rng, m)
        if config.dependence != "independent":
            block = block_size(m)
            if block != FULL_BLOCK:
                log.info("correlated block scaled to %d of m=%d", block, m)
            if block >= 3:
                head = eps[:block]
                eps[:block] = (_banded_noise(head) if config.dependence == "banded"
                               else _ar1_noise(head))
        x = mu + sigma * eps
        s_obs = sigma
    return Scenario(x, s_obs, TruthVector(theta, mu, sigma), block)


# --------------------------------------------------------------------------
# metrics


def _reject(decisions):
    return np.asarray(getattr(decisions, "reject", decisions), dtype=bool)


def fdp(decisions, truth) -> float:
    r = _reject(decisions)
    theta = np.asarray(getattr(truth, "theta", truth), dtype=bool)
    return float(np.count_nonzero(r & ~theta) / max(np.count_nonzero(r), 1))


def average_power(decisions, truth) -> float:
    r = _reject(decisions)
    theta = np.asarray(getattr(truth, "theta", truth), dtype=bool)
    return float(np.count_nonzero(r & theta) / max(np.count_nonzero(theta), 1))


def group_z_cutoffs(decisions, z, groups):
    """Smallest positive rejected z in each group (nan if none rejected)."""
    r = _reject(decisions)
    out = {}
    for g in np.unique(groups):
        sel = r & (groups == g) & (z > 0)
        out[float(g)] = float(z[sel].min()) if sel.any() else float("nan")
    return out


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ProcedureSummary:
    fdr: float
    fdr_se: float
    ap: float
    ap_se: float
    mean_rejections: float
    mfdr: float


@dataclass
class RunSummary:
    config: ScenarioConfig
    procedures: dict[str, ProcedureSummary]
    rows: list[dict]

    def column(self, procedure, key):
        return np.array([r[key] for r in self.rows if r["procedure"] == procedure])


def _decide(proc, sc: Scenario, config: ScenarioConfig, cache) -> DecisionSet:
    x, sigma = sc.x, sc.sigma
    z = x / sigma
    sigma0 = cache["sigma0"]
    if proc == "hart":
        opts = replace(config.hart, null_scale=sigma0)
        return hart(x, sigma, config.alpha, tstats=estimate_tstats(x, sigma, opts))
    p = pvalue_from_z(z, sigma0)
    if proc == "bh":
        return bh(p, config.alpha)
    if proc == "az":
        return az(z, config.alpha, storey_pi(p, config.hart.lam), sigma0)
    if proc == "or-full":
        return oracle_full(x, sigma, config.model, config.alpha)
    if proc == "or-z":
        return oracle_z(z, config.model, config.alpha)
    if proc == "or-p":
        return oracle_p(z, config.model, config.alpha)
    raise ConfigError(f"unknown procedure {proc!r}")


def run_replication(config: ScenarioConfig, rep: int) -> list[dict]:
    sc = generate_scenario(config, rep)
    z = sc.x / sc.sigma
    sigma0 = 1.0
    if config.null == "empirical":
        sigma0 = empirical_null(z, config.coverage).sigma0
    two_group = isinstance(config.model.scale, TwoValues)
    rows = []
    for proc in config.procedures:
        d = _decide(proc, sc, config, {"sigma0": sigma0})
        theta = sc.truth.theta
        row = {
            "rep": rep,
            "procedure": proc,
            "rejections": d.k,
            "false_rejections": int(np.count_nonzero(d.reject & ~theta)),
            "true_rejections": int(np.count_nonzero(d.reject & theta)),
            "nonnull": int(np.count_nonzero(theta)),
            "fdp": fdp(d, sc.truth),
            "ap": average_power(d, sc.truth),
            "sigma0": sigma0,
            "cutoff_a": float("nan"),
            "cutoff_b": float("nan"),
        }
        if two_group:
            cuts = group_z_cutoffs(d, z, sc.truth.sigma)
            row["cutoff_a"] = cuts.get(float(config.model.scale.sigma_a), float("nan"))
            row["cutoff_b"] = cuts.get(float(config.model.scale.sigma_b), float("nan"))
        rows.append(row)
    return rows


def _se(values):
    return float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0


def summarize(config: ScenarioConfig, rows: list[dict]) -> RunSummary:
    out = {}
    for proc in config.procedures:
        sel = [r for r in rows if r["procedure"] == proc]
        fdps = np.array([r["fdp"] for r in sel])
        aps = np.array([r["ap"] for r in sel])
        rej = np.array([r["rejections"] for r in sel], dtype=float)
        false = np.array([r["false_rejections"] for r in sel], dtype=float)
        out[proc] = ProcedureSummary(
            fdr=float(fdps.mean()), fdr_se=_se(fdps), ap=float(aps.mean()), ap_se=_se(aps),
            mean_rejections=float(rej.mean()),
            mfdr=float(false.sum() / rej.sum()) if rej.sum() > 0 else 0.0)
    return RunSummary(config, out, rows)


def run_experiment(config: ScenarioConfig, workers: int = 1) -> RunSummary:
    """Run all replications and aggregate in replication order."""
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_rep = list(pool.map(lambda r: run_replication(config, r),
                                    range(config.reps)))
    else:
        per_rep = [run_replication(config, r) for r in range(config.reps)]
    return summarize(config, [row for rows in per_rep for row in rows])
