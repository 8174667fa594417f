"""Command-line interface: ``hart analyze``, ``hart oracle`` and ``hart simulate``.

Exit status is 0 on success, 2 for usage, schema or config errors and 3 when
the data are too few (or too degenerate) for the requested estimators.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .estimation import (EstimationError, HartOptions, InsufficientDataError,
                         empirical_null, estimate_tstats, storey_pi)
from .model import (DomainError, Fixed, Gaussian, GaussianMixture, MixtureModel,
                    PointMass, StudentT, TwoPointMass, TwoValues, Uniform, Zero)
from .oracle_calc import ToyModel, toy_report
from .procedures import az, bh, hart, pvalue_from_z
from .sim import ORACLES, PROCEDURE_NAMES, ConfigError, ScenarioConfig, run_experiment

log = logging.getLogger("hart")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3
FULL_M, FULL_REPS = 20000, 100

SUMMARY_FIELDS = ("procedure", "fdr", "fdr_se", "ap", "ap_se", "mean_rejections", "mfdr")
REP_FIELDS = ("rep", "procedure", "rejections", "false_rejections", "true_rejections",
              "nonnull", "fdp", "ap", "sigma0", "cutoff_a", "cutoff_b")
ORACLE_FIELDS = ("t_p", "p_cut", "t_z", "lfdr_cut", "lambda_star", "ap_p", "ap_z", "ap_full")


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """Six significant digits; missing values are written as empty fields."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else f"{v:.6g}"


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _procedures(text):
    procs = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in procs if p not in PROCEDURE_NAMES]
    if not procs or bad:
        raise UsageError(f"unknown procedure(s) {bad}; choose from {', '.join(PROCEDURE_NAMES)}")
    return procs


# --------------------------------------------------------------------------
# analyze


def read_input(path):
    """Parse an ``x,sigma[,theta]`` CSV; returns (x, sigma, theta or None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if header not in (["x", "sigma"], ["x", "sigma", "theta"]):
        raise UsageError(f"{path}: missing or invalid header {rows[0]!r}; "
                         "expected x,sigma[,theta]")
    ncol = len(header)
    x, sigma, theta = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != ncol:
            raise UsageError(f"{path}: row {lineno}: expected {ncol} fields, got {len(row)}")
        try:
            xi, si = float(row[0]), float(row[1])
        except ValueError:
            raise UsageError(f"{path}: row {lineno}: non-numeric x or sigma") from None
        if not (math.isfinite(xi) and math.isfinite(si)):
            raise UsageError(f"{path}: row {lineno}: x and sigma must be finite")
        if si <= 0:
            raise UsageError(f"{path}: row {lineno}: sigma must be positive, got {row[1]}")
        x.append(xi)
        sigma.append(si)
        if ncol == 3:
            if row[2].strip() not in ("0", "1"):
                raise UsageError(f"{path}: row {lineno}: theta must be 0 or 1")
            theta.append(row[2].strip() == "1")
    if not x:
        raise InsufficientDataError(f"{path}: no data rows")
    return (np.array(x), np.array(sigma),
            np.array(theta, dtype=bool) if ncol == 3 else None)


def cmd_analyze(args) -> int:
    procs = _procedures(args.procedures)
    oracles = [p for p in procs if p in ORACLES]
    if oracles:
        raise UsageError(f"{', '.join(oracles)} need a known model; not available in analyze")
    x, sigma, theta = read_input(args.input)
    m = x.size
    keep = np.ones(m, dtype=bool) if args.sigma_cap is None else sigma < args.sigma_cap
    n_keep = int(keep.sum())
    z = x / sigma
    sigma0 = 1.0
    if args.null == "empirical":
        sigma0 = empirical_null(z[keep], args.coverage).sigma0
    p = pvalue_from_z(z, sigma0)

    reject = {}
    t_hat = np.full(m, np.nan)
    for proc in procs:
        r = np.zeros(m, dtype=bool)
        if proc == "hart":
            opts = HartOptions(lam=args.lam, jackknife=args.jackknife, null_scale=sigma0)
            ts = estimate_tstats(x[keep], sigma[keep], opts)
            d = hart(x[keep], sigma[keep], args.alpha, tstats=ts)
            t_hat[np.flatnonzero(keep)[ts.index]] = ts.t
        elif proc == "bh":
            d = bh(p[keep], args.alpha)
        else:
            if n_keep < 10:
                raise InsufficientDataError(f"az needs at least 10 rows, got {n_keep}")
            d = az(z[keep], args.alpha, storey_pi(p[keep], args.lam), sigma0)
        r[keep] = d.reject
        reject[proc] = r

    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["x", "sigma", "z", "p", "t_hat"] + [f"reject_{q}" for q in procs])
        for i in range(m):
            # x and sigma keep full precision so the file can be re-analysed
            w.writerow([repr(float(x[i])), repr(float(sigma[i])), fmt(z[i]), fmt(p[i]),
                        fmt(t_hat[i])] + [fmt(reject[q][i]) for q in procs])

    print(f"{m} hypotheses, {n_keep} analysed, sigma0 = {sigma0:.4g}, alpha = {args.alpha}")
    head = f"{'procedure':<10}{'rejections':>12}"
    if theta is not None:
        head += f"{'false':>8}{'fdp':>8}{'power':>8}"
    print(head)
    for proc in procs:
        r = reject[proc]
        line = f"{proc:<10}{int(r.sum()):>12}"
        if theta is not None:
            false = int((r & ~theta).sum())
            line += (f"{false:>8}{false / max(int(r.sum()), 1):>8.3f}"
                     f"{int((r & theta).sum()) / max(int(theta.sum()), 1):>8.3f}")
        print(line)
    print(f"wrote {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    model = ToyModel(pi=args.pi, mu_a=args.mu, sigma_lo=args.sigma_lo,
                     sigma_hi=args.sigma_hi, alpha=args.alpha)
    rep = toy_report(model)
    values = dict(zip(ORACLE_FIELDS, (rep.t_p, rep.p_cut, rep.t_z, rep.lfdr_cut_z,
                                      rep.lambda_star, rep.ap_p, rep.ap_z, rep.ap_full)))
    for k, v in values.items():
        print(f"{k:<12} {v:.6g}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["quantity", "value"])
            for k, v in values.items():
                w.writerow([k, fmt(v)])
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate

CONFIG_KEYS = {
    "experiment": {"m", "alpha", "reps", "seed", "dependence", "replicates_per_unit",
                   "sigma_known", "procedures", "null", "coverage"},
    "model": {"pi", "noise", "df", "null_scale"},
    "effect": {"type", "mu", "mu1", "w1", "mu2", "w2", "parts"},
    "scale": {"type", "lo", "hi", "sigma_a", "sigma_b", "prob_a", "sigma"},
    "hart": {"lambda", "jackknife", "sigma_cap", "bandwidth_coord"},
}


def _bool(text, key):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key!r}: expected a boolean, got {text!r}")


def _num(sec, key, kind=float, default=None):
    if key not in sec:
        if default is None:
            raise UsageError(f"config key {key!r} is required in [{sec.name}]")
        return default
    try:
        return kind(sec[key])
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {sec[key]!r}") from None


def _effect(sec):
    kind = sec.get("type", "point")
    if kind == "point":
        return PointMass(_num(sec, "mu"))
    if kind == "two-point":
        return TwoPointMass(_num(sec, "mu1"), _num(sec, "w1"), _num(sec, "mu2"),
                            _num(sec, "w2"))
    if kind == "mixture":
        try:
            parts = tuple(tuple(float(v) for v in part.split(":"))
                          for part in sec["parts"].split(","))
        except (KeyError, ValueError):
            raise UsageError("mixture effect needs parts = w:mean:sd, ...") from None
        if any(len(p) != 3 for p in parts):
            raise UsageError("mixture effect needs parts = w:mean:sd, ...")
        return GaussianMixture(parts)
    if kind == "zero":
        return Zero()
    raise UsageError(f"unknown effect type {kind!r}")


def _scale(sec):
    kind = sec.get("type", "uniform")
    if kind == "uniform":
        return Uniform(_num(sec, "lo"), _num(sec, "hi"))
    if kind == "two-values":
        return TwoValues(_num(sec, "sigma_a"), _num(sec, "sigma_b"),
                         _num(sec, "prob_a", default=0.5))
    if kind == "fixed":
        return Fixed(_num(sec, "sigma"))
    raise UsageError(f"unknown scale type {kind!r}")


def load_config(path) -> ScenarioConfig:
    """Read an INI-style scenario file into a validated ScenarioConfig."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for name in cp.sections():
        if name not in CONFIG_KEYS:
            raise UsageError(f"unknown config section [{name}]")
        for key in cp[name]:
            if key not in CONFIG_KEYS[name]:
                raise UsageError(f"unknown config key {key!r} in [{name}]")
    for name in ("model", "effect", "scale"):
        if not cp.has_section(name):
            raise UsageError(f"config lacks section [{name}]")
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    mod, hs = cp["model"], (cp["hart"] if cp.has_section("hart") else {})

    noise_kind = mod.get("noise", "gaussian")
    if noise_kind == "gaussian":
        noise = Gaussian()
    elif noise_kind == "t":
        noise = StudentT(_num(mod, "df"))
    else:
        raise UsageError(f"unknown noise {noise_kind!r}")
    model = MixtureModel(_num(mod, "pi"), _effect(cp["effect"]), _scale(cp["scale"]),
                         noise, _num(mod, "null_scale", default=1.0))

    def get(sec, key, kind, default):
        return _num(sec, key, kind, default) if key in sec else default

    sigma_cap = hs.get("sigma_cap")
    opts = HartOptions(
        lam=get(hs, "lambda", float, 0.5),
        jackknife=_bool(hs["jackknife"], "jackknife") if "jackknife" in hs else True,
        sigma_filter=float(sigma_cap) if sigma_cap else None,
        bandwidth_coord=hs.get("bandwidth_coord", "z"))
    kw = {}
    if "procedures" in exp:
        kw["procedures"] = _procedures(exp["procedures"])
    if "sigma_known" in exp:
        kw["sigma_known"] = _bool(exp["sigma_known"], "sigma_known")
    return ScenarioConfig(
        model=model, m=get(exp, "m", int, 5000), alpha=get(exp, "alpha", float, 0.1),
        reps=get(exp, "reps", int, 20), seed=get(exp, "seed", int, 0),
        dependence=exp.get("dependence", "independent"),
        replicates_per_unit=get(exp, "replicates_per_unit", int, 1),
        null=exp.get("null", "theoretical"), coverage=get(exp, "coverage", float, 0.99),
        hart=opts, **kw)


def write_summary(summary, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for proc, s in summary.procedures.items():
            w.writerow([proc, fmt(s.fdr), fmt(s.fdr_se), fmt(s.ap), fmt(s.ap_se),
                        fmt(s.mean_rejections), fmt(s.mfdr)])


def write_reps(summary, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(REP_FIELDS)
        for row in summary.rows:
            w.writerow([row["procedure"] if k == "procedure" else fmt(row[k])
                        for k in REP_FIELDS])


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    over = {}
    if args.full_scale:
        over.update(m=FULL_M, reps=FULL_REPS)
    if args.reps is not None:
        over["reps"] = args.reps
    if args.seed is not None:
        over["seed"] = args.seed
    if over:
        config = replace(config, **over)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_experiment(config, workers=args.workers)
    write_summary(summary, out / "summary.csv")
    write_reps(summary, out / "reps.csv")
    print(f"{config.reps} reps, m = {config.m}, alpha = {config.alpha}, seed = {config.seed}")
    print(f"{'procedure':<10}{'fdr':>8}{'ap':>8}{'rejections':>12}")
    for proc, s in summary.procedures.items():
        print(f"{proc:<10}{s.fdr:>8.4f}{s.ap:>8.4f}{s.mean_rejections:>12.1f}")
    print(f"wrote {out / 'summary.csv'} and {out / 'reps.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hart", description="Heteroscedasticity-adjusted multiple testing from the command line.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="test hypotheses read from an x,sigma[,theta] CSV")
    a.add_argument("input")
    a.add_argument("--out", required=True, help="output CSV path")
    a.add_argument("--alpha", type=float, default=0.1)
    a.add_argument("--procedures", default="hart,bh,az")
    a.add_argument("--null", choices=("theoretical", "empirical"), default="theoretical")
    a.add_argument("--coverage", type=float, default=0.99,
                   help="central fraction of z-values used by the empirical null")
    a.add_argument("--sigma-cap", type=float, default=None,
                   help="analyse only rows with sigma below this value")
    a.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="Storey tuning parameter")
    a.add_argument("--jackknife", type=_on_off, default=True, metavar="{on,off}")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="oracle thresholds and powers of the toy model")
    o.add_argument("--pi", type=float, default=0.1)
    o.add_argument("--mu", type=float, default=2.0)
    o.add_argument("--sigma-lo", type=float, default=0.5)
    o.add_argument("--sigma-hi", type=float, default=4.0)
    o.add_argument("--alpha", type=float, default=0.1)
    o.add_argument("--out", default=None, help="optional CSV path")
    o.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="run a simulation described by a config file")
    s.add_argument("config")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--full-scale", action="store_true",
                   help=f"use m={FULL_M} and {FULL_REPS} reps (--reps still overrides)")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InsufficientDataError, EstimationError) as exc:
        print(f"hart: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ConfigError, DomainError, OSError) as exc:
        print(f"hart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
