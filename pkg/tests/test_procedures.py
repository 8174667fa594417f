import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hart.estimation import HartOptions, storey_pi
from hart.model import (DomainError, MixtureModel, PointMass, StudentT, Uniform, Zero,
                        true_lfdr_full)
from hart.procedures import (az, bh, hart, oracle_full, oracle_p, oracle_z, pvalue_from_z,
                             step_up)
from hart.sim import ScenarioConfig, generate_scenario

TOY = MixtureModel(0.1, PointMass(2.0), Uniform(0.5, 4.0))


# --------------------------------------------------------------------------
# brute-force references: scan every cutoff and keep the largest admissible set


def brute_step_up(t, alpha):
    best = np.zeros(len(t), dtype=bool)
    for c in itertools.chain([-np.inf], t):
        chosen = t <= c
        if chosen.any() and t[chosen].mean() <= alpha and chosen.sum() > best.sum():
            best = chosen
    return best


def brute_bh(p, alpha):
    m = len(p)
    best = np.zeros(m, dtype=bool)
    for c in p:
        chosen = p <= c
        if c <= chosen.sum() * alpha / m and chosen.sum() > best.sum():
            best = chosen
    return best


def test_against_brute_force_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        m = int(rng.integers(1, 13))
        alpha = float(rng.uniform(0.01, 0.5))
        t = rng.random(m) ** rng.uniform(0.3, 4)
        np.testing.assert_array_equal(step_up(t, alpha).reject, brute_step_up(t, alpha))
        np.testing.assert_array_equal(bh(t, alpha).reject, brute_bh(t, alpha))


# --------------------------------------------------------------------------
# hand examples


def test_step_up_examples():
    d = step_up([0.01, 0.05, 0.2, 0.5], 0.1)
    assert d.k == 3 and list(d.reject) == [True, True, True, False]
    assert d.threshold == 0.2 and d.procedure == "HART"
    assert step_up([0.5, 0.9], 0.1).k == 0
    assert step_up([0.1], 0.1).k == 1
    assert step_up([], 0.1).k == 0


def test_step_up_rejects_out_of_range():
    with pytest.raises(DomainError):
        step_up([0.2, 1.2], 0.1)
    with pytest.raises(DomainError):
        step_up([0.2], 1.0)


def test_step_up_ties_broken_by_index():
    # two tied 0.15 values: only the first fits under the mean bound
    d = step_up([0.15, 0.05, 0.15], 0.1)
    assert list(d.reject) == [True, True, False]


def test_bh_examples():
    d = bh([0.01, 0.02, 0.04, 0.9], 0.1)
    assert d.k == 3 and list(d.reject) == [True, True, True, False]
    assert bh([1.0] * 5, 0.1).k == 0
    assert bh([0.1], 0.1).k == 1


def test_pvalue_from_z():
    assert pvalue_from_z(0.0) == 1.0
    assert pvalue_from_z(1.959964) == pytest.approx(0.05, abs=1e-7)
    assert pvalue_from_z(3.43) == pytest.approx(0.0006, abs=1e-4)
    assert pvalue_from_z(-2.6, 1.3) == pytest.approx(2 * stats.norm.sf(2.0))
    with pytest.raises(DomainError):
        pvalue_from_z(1.0, 0.0)


# --------------------------------------------------------------------------
# properties

unit = st.floats(0.0, 1.0, allow_nan=False)
stats_lists = st.lists(unit, min_size=1, max_size=40)
alphas = st.floats(0.01, 0.99)


@settings(max_examples=300, deadline=None)
@given(stats_lists, alphas)
def test_step_up_bound_and_maximality(values, alpha):
    t = np.array(values)
    d = step_up(t, alpha)
    assert d.k == d.reject.sum()
    if d.k:
        assert t[d.reject].mean() <= alpha
        # lower set in (value, index) order
        assert t[d.reject].max() <= t[~d.reject].min(initial=np.inf)
    if d.k < t.size:
        order = np.argsort(t, kind="stable")
        assert t[order[: d.k + 1]].mean() > alpha


@settings(max_examples=300, deadline=None)
@given(stats_lists, alphas, st.data())
def test_step_up_monotone_in_each_statistic(values, alpha, data):
    t = np.array(values)
    i = data.draw(st.integers(0, t.size - 1))
    lower = t.copy()
    lower[i] = data.draw(st.floats(0.0, t[i]))
    assert step_up(lower, alpha).k >= step_up(t, alpha).k


@settings(max_examples=300, deadline=None)
@given(stats_lists, alphas)
def test_bh_is_step_up_on_line(values, alpha):
    p = np.array(values)
    d = bh(p, alpha)
    m = p.size
    if d.k:
        assert np.sort(p)[d.k - 1] <= d.k * alpha / m
        assert p[d.reject].max() <= p[~d.reject].min(initial=np.inf)
    srt = np.sort(p)
    assert all(srt[j - 1] > j * alpha / m for j in range(d.k + 1, m + 1))


# --------------------------------------------------------------------------
# adaptive z rule and data-driven HART


def test_az_pure_null_rarely_rejects():
    zero_runs = 0
    for seed in range(20):
        z = np.random.default_rng(seed).normal(size=2000)
        zero_runs += az(z, 0.1, storey_pi(pvalue_from_z(z))).k == 0
    assert zero_runs >= 18


def test_az_zero_pi_and_checks():
    z = np.random.default_rng(1).normal(size=500)
    assert az(z, 0.1, 0.0).k == 0
    with pytest.raises(DomainError):
        az(z[:9], 0.1, 0.1)
    with pytest.raises(DomainError):
        az(z, 0.1, 0.1, sigma0=0.0)
    assert az(z, 0.1, 0.1).procedure == "AZ"


def test_hart_filter_and_determinism():
    cfg = ScenarioConfig(MixtureModel(0.1, PointMass(2.0), Uniform(0.0, 4.0)), m=1500)
    sc = generate_scenario(cfg, 0)
    opts = HartOptions(sigma_filter=2.0)
    a = hart(sc.x, sc.sigma, 0.1, opts)
    b = hart(sc.x, sc.sigma, 0.1, opts)
    np.testing.assert_array_equal(a.reject, b.reject)
    assert not a.reject[sc.sigma >= 2.0].any()
    assert a.k == a.reject.sum() and a.procedure == "HART"


# --------------------------------------------------------------------------
# oracles on the toy model

@pytest.fixture(scope="module")
def toy_oracle_runs():
    """Powers and realized thresholds of the three oracles, 5 draws of 200k each."""
    out = []
    for seed in range(5):
        sc = generate_scenario(ScenarioConfig(TOY, m=200_000, seed=seed), 0)
        z = sc.x / sc.sigma
        theta = sc.truth.theta
        full = oracle_full(sc.x, sc.sigma, TOY, 0.1)
        zrule = oracle_z(z, TOY, 0.1)
        prule = oracle_p(z, TOY, 0.1)
        assert np.abs(z[prule.reject]).min() >= prule.threshold
        out.append([full.reject[theta].mean(), zrule.reject[theta].mean(),
                    prule.reject[theta].mean(), z[zrule.reject].min(), prule.threshold])
    return np.mean(out, axis=0)


def test_oracle_powers_on_toy_model(toy_oracle_runs):
    ap_full, ap_z, ap_p, _, _ = toy_oracle_runs
    assert ap_full == pytest.approx(0.105, abs=0.005)
    assert ap_z == pytest.approx(0.072, abs=0.005)
    assert ap_p == pytest.approx(0.050, abs=0.005)


def test_oracle_realized_thresholds(toy_oracle_runs):
    assert toy_oracle_runs[3] == pytest.approx(3.13, abs=0.03)
    assert toy_oracle_runs[4] == pytest.approx(3.43, abs=0.03)


def test_oracle_etp_ordering():
    wins = 0
    for seed in range(20):
        sc = generate_scenario(ScenarioConfig(TOY, m=20000, seed=seed), 0)
        z = sc.x / sc.sigma
        th = sc.truth.theta
        etp = [d.reject[th].sum() for d in (oracle_full(sc.x, sc.sigma, TOY, 0.1),
                                            oracle_z(z, TOY, 0.1), oracle_p(z, TOY, 0.1))]
        wins += etp[0] >= etp[1] >= etp[2]
    assert wins >= 18


def test_oracles_without_signal():
    null = MixtureModel(0.0, Zero(), Uniform(0.5, 4.0))
    rng = np.random.default_rng(3)
    s = rng.uniform(0.5, 4, 300)
    x = s * rng.normal(size=300)
    assert oracle_full(x, s, null, 0.1).k == 0
    assert oracle_z(x / s, null, 0.1).k == 0
    assert oracle_p(x / s, null, 0.5).k == 0


def test_oracles_need_gaussian_noise():
    heavy = MixtureModel(0.1, PointMass(2.0), Uniform(0.5, 4.0), noise=StudentT(5))
    with pytest.raises(DomainError):
        oracle_full([1.0], [1.0], heavy, 0.1)
    with pytest.raises(DomainError):
        oracle_z([1.0], heavy, 0.1)
    with pytest.raises(DomainError):
        oracle_p([1.0], heavy, 0.1)


def test_threshold_rule_mfdr_nondecreasing():
    false = np.zeros(3)
    total = np.zeros(3)
    grid = (0.1, 0.3, 0.5)
    for seed in range(50):
        sc = generate_scenario(ScenarioConfig(TOY, m=5000, seed=seed), 0)
        t = true_lfdr_full(sc.x, sc.sigma, TOY)
        for k, cut in enumerate(grid):
            r = t < cut
            false[k] += np.sum(r & ~sc.truth.theta)
            total[k] += r.sum()
    mfdr = false / total
    assert mfdr[0] <= mfdr[1] <= mfdr[2]
