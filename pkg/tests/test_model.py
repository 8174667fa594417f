import numpy as np
import pytest
from scipy import integrate, stats

from hart.model import (DomainError, Fixed, GaussianMixture, MixtureModel, PointMass,
                        StudentT, TestItem, TwoPointMass, TwoValues, Uniform, Zero,
                        alt_density, alt_z_density, alt_z_sf, marginal_z_density,
                        mixture_density, null_density, sample_effects, true_lfdr_full,
                        true_lfdr_z)

TOY = MixtureModel(0.1, PointMass(2.0), Uniform(0.5, 4.0))
phi = stats.norm.pdf


def test_null_density_values():
    assert null_density(0.0, 1.0) == pytest.approx(0.3989422804014327, rel=1e-12)
    assert null_density(0.0, 2.0) == pytest.approx(0.19947114020071635, rel=1e-12)
    assert null_density(2.0, 1.0, 1.3) == pytest.approx(phi(2 / 1.3) / 1.3, rel=1e-12)
    assert null_density(2.0, 1.0, 1.3) == pytest.approx(0.09397, abs=5e-6)


def test_null_density_symmetric_and_checks():
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(null_density(x, 1.7), null_density(-x, 1.7))
    with pytest.raises(DomainError):
        null_density(0.0, 0.0)
    with pytest.raises(DomainError):
        null_density(0.0, 1.0, -1.0)


def test_alt_density_values():
    assert alt_density(2.0, 0.5, PointMass(2.0)) == pytest.approx(0.797885, abs=1e-6)
    assert alt_density(0.0, 1.0, PointMass(2.0)) == pytest.approx(0.053991, abs=1e-6)
    mix = GaussianMixture([(0.5, -1.5, 0.1), (0.5, 2.0, 0.1)])
    r = np.sqrt(1.01)
    expected = 0.5 * phi(-1.5 / r) / r + 0.5 * phi(2 / r) / r
    assert alt_density(0.0, 1.0, mix) == pytest.approx(expected, rel=1e-12)
    # convolution closed form against numerical integration over mu
    numeric = sum(0.5 * integrate.quad(lambda mu, m=m: phi(0.0 - mu) * phi((mu - m) / 0.1) / 0.1,
                                       m - 1.5, m + 1.5)[0] for m in (-1.5, 2.0))
    assert alt_density(0.0, 1.0, mix) == pytest.approx(numeric, rel=1e-8)
    with pytest.raises(DomainError):
        alt_density(0.0, 1.0, Zero())


@pytest.mark.parametrize("effect", [PointMass(2.0), TwoPointMass(-1, 0.3, 2, 0.7),
                                    GaussianMixture([(0.5, -1.5, 0.1), (0.5, 2.0, 0.1)])])
@pytest.mark.parametrize("sigma", [0.3, 1.0, 3.5])
def test_alt_density_integrates_to_one(effect, sigma):
    total = integrate.quad(lambda x: alt_density(x, sigma, effect), -np.inf, np.inf)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_mixture_density_values():
    m0 = MixtureModel(0.0, PointMass(2.0), Uniform(0.5, 4))
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(mixture_density(x, 1.2, m0), null_density(x, 1.2))
    m1 = MixtureModel(1.0, PointMass(2.0), Uniform(0.5, 4))
    assert mixture_density(2.0, 0.5, m1) == pytest.approx(0.797885, abs=1e-6)
    assert mixture_density(2.0, 0.5, TOY) == pytest.approx(0.08003, abs=5e-6)


@pytest.mark.parametrize("sigma", np.linspace(0.2, 4.0, 8))
def test_mixture_density_integrates_to_one(sigma):
    total = integrate.quad(lambda x: mixture_density(x, sigma, TOY), -np.inf, np.inf)[0]
    assert abs(total - 1.0) < 1e-4


def test_true_lfdr_full_values():
    assert true_lfdr_full(2.0, 0.5, TOY) == pytest.approx(0.00301, abs=1e-5)
    flat = MixtureModel(0.1, PointMass(0.0), Uniform(0.5, 4))
    np.testing.assert_allclose(true_lfdr_full(np.linspace(-4, 4, 9), 1.0, flat), 0.9)
    none = MixtureModel(0.0, Zero(), Uniform(0.5, 4))
    np.testing.assert_array_equal(true_lfdr_full(np.linspace(-4, 4, 9), 1.0, none), 1.0)


def test_true_lfdr_full_underflow_is_one():
    # both densities underflow far in the tail; the ratio is defined as 1
    assert true_lfdr_full(-1e4, 0.5, TOY) == 1.0


def test_lfdr_bounds_and_mixture_floor():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 4, 500)
    s = rng.uniform(0.1, 5, 500)
    t = true_lfdr_full(x, s, TOY)
    assert np.all((t >= 0) & (t <= 1))
    assert np.all(mixture_density(x, s, TOY) >= 0.9 * null_density(x, s) * (1 - 1e-15))


@pytest.mark.parametrize("c", [0.1, 0.7, 3.0, 25.0])
def test_lfdr_location_scale_equivariance(c):
    rng = np.random.default_rng(2)
    x = rng.normal(1, 2, 50)
    s = rng.uniform(0.5, 3, 50)
    mix = [(0.4, -1.0, 0.3), (0.6, 2.5, 0.0)]
    m1 = MixtureModel(0.2, GaussianMixture(mix), Uniform(0.5, 3))
    m2 = MixtureModel(0.2, GaussianMixture([(w, c * a, c * b) for w, a, b in mix]),
                      Uniform(0.5 * c, 3 * c))
    np.testing.assert_allclose(true_lfdr_full(c * x, c * s, m2), true_lfdr_full(x, s, m1),
                               rtol=1e-10, atol=1e-14)


def _quad_alt_z(z, model):
    lo, hi = model.scale.lo, model.scale.hi
    mu = model.effect.mu
    # the integrand peaks sharply at sigma = mu / z; tell quad where
    peak = [mu / z] if z > 0 and lo < mu / z < hi else None
    return integrate.quad(lambda s: phi(z - mu / s), lo, hi, epsabs=1e-14,
                          limit=400, points=peak)[0] / (hi - lo)


def test_marginal_z_density_at_zero():
    expected = 0.9 * 0.3989422804014327 + 0.1 * _quad_alt_z(0.0, TOY)
    assert marginal_z_density(0.0, TOY) == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("lo", [0.0, 0.5])
def test_alt_z_density_against_adaptive_quadrature(lo):
    model = MixtureModel(0.1, PointMass(2.0), Uniform(lo, 4.0))
    for z in (-2.0, 0.0, 0.7, 2.0, 3.13, 6.0, 15.0, 40.0):
        assert alt_z_density(z, model) == pytest.approx(_quad_alt_z(z, model),
                                                        rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("model", [
    TOY,
    MixtureModel(0.3, PointMass(-1.5), Uniform(0.0, 4.0)),
    MixtureModel(0.1, GaussianMixture([(0.5, -1.5, 0.1), (0.5, 2, 0.1)]), Uniform(0.5, 2)),
    MixtureModel(0.1, PointMass(2.5), TwoValues(1, 3)),
])
def test_marginal_z_density_integrates_to_one(model):
    total = integrate.quad(lambda z: marginal_z_density(z, model), -np.inf, np.inf,
                           limit=200)[0]
    assert abs(total - 1.0) < 1e-4


def test_marginal_z_reductions():
    z = np.linspace(-5, 8, 27)
    null = MixtureModel(0.0, PointMass(2.0), Uniform(0.5, 4))
    np.testing.assert_allclose(marginal_z_density(z, null), phi(z), rtol=1e-14)
    flat = MixtureModel(0.1, PointMass(0.0), Uniform(0.5, 4))
    np.testing.assert_allclose(marginal_z_density(z, flat), phi(z), rtol=1e-12)
    np.testing.assert_allclose(true_lfdr_z(z, flat), 0.9, rtol=1e-12)
    fixed = MixtureModel(0.2, PointMass(3.0), Fixed(1.5))
    np.testing.assert_allclose(marginal_z_density(z, fixed),
                               0.8 * phi(z) + 0.2 * phi(z - 2.0), rtol=1e-12)


def test_true_lfdr_z_toy_threshold():
    assert true_lfdr_z(3.13, TOY) == pytest.approx(0.24, abs=0.01)
    null = MixtureModel(0.0, Zero(), Uniform(0.5, 4))
    assert true_lfdr_z(1.0, null) == 1.0


def test_alt_z_sf_matches_density_integral():
    for t in (-1.0, 0.5, 3.13):
        tail = integrate.quad(lambda z: alt_z_density(z, TOY), t, np.inf)[0]
        assert alt_z_sf(t, TOY) == pytest.approx(tail, abs=1e-8)
    assert alt_z_sf(0.3, TOY) + alt_z_sf(0.3, TOY, lower=True) == pytest.approx(1.0)


def test_test_item():
    item = TestItem(3.0, 2.0)
    assert item.z == 1.5
    assert item.p == pytest.approx(2 * stats.norm.sf(1.5), rel=1e-12)
    assert TestItem(3.0, 2.0, 1.3).p == pytest.approx(2 * stats.norm.sf(1.5 / 1.3))
    with pytest.raises(DomainError):
        TestItem(1.0, 0.0)


def test_type_invariants():
    with pytest.raises(DomainError):
        TwoPointMass(1, 0.5, 2, 0.6)
    with pytest.raises(DomainError):
        GaussianMixture([(1.0, 0.0, -0.1)])
    with pytest.raises(DomainError):
        Uniform(2, 1)
    with pytest.raises(DomainError):
        TwoValues(0, 1)
    with pytest.raises(DomainError):
        StudentT(2)
    with pytest.raises(DomainError):
        MixtureModel(1.2, PointMass(1), Fixed(1))
    with pytest.raises(DomainError):
        MixtureModel(0.1, Zero(), Fixed(1))


def test_sampling_laws():
    rng = np.random.default_rng(3)
    s = Uniform(0.0, 4.0).sample(rng, 10000)
    assert s.min() > 0 and s.max() <= 4
    mu = sample_effects(GaussianMixture([(0.5, -1.5, 0.1), (0.5, 2.0, 0.1)]), rng, 20000)
    assert np.mean(mu < 0) == pytest.approx(0.5, abs=0.02)
    assert np.std(mu[mu > 0]) == pytest.approx(0.1, rel=0.05)
    np.testing.assert_array_equal(sample_effects(Zero(), rng, 5), 0.0)
