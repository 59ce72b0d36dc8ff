import math

import numpy as np
import pytest
from scipy import special, stats

from onestep import goftest, models
from onestep.randcore import SeedStream, uniform_block


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def test_statistic_enumeration_example():
    assert goftest.ks_statistic([0.25, 0.5, 0.75], uniform_cdf) == pytest.approx(0.25)
    assert goftest.ks_statistic([0.75, 0.25, 0.5], uniform_cdf) == pytest.approx(0.25)


@pytest.mark.parametrize("n", [1, 7, 100])
def test_statistic_at_exact_quantiles(n):
    x = (np.arange(1, n + 1) - 0.5) / n
    assert goftest.ks_statistic(x, uniform_cdf) == pytest.approx(1 / (2 * n))


def test_statistic_matches_scipy():
    x = SeedStream(1).uniforms(500) ** 1.3
    assert goftest.ks_statistic(x, uniform_cdf) == pytest.approx(stats.kstest(x, "uniform").statistic, abs=1e-15)


def test_empty_sample():
    with pytest.raises(ValueError):
        goftest.ks_statistic([], uniform_cdf)


def test_kolmogorov_sf_matches_scipy():
    x = np.linspace(0.05, 4, 400)
    np.testing.assert_allclose([goftest.kolmogorov_sf(v) for v in x], special.kolmogorov(x), atol=1e-12)
    assert goftest.kolmogorov_sf(0.0) == 1.0


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1])
def test_critical_value(alpha):
    assert goftest.ks_critical(alpha, 400) == pytest.approx(special.kolmogi(alpha) / 20, rel=1e-10)
    assert goftest.ks_critical(0.01, 1) == pytest.approx(1.6276, abs=1e-4)


def test_reject_consistent_with_critical_value():
    root = SeedStream(2)
    for r in range(200):
        x = root.child(r).uniforms(50) ** 1.2
        res = goftest.ks_test(x, uniform_cdf, [0.01, 0.05, 0.1])
        for alpha, rejected in res.reject_at.items():
            assert rejected == (res.statistic > goftest.ks_critical(alpha, 50))


def test_bad_alpha():
    with pytest.raises(ValueError):
        goftest.ks_test([0.1, 0.2], uniform_cdf, 1.0)
    with pytest.raises(ValueError):
        goftest.ks_critical(0.0, 10)


def test_large_sample_below_critical_value():
    root = SeedStream(3)
    n = 10_000
    below = [goftest.ks_statistic(root.child(r).uniforms(n), uniform_cdf) < 1.63 / math.sqrt(n) for r in range(300)]
    assert np.mean(below) >= 0.97


def test_null_pvalues_roughly_uniform():
    root = SeedStream(4)
    p = [goftest.ks_test(root.child(r).uniforms(200), uniform_cdf).p_value for r in range(2000)]
    assert goftest.ks_statistic(p, uniform_cdf) < 0.04


def test_statistic_invariant_under_monotone_transform():
    model = models.BurrModel()
    x = model.sample(np.array([2.0, 4.0]), uniform_block(SeedStream(5), 300, 1))
    cdf = model.reference_cdf([2.0, 4.0])
    d = goftest.ks_statistic(x, cdf)
    d3 = goftest.ks_statistic(x ** 3, lambda y: cdf(np.cbrt(y)))
    assert d3 == pytest.approx(d, abs=1e-14)


def test_empirical_power():
    far = goftest.empirical_power(lambda s: np.full(50, 0.999), uniform_cdf, 0.05, 20, SeedStream(6))
    assert far.power == 1.0 and far.se == 0.0
    gen = lambda s: s.uniforms(100)  # noqa: E731
    a = goftest.empirical_power(gen, uniform_cdf, 0.05, 300, SeedStream(7))
    b = goftest.empirical_power(gen, uniform_cdf, 0.05, 300, SeedStream(7))
    assert a == b
    assert a.se == pytest.approx(math.sqrt(a.power * (1 - a.power) / 300))
    assert goftest.power_estimate(500, 10_000).se == pytest.approx(0.0022, abs=1e-4)
    with pytest.raises(ValueError):
        goftest.empirical_power(gen, uniform_cdf, 0.05, 0, SeedStream(7))
