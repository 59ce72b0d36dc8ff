import itertools
import math

import numpy as np
import pytest
from scipy import special, stats

from onestep import dists, models, privacy
from onestep.models import EstimationError
from onestep.privacy import PrivacySpec
from onestep.randcore import SeedStream


def test_laplace_noise_scale():
    spec = PrivacySpec(epsilon=0.5, sensitivity=0.2)
    noise = privacy.laplace_mechanism(np.zeros(100_000), spec, SeedStream(1))
    assert np.std(noise) == pytest.approx(math.sqrt(2) * 0.2 / 0.5, rel=0.03)


def test_laplace_large_epsilon():
    out = privacy.laplace_mechanism(np.full(10_000, 3.0), PrivacySpec(1e6, 1.0), SeedStream(2))
    assert np.std(out - 3.0) < 1e-3


def test_laplace_density_ratio_bound():
    eps, delta = 0.8, 0.3
    lap = dists.Laplace(0.0, delta / eps)
    t = np.array([0.1, -0.4])
    rng = SeedStream(3)
    for _ in range(50):
        # split the l1 budget delta between the two coordinates
        w = rng.uniform()
        t2 = t + delta * np.array([w, -(1 - w)])
        for o1, o2 in itertools.product(np.linspace(-3, 3, 25), repeat=2):
            o = np.array([o1, o2])
            log_ratio = np.sum(lap.log_pdf(o - t)) - np.sum(lap.log_pdf(o - t2))
            assert abs(log_ratio) <= eps + 1e-12


def test_laplace_requires_sensitivity():
    with pytest.raises(ValueError):
        privacy.laplace_mechanism([1.0], PrivacySpec(1.0, 0.0), SeedStream(1))
    with pytest.raises(ValueError):
        privacy.laplace_mechanism([1.0], PrivacySpec(1.0), SeedStream(1))
    with pytest.raises(ValueError):
        PrivacySpec(0.0, 1.0)
    with pytest.raises(ValueError):
        PrivacySpec(1.0, 1.0, mechanism="gauss")


def test_beta_threshold_examples():
    assert privacy.beta_threshold(10_000) == pytest.approx(10 / (math.log(1e4) * 100), rel=1e-15)
    assert privacy.beta_threshold(10_000) == pytest.approx(0.0108573, abs=1e-7)
    assert privacy.beta_threshold(2) == 0.5
    with pytest.raises(ValueError):
        privacy.beta_threshold(1)
    ts = [privacy.beta_threshold(n) for n in range(3, 5000)]
    assert all(a >= b for a, b in zip(ts, ts[1:]))


@pytest.mark.parametrize("t", [0.02, 0.1, 0.3, privacy.beta_threshold(5)])
def test_sensitivity_exhaustive_n5(t):
    n = 5
    grid = [1e-6, t, 0.2, 0.5, 0.8, 1 - t, 1 - 1e-6]
    bound = privacy.beta_sensitivity(n, t)
    worst = 0.0
    for data in itertools.combinations_with_replacement(grid, n):
        base = np.array(privacy.clamped_beta_stats(data, t))
        for i, v in itertools.product(range(n), grid):
            changed = list(data)
            changed[i] = v
            worst = max(worst, np.sum(np.abs(np.array(privacy.clamped_beta_stats(changed, t)) - base)))
    assert worst <= bound + 1e-12
    # swapping t for 1 - t attains the bound
    assert worst == pytest.approx(bound, rel=1e-12)


def test_dp_beta_large_epsilon_matches_mle():
    x = dists.Beta(5, 3).quantile(SeedStream(4).uniforms(100_000))
    dp = privacy.dp_beta_estimate(x, 1e6, SeedStream(5))
    assert np.linalg.norm(dp - models.BetaModel().estimate(x)) < 0.05


def test_dp_beta_clamps_at_boundary():
    x = dists.Beta(0.6, 3).quantile(SeedStream(6).uniforms(10_000))
    dp = privacy.dp_beta_estimate(x, 1e6, SeedStream(7))
    assert dp[0] == 1.0 and dp[1] > 1.0


def test_dp_beta_errors():
    with pytest.raises(ValueError):
        privacy.dp_beta_estimate([0.2, 1.0, 0.4], 1.0, SeedStream(1))
    with pytest.raises(EstimationError, match="too small"):
        privacy.dp_beta_estimate([0.2, 0.3, 0.4], 1.0, SeedStream(1))


def test_dp_beta_is_deterministic_given_stream():
    x = dists.Beta(5, 3).quantile(SeedStream(8).uniforms(2000))
    a = privacy.dp_beta_estimate(x, 1.0, SeedStream(9))
    b = privacy.dp_beta_estimate(x, 1.0, SeedStream(9))
    np.testing.assert_array_equal(a, b)


def _beta_information(a, b):
    tri = special.polygamma(1, a + b)
    return np.array([[special.polygamma(1, a) - tri, -tri], [-tri, special.polygamma(1, b) - tri]])


@pytest.mark.slow
def test_dp_beta_error_decomposition():
    # MSE ~ tr(I^-1)/n + 2 (sensitivity/eps)^2 tr(I^-2); noise dominates at small n
    n, reps, eps = 10_000, 100, 1.0
    inv = np.linalg.inv(_beta_information(5.0, 3.0))
    scale = privacy.beta_sensitivity(n) / eps
    predicted = np.trace(inv) / n + 2 * scale ** 2 * np.trace(inv @ inv)
    root = SeedStream(10)
    err = []
    for r in range(reps):
        x = dists.Beta(5, 3).quantile(root.child(r, 0).uniforms(n))
        err.append(np.sum((privacy.dp_beta_estimate(x, eps, root.child(r, 1)) - [5, 3]) ** 2))
    assert np.mean(err) == pytest.approx(predicted, rel=0.3)


@pytest.mark.slow
def test_dp_beta_bias_control():
    n, reps = 100_000, 100
    root = SeedStream(11)
    mle, gaps = [], []
    for r in range(reps):
        x = dists.Beta(5, 3).quantile(root.child(r, 0).uniforms(n))
        theta = models.BetaModel().estimate(x)
        mle.append(theta)
        gaps.append(np.linalg.norm(privacy.dp_beta_estimate(x, 1.0, root.child(r, 1)) - theta))
    sd = math.sqrt(np.trace(np.cov(np.array(mle).T)))
    assert np.mean(gaps) < 3 * sd


def test_tulap_mechanism_distribution():
    root = SeedStream(12)
    noise = np.array([privacy.tulap_mechanism(17, 1.0, root.child(r)) - 17 for r in range(5000)])
    s = SeedStream(13)
    ref = dists.tulap_from_uniforms(s.uniforms(5000), s.uniforms(5000), s.uniforms(5000), 1.0)
    assert stats.ks_2samp(noise, ref).pvalue > 0.01


def test_tulap_mechanism_large_epsilon_and_determinism():
    out = [privacy.tulap_mechanism(40, 1e3, SeedStream(14, (r,))) for r in range(200)]
    assert all(39.5 < v < 40.5 for v in out)
    assert privacy.tulap_mechanism(3, 1.0, SeedStream(15)) == privacy.tulap_mechanism(3, 1.0, SeedStream(15))
