import math

import numpy as np
import pytest

from hound.signals import (
    InsufficientRunsError,
    SignalSpec,
    TransientWarning,
    derivative,
    fit_variance,
    monte_carlo_estimates,
    noise,
    sample,
    samples,
    standard_normal_block,
    variance_slope,
)

DEMO = (5.0, -0.004, 0.0003, -0.00002, 0.000001)


def test_constant():
    spec = SignalSpec(poly=(5.0,))
    assert sample(spec, 0.0) == 5.0
    assert sample(spec, 123.4) == 5.0


def test_demo_value():
    assert float(derivative(SignalSpec(DEMO), 20000.0, 0)) == 159840119925.0


def test_noisy_demo_is_clean_plus_noise():
    spec = SignalSpec(DEMO, noise_sigma=0.7, seed=3)
    v = sample(spec, 20000.0, index=20000)
    assert v == 159840119925.0 + noise(spec, 20000)
    assert v != 159840119925.0


def test_polynomial_derivatives():
    spec = SignalSpec(poly=(1.0, 2.0, 3.0))
    assert derivative(spec, 10.0, 1) == 62.0
    assert derivative(spec, 10.0, 2) == 6.0
    assert derivative(spec, 10.0, 3) == 0.0
    with pytest.raises(ValueError):
        derivative(spec, 1.0, -1)


@pytest.mark.parametrize("m", range(5))
def test_harmonic_derivatives_against_finite_differences(m):
    amp, w, phi = 1.3, 0.7, 0.4
    spec = SignalSpec(harmonics=((amp, w, phi),))
    t, h = 2.1, 1e-3
    # central difference of the (m-1)-th analytic derivative
    if m == 0:
        assert derivative(spec, t, 0) == pytest.approx(amp * math.sin(w * t + phi))
    else:
        fd = (derivative(spec, t + h, m - 1) - derivative(spec, t - h, m - 1)) / (2 * h)
        assert derivative(spec, t, m) == pytest.approx(fd, rel=1e-5)


def test_harmonic_second_derivative():
    spec = SignalSpec(harmonics=((2.0, 3.0, 0.5),))
    assert derivative(spec, 1.0, 2) == pytest.approx(-2.0 * 9.0 * math.sin(3.0 + 0.5))


def test_spec_validation():
    with pytest.raises(ValueError):
        SignalSpec(noise_sigma=-1.0)
    with pytest.raises(ValueError):
        SignalSpec(poly=(math.inf,))
    with pytest.raises(ValueError):
        SignalSpec(harmonics=((1.0, 2.0),))


def test_noise_reproducible_and_counter_based():
    spec = SignalSpec(poly=(0.0,), noise_sigma=1.0, seed=99)
    ts = np.arange(100.0)
    a = samples(spec, ts)
    b = samples(spec, ts)
    assert np.array_equal(a, b)
    tail = samples(spec, ts[40:], start_index=40)
    assert np.array_equal(a[40:], tail)
    assert sample(spec, 57.0, index=57) == a[57]
    assert not np.array_equal(a, samples(spec.with_seed(100), ts))


def test_noise_streams_differ():
    x = standard_normal_block(5, 0, 1000, stream=0)
    y = standard_normal_block(5, 0, 1000, stream=1)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.1


def test_noise_is_standard_normal():
    x = standard_normal_block(123, 0, 200000)
    assert abs(x.mean()) < 0.01
    assert abs(x.std() - 1.0) < 0.01
    assert abs(np.mean(x**4) - 3.0) < 0.05


def test_variance_slope_requires_runs():
    with pytest.raises(InsufficientRunsError):
        variance_slope(SignalSpec((1.0,), noise_sigma=1.0), 2, 1, 50, [10, 100])


def test_variance_slope_rejects_high_degree():
    with pytest.raises(ValueError):
        variance_slope(SignalSpec((1.0, 1.0, 1.0), noise_sigma=1.0), 2, 1, 100, [10, 100])


def test_variance_degenerate_without_noise():
    fit = variance_slope(SignalSpec((1.0, 2.0)), 2, 1, 100, [100, 1000])
    assert fit.degenerate and math.isnan(fit.slope)
    assert np.all(fit.variances == 0)


@pytest.mark.parametrize("m, want", [(1, -1.0), (2, -3.0)])
def test_variance_slope_n2(m, want):
    spec = SignalSpec((2.0, 0.1), noise_sigma=1.0, seed=1)
    fit = variance_slope(spec, 2, m, 200, [500, 1000, 2000, 5000])
    assert abs(fit.slope - want) <= 0.3


def test_n1_variance_is_sigma2_over_t():
    # running mean of N(0, s^2) samples has variance s^2 / t
    spec = SignalSpec((0.0,), noise_sigma=2.0, seed=8)
    est = monte_carlo_estimates(spec, 1, 2000, [100, 400])
    var = est[:, :, 0].var(axis=1, ddof=1)
    assert var[0] == pytest.approx(4.0 / 100, rel=0.1)
    assert var[1] == pytest.approx(4.0 / 400, rel=0.1)


def test_replica_means_unbiased():
    spec = SignalSpec((1.0, 0.5, 0.01), noise_sigma=1.0, seed=21)
    t = 5000.0
    est = monte_carlo_estimates(spec, 3, 500, [t])[0]
    clean = monte_carlo_estimates(SignalSpec(spec.poly), 3, 1, [t])[0, 0]
    for m in range(3):
        se = est[:, m].std(ddof=1) / math.sqrt(est.shape[0])
        assert abs(est[:, m].mean() - clean[m]) <= 3 * se


def test_transient_warning():
    times = np.array([10.0, 20.0, 40.0, 80.0])
    est = np.zeros((4, 3, 1))
    est[:, :, 0] = [[0, 5, 9], [0, 1, 2], [0, 1, 2], [0, 5, 9]]
    with pytest.warns(TransientWarning):
        fit = fit_variance(est, 1, times)
    assert fit.notes


def test_grid_must_be_on_lattice():
    with pytest.raises(ValueError):
        monte_carlo_estimates(SignalSpec((1.0,), noise_sigma=1.0), 1, 2, [10.5], dt=1.0)
