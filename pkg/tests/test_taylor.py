import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hound.core import run_uniform
from hound.signals import SignalSpec, derivative
from hound.taylor import (
    TaylorModel,
    coeffs_polynomial,
    eval_derivative,
    extract_poly_coeffs,
    extrapolation_table,
)

DEMO = (5.0, -0.004, 0.0003, -0.00002, 0.000001)

coeff = st.floats(-10, 10, allow_nan=False)


def test_eval_at_anchor_returns_coeff():
    m = TaylorModel(3.5, (1.0, -2.0, 0.25))
    for j in range(3):
        assert eval_derivative(m, j, 3.5) == m.coeffs[j]


def test_linear_extrapolation():
    m = TaylorModel(7.0, (1.0, 2.0))
    assert eval_derivative(m, 0, 8.0) == 3.0
    assert eval_derivative(m, 1, 100.0) == 2.0


def test_derivative_index_range():
    m = TaylorModel(0.0, (1.0, 2.0))
    with pytest.raises(IndexError):
        eval_derivative(m, 2, 0.0)
    with pytest.raises(IndexError):
        eval_derivative(m, -1, 0.0)


def test_model_rejects_non_finite():
    with pytest.raises(ValueError):
        TaylorModel(0.0, (math.nan,))
    with pytest.raises(ValueError):
        TaylorModel(0.0, ())


def test_extract_at_zero_anchor():
    m = TaylorModel(0.0, (3.0, 4.0, 10.0, 12.0))
    assert extract_poly_coeffs(m) == [3.0, 4.0, 5.0, 2.0]


def test_extract_known_quadratic():
    # f = 1 + 2t + 3t^2 at t=10
    m = TaylorModel(10.0, (321.0, 62.0, 6.0))
    assert extract_poly_coeffs(m) == pytest.approx([1.0, 2.0, 3.0], rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(poly=st.lists(coeff, min_size=1, max_size=6), anchor=st.floats(-50, 50))
def test_recentering_exact_for_polynomials(poly, anchor):
    spec = SignalSpec(tuple(poly))
    n = len(poly)
    m = TaylorModel(anchor, tuple(float(derivative(spec, anchor, j)) for j in range(n)))
    got = extract_poly_coeffs(m)
    scale = max(1.0, max(abs(p) for p in poly))
    # anchor**(n-1) amplifies rounding in the derivative vector itself
    tol = 1e-9 * scale * max(1.0, abs(anchor)) ** (n - 1)
    assert np.allclose(got, poly, rtol=0, atol=tol)


@settings(max_examples=100, deadline=None)
@given(z=st.lists(coeff, min_size=1, max_size=6), anchor=st.floats(-5, 5), tau=st.floats(-5, 5))
def test_round_trip_taylor_vs_global(z, anchor, tau):
    m = TaylorModel(anchor, tuple(z))
    k = extract_poly_coeffs(m)
    a = m(tau)
    b = coeffs_polynomial(k, tau)
    scale = sum(abs(c) for c in z) * 10.0 ** len(z) + 1.0
    assert abs(a - b) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(z=st.lists(coeff, min_size=1, max_size=5), anchor=st.floats(-5, 5), tau=st.floats(-5, 5), x=st.floats(-5, 5))
def test_shift_consistency(z, anchor, tau, x):
    m = TaylorModel(anchor, tuple(z))
    moved = m.shifted(tau)
    scale = sum(abs(c) for c in z) * 10.0 ** len(z) + 1.0
    for j in range(len(z)):
        assert abs(eval_derivative(moved, j, x) - eval_derivative(m, j, x)) <= 1e-12 * scale


def test_array_evaluation():
    m = TaylorModel(1.0, (1.0, 1.0, 2.0))
    tau = np.array([0.0, 1.0, 2.0])
    assert np.allclose(m(tau), [1.0, 1.0, 3.0])


def test_extrapolation_table():
    m = TaylorModel(0.0, (1.0, 2.0))
    tab = extrapolation_table(m, 0.0, 2.0, 1.0)
    assert tab.tolist() == [[0.0, 1.0, 2.0], [1.0, 3.0, 2.0], [2.0, 5.0, 2.0]]
    with pytest.raises(ValueError):
        extrapolation_table(m, 2.0, 0.0, 1.0)


@pytest.fixture(scope="module")
def demo_clean_model():
    spec = SignalSpec(DEMO)
    t = np.arange(0, 20001.0)
    hist = run_uniform(5, derivative(spec, t, 0).tolist())
    return TaylorModel(20000.0, tuple(hist[-1]))


def test_demo_extrapolation_matches_truth(demo_clean_model):
    tau = np.arange(19000.0, 20101.0)
    truth = derivative(SignalSpec(DEMO), tau, 0)
    assert np.max(np.abs(demo_clean_model(tau) - truth)) <= 10.0


def test_demo_high_order_coeffs(demo_clean_model):
    k = extract_poly_coeffs(demo_clean_model)
    for got, want in zip(k[2:], DEMO[2:]):
        assert abs(got / want - 1) <= 0.01
