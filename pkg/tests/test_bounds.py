"""Concentration bounds, the sampling gap and the binary entropy.

Reference values were computed with 40-digit arithmetic directly from the
closed-form expressions.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncmdi import bounds
from asyncmdi.exceptions import DomainError, ParameterError

BETA = -math.log(1e-10)

counts = st.floats(min_value=0.0, max_value=1e13, allow_nan=False)
epsilons = st.floats(min_value=1e-15, max_value=0.999)
rates = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_observed_bounds_at_zero():
    lo, hi = bounds.chernoff_observed_bounds(0.0, 1e-10)
    assert lo == 0.0
    assert hi == pytest.approx(BETA, rel=1e-14)


def test_observed_bounds_reference():
    lo, hi = bounds.chernoff_observed_bounds(1e6, 1e-10)
    assert hi == pytest.approx(1006797.6631159142, rel=1e-13)
    assert lo == pytest.approx(993213.8595755849, rel=1e-13)


def test_expected_bounds_reference():
    lo, hi = bounds.chernoff_expected_bounds(1e6, 1e-10)
    assert hi == pytest.approx(1006809.2053393971, rel=1e-13)
    assert lo == pytest.approx(993202.3368840858, rel=1e-13)
    lo0, hi0 = bounds.chernoff_expected_bounds(0.0, 1e-10)
    assert lo0 == 0.0
    assert hi0 == pytest.approx(2 * BETA, rel=1e-14)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 2.0])
def test_bad_epsilon(eps):
    with pytest.raises(ParameterError):
        bounds.chernoff_observed_bounds(1.0, eps)


def test_negative_count_rejected():
    with pytest.raises(ParameterError):
        bounds.chernoff_expected_bounds(-1.0, 1e-10)


def test_arrays_broadcast():
    lo, hi = bounds.chernoff_observed_bounds(np.array([0.0, 1e6]), 1e-10)
    assert lo.shape == hi.shape == (2,)
    assert hi[1] == pytest.approx(1006797.6631159142, rel=1e-13)


def test_sampling_gap_reference():
    assert bounds.sampling_gap(1e6, 1e6, 0.25, 1e-10) == pytest.approx(0.0035134594030217705, rel=1e-10)
    small_k = bounds.sampling_gap(1e6, 1e3, 0.1, 1e-10)
    assert small_k == pytest.approx(0.07590039082610199, rel=1e-10)
    assert small_k > bounds.sampling_gap(1e6, 1e6, 0.1, 1e-10)


def test_sampling_gap_half_rate_form():
    n = k = 1e6
    g = (n + k) / (n * k) * math.log((n + k) / (2 * math.pi * n * k * 0.25 * 1e-20))
    expected = math.sqrt(n**2 * g**2 / (n + k) ** 2 + g) / (2 + 2 * n**2 * g / (n + k) ** 2)
    assert bounds.sampling_gap(n, k, 0.5, 1e-10) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_sampling_gap_domain(lam):
    with pytest.raises(DomainError):
        bounds.sampling_gap(10.0, 10.0, lam, 1e-10)


def test_sampling_gap_small_samples():
    with pytest.raises(ParameterError):
        bounds.sampling_gap(0.5, 10.0, 0.1, 1e-10)


def test_binary_entropy_values():
    assert bounds.binary_entropy(0.5) == 1.0
    assert bounds.binary_entropy(0.0) == 0.0
    assert bounds.binary_entropy(1.0) == 0.0
    assert bounds.binary_entropy(0.11) == pytest.approx(0.499915958164528, rel=1e-12)


@pytest.mark.parametrize("x", [-0.01, 1.01, float("nan")])
def test_binary_entropy_domain(x):
    with pytest.raises(DomainError):
        bounds.binary_entropy(x)


@given(counts, epsilons)
def test_observed_bounds_contain_expectation(x, eps):
    lo, hi = bounds.chernoff_observed_bounds(x, eps)
    assert lo <= x <= hi


@given(counts, epsilons)
def test_expected_bounds_contain_observation(x, eps):
    lo, hi = bounds.chernoff_expected_bounds(x, eps)
    assert lo <= x <= hi


@given(counts, epsilons, epsilons)
def test_widths_grow_as_eps_shrinks(x, e1, e2):
    tight, loose = min(e1, e2), max(e1, e2)
    lo_t, hi_t = bounds.chernoff_observed_bounds(x, tight)
    lo_l, hi_l = bounds.chernoff_observed_bounds(x, loose)
    assert hi_t >= hi_l and lo_t <= lo_l
    lo_t, hi_t = bounds.chernoff_expected_bounds(x, tight)
    lo_l, hi_l = bounds.chernoff_expected_bounds(x, loose)
    assert hi_t >= hi_l and lo_t <= lo_l


@given(st.floats(1, 1e12), st.floats(1, 1e12), rates, epsilons, epsilons)
def test_sampling_gap_nonnegative_and_monotone(n, k, lam, e1, e2):
    tight, loose = min(e1, e2), max(e1, e2)
    g_t = bounds.sampling_gap(n, k, lam, tight)
    g_l = bounds.sampling_gap(n, k, lam, loose)
    assert g_t >= 0 and g_l >= 0
    assert g_t >= g_l * (1 - 1e-12)


@given(st.floats(0, 1))
def test_entropy_symmetric(x):
    assert bounds.binary_entropy(x) == pytest.approx(bounds.binary_entropy(1 - x), abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_entropy_concave(a, b, t):
    mid = bounds.binary_entropy(t * a + (1 - t) * b)
    chord = t * bounds.binary_entropy(a) + (1 - t) * bounds.binary_entropy(b)
    assert mid >= chord - 1e-12
