"""Z matching, case statistics, pair yields and X-basis error counts."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncmdi.channel import ChannelConfig, single_click_gains
from asyncmdi.exceptions import ParameterError
from asyncmdi.matching import (
    MatchingConfig,
    case_probabilities,
    pair_error_fraction,
    pair_yield_poisson,
    slice_error_fraction,
    x_error_arbitrary,
    x_error_short,
    z_match_arbitrary,
    z_match_short,
)

counts = st.floats(0.0, 1e12)
NOISELESS = ChannelConfig(150.0, 150.0, p_d=0.0)


def test_z_match_no_data():
    z = z_match_arbitrary(0, 0, 0, 0)
    assert (z.n_C, z.n_E, z.n_z, z.E_z) == (0.0, 0.0, 0.0, 0.0)


def test_z_match_reference():
    z = z_match_arbitrary(1e6, 1e6, 1e3, 1e3)
    assert z.n_C == pytest.approx(999000.999000999, rel=1e-14)
    assert z.n_E == pytest.approx(0.999000999000999, rel=1e-14)


def test_z_match_negative():
    with pytest.raises(ParameterError):
        z_match_arbitrary(-1, 0, 0, 0)


def test_z_match_short_scales_windows():
    one = z_match_arbitrary(3.0, 4.0, 1.0, 2.0)
    many = z_match_short(3.0, 4.0, 1.0, 2.0, d=250.0)
    assert many.n_C == pytest.approx(250 * one.n_C)
    assert many.n_E == pytest.approx(250 * one.n_E)
    with pytest.raises(ParameterError):
        z_match_short(1, 1, 1, 1, d=0.5)


def test_case_probabilities_edges():
    assert case_probabilities(0.3, 1.0, 1e6)[1] == 1.0
    p_c1, p_c2, nbar = case_probabilities(0.0, 5e4, 1e12)
    assert (p_c1, p_c2, nbar) == (0.0, 1.0, 0.0)


def test_case_probabilities_reference():
    _, p_c2, nbar = case_probabilities(2e-4, 5e4, 1e12)
    assert p_c2 == pytest.approx(2.0578579469935698e-9, rel=1e-9)
    assert nbar == pytest.approx(0.41157158939871397, rel=1e-9)


def test_case_probabilities_validation():
    with pytest.raises(ParameterError):
        case_probabilities(1.5, 10, 10)
    with pytest.raises(ParameterError):
        case_probabilities(0.1, 0.5, 10)


def test_pair_yield_reference():
    assert pair_yield_poisson(0.0, 16) == 0.0
    assert pair_yield_poisson(50.0, 16) == pytest.approx(3.09375, rel=1e-14)
    assert pair_yield_poisson(1.0, 16) == pytest.approx(0.035479227601144147, rel=1e-13)


def test_pair_yield_explicit_sum():
    # Oracle: sum over Poisson counts n of floor(n / 2) pairs.
    from scipy.stats import poisson

    lam = 3.7
    n = np.arange(200)
    expected = float(np.sum(poisson.pmf(n, lam) * (n // 2))) * 2 / 16
    assert pair_yield_poisson(lam, 16) == pytest.approx(expected, rel=1e-12)


def test_pair_yield_validation():
    with pytest.raises(ParameterError):
        pair_yield_poisson(-1.0, 16)
    with pytest.raises(ParameterError):
        pair_yield_poisson(1.0, 15)


def test_matching_config_validation():
    with pytest.raises(ParameterError):
        MatchingConfig(mode="other")
    with pytest.raises(ParameterError):
        MatchingConfig(M=7)
    with pytest.raises(ParameterError):
        MatchingConfig(F=1e9, T_c=1e-10)
    assert MatchingConfig(F=1e9, T_c=50e-6).N_Tc == pytest.approx(5e4)


def test_x_error_vacuum_is_zero():
    assert x_error_short(0.0, 0.0, 16, 0.1, 1e6, NOISELESS) == 0.0
    assert x_error_arbitrary(0.0, 0.0, 0.1, 1e12, 0.2, 0.2, NOISELESS) == 0.0
    assert x_error_short(0.1, 0.1, 16, 0.1, 0.0, NOISELESS) == 0.0


def test_x_error_arbitrary_against_phase_sampling():
    # 10^6 uniform phase draws of the same integrand, compared within 5 SE
    nu, sigma = 0.05, 0.0
    rng = np.random.default_rng(7)
    phi = rng.uniform(0, 2 * np.pi, 1_000_000)
    ql1, qr1 = single_click_gains(nu, nu, phi, NOISELESS)
    ql2, qr2 = single_click_gains(nu, nu, phi + sigma, NOISELESS)
    sample = (ql1 * qr2 + qr1 * ql2) / (ql2 + qr2)
    scale = 1e12 * 0.2 * 0.2 / 2
    analytic = x_error_arbitrary(nu, nu, sigma, 1e12, 0.2, 0.2, NOISELESS)
    mc = scale * sample.mean()
    se = scale * sample.std(ddof=1) / math.sqrt(sample.size)
    assert abs(analytic - mc) < 5 * se
    assert analytic > 0


def test_slice_average_converges_to_continuous():
    nu, sigma = 0.02, math.pi / 10
    phi = np.linspace(0, np.pi, 20001)
    f = pair_error_fraction(nu, nu, phi, sigma, NOISELESS)
    continuous = float(np.trapezoid(f, phi) / np.pi)
    assert slice_error_fraction(nu, nu, 1024, sigma, NOISELESS) == pytest.approx(continuous, rel=1e-2)


@given(st.floats(0.0, 1e4), st.floats(0.0, 1e4), st.sampled_from([2, 4, 16, 64]))
def test_pair_yield_monotone_and_capped(l1, l2, M):
    lo, hi = sorted((l1, l2))
    assert pair_yield_poisson(lo, M) <= pair_yield_poisson(hi, M) + 1e-12
    assert pair_yield_poisson(hi, M) <= hi / M + 1e-12


@given(st.floats(0.0, 1.0), st.floats(1.0, 1e6), st.floats(1.0, 1e13))
def test_case_probabilities_sum(p_bar, N_Tc, N):
    p_c1, p_c2, nbar = case_probabilities(p_bar, N_Tc, N)
    assert p_c1 + p_c2 == 1.0
    assert 0.0 <= p_c2 <= 1.0 and nbar >= 0.0


@given(counts, counts, counts, counts)
def test_z_match_capped(x_mu_o, x_o_mu, x_mu_mu, x_o_o):
    z = z_match_arbitrary(x_mu_o, x_o_mu, x_mu_mu, x_o_o)
    x0, x1 = x_o_mu + x_o_o, x_mu_o + x_mu_mu
    assert z.n_z <= min(x0, x1) * (1 + 1e-12) + 1e-9
    assert 0.0 <= z.E_z <= 1.0


@given(st.floats(0.001, 0.5), st.floats(0.001, 0.5), st.floats(0.0, 3.0), st.floats(0.0, 1e9))
def test_errors_not_above_pairs(nu_a, nu_b, sigma, n_pairs):
    m = x_error_short(nu_a, nu_b, 16, sigma, n_pairs, ChannelConfig(100.0, 120.0))
    assert 0.0 <= m <= n_pairs * (1 + 1e-12)
