"""Click probabilities of the interference measurement."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import i0
from scipy.stats import poisson

from asyncmdi.channel import (
    ChannelConfig,
    SourceConfig,
    average_gain,
    bessel_i0,
    no_click_and_coupling,
    pair_count,
    phase_gain,
    single_click_gains,
)
from asyncmdi.exceptions import DomainError, ParameterError

# eta_d = 1 and zero length give eta_a = eta_b = 1, so k is the arriving mean
UNIT = ChannelConfig(0.0, 0.0, eta_d=1.0, p_d=0.0)

intens = st.floats(0.0, 2.0)
lengths = st.floats(0.0, 300.0)
phases = st.floats(0.0, 2 * math.pi)
# Operating range of the optimizer. Far above it double clicks dominate and
# the single-click gain stops falling with loss.
operating = st.floats(0.0, 1.0)


def _quadrature(k_a, k_b, ch, nodes=20000):
    phi = 2 * np.pi * np.arange(nodes) / nodes
    return float(np.mean(phase_gain(k_a, k_b, phi, ch)))


def test_zero_phase_ports():
    q_l, q_r = single_click_gains(0.01, 0.01, 0.0, UNIT)
    assert q_r == pytest.approx(0.0, abs=1e-18)
    assert q_l == pytest.approx(0.019801326693244698, rel=1e-12)


@pytest.mark.parametrize("phi", [0.0, 1.0, math.pi])
def test_dark_count_only(phi):
    ch = ChannelConfig(10.0, 20.0, p_d=1e-6)
    q_l, q_r = single_click_gains(0.0, 0.0, phi, ch)
    assert q_l == pytest.approx(1e-6 * (1 - 1e-6), rel=1e-12)
    assert q_r == pytest.approx(q_l, rel=1e-12)


def test_average_gain_dark_only():
    ch = ChannelConfig(0.0, 0.0, p_d=1e-8)
    assert average_gain(0.0, 0.0, ch) == pytest.approx(2 * (1 - 1e-8) * 1e-8, rel=1e-12)


def test_average_gain_single_sender():
    ch = ChannelConfig(50.0, 70.0)
    y, _ = no_click_and_coupling(0.3, 0.0, ch)
    assert average_gain(0.3, 0.0, ch) == pytest.approx(2 * y * (1 - y), rel=1e-14)


def test_average_gain_matches_quadrature():
    assert average_gain(0.01, 0.01, UNIT) == pytest.approx(_quadrature(0.01, 0.01, UNIT), rel=1e-10)


def test_photon_number_expansion():
    # n photons from one user: each reaches L or R with probability eta/2.
    # Single-click yield Y_n = 2[(1 - eta/2)^n (1 - pd) - (1 - eta)^n (1 - pd)^2].
    ch = ChannelConfig(100.0, 100.0, p_d=1e-7)
    eta, pd, k = ch.eta_a, ch.p_d, 0.4
    n = np.arange(0, 30)
    y_n = 2 * ((1 - eta / 2) ** n * (1 - pd) - (1 - eta) ** n * (1 - pd) ** 2)
    expected = float(np.sum(poisson.pmf(n, k) * y_n))
    assert average_gain(k, 0.0, ch) == pytest.approx(expected, rel=1e-10)


def test_bessel_against_scipy():
    x = np.linspace(0, 10, 401)
    np.testing.assert_allclose(bessel_i0(x), i0(x), rtol=1e-12)
    assert bessel_i0(0.0) == 1.0


def test_bessel_domain():
    with pytest.raises(DomainError):
        bessel_i0(10.5)


def test_negative_intensity():
    with pytest.raises(ParameterError):
        single_click_gains(-0.1, 0.1, 0.0, UNIT)


def test_channel_validation():
    with pytest.raises(ParameterError):
        ChannelConfig(-1.0, 0.0)
    with pytest.raises(ParameterError):
        ChannelConfig(0.0, 0.0, eta_d=0.0)
    with pytest.raises(ParameterError):
        ChannelConfig(0.0, 0.0, p_d=1.0)


def test_source_validation():
    with pytest.raises(ParameterError):
        SourceConfig(mu=0.1, nu=0.2, p_mu=0.25, p_nu=0.25, p_o=0.25, p_ohat=0.25)
    with pytest.raises(ParameterError):
        SourceConfig(mu=0.3, nu=0.1, p_mu=0.5, p_nu=0.25, p_o=0.25, p_ohat=0.25)


def test_pair_count():
    assert pair_count(0, 0.5, 0.5, 1e-3) == 0.0
    assert pair_count(1e12, 0.5, 0.5, 4e-4) == pytest.approx(1e8, rel=1e-14)


def test_transmittance():
    ch = ChannelConfig(100.0, 200.0)
    assert ch.eta_a == pytest.approx(0.7 * 10 ** (-1.65), rel=1e-14)
    assert ch.eta_channel == pytest.approx(10 ** (-4.95), rel=1e-14)
    assert ch.distance == 300.0


@given(intens, intens, phases, lengths, lengths)
def test_gains_bounded(k_a, k_b, phi, l_a, l_b):
    ch = ChannelConfig(l_a, l_b, p_d=1e-8)
    y, omega = no_click_and_coupling(k_a, k_b, ch)
    q_l, q_r = single_click_gains(k_a, k_b, phi, ch)
    assert q_l >= -1e-15 and q_r >= -1e-15
    assert q_l + q_r <= 2 * y * (math.exp(omega) - y) + 1e-15


@given(intens, intens, lengths, lengths)
def test_average_equals_phase_mean(k_a, k_b, l_a, l_b):
    ch = ChannelConfig(l_a, l_b, p_d=1e-8)
    assert average_gain(k_a, k_b, ch) == pytest.approx(_quadrature(k_a, k_b, ch, 4096), rel=1e-10, abs=1e-15)


@given(operating, operating, lengths, st.floats(0.0, 50.0))
def test_gain_monotone_in_length(k_a, k_b, l, extra):
    near = average_gain(k_a, k_b, ChannelConfig(l, l))
    assert average_gain(k_a, k_b, ChannelConfig(l + extra, l)) <= near * (1 + 1e-12) + 1e-300
    assert average_gain(k_a, k_b, ChannelConfig(l, l + extra)) <= near * (1 + 1e-12) + 1e-300


@given(operating, operating, lengths, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_gain_monotone_in_efficiency(k_a, k_b, l, e1, e2):
    lo, hi = min(e1, e2), max(e1, e2)
    g_lo = average_gain(k_a, k_b, ChannelConfig(l, l, eta_d=lo))
    g_hi = average_gain(k_a, k_b, ChannelConfig(l, l, eta_d=hi))
    assert g_hi >= g_lo * (1 - 1e-12)
