"""Source and channel description, and single-click detection statistics.

Charlie interferes the two weak coherent pulses on a beam splitter followed by
two threshold detectors ``L`` and ``R``. For intensities ``k_a``, ``k_b`` and
global phase difference ``phi`` the probabilities that exactly one detector
clicks are::

    y     = exp(-(eta_a k_a + eta_b k_b) / 2) * (1 - p_d)
    omega = sqrt(eta_a k_a eta_b k_b)
    q_L   = y * (exp(+omega cos phi) - y)
    q_R   = y * (exp(-omega cos phi) - y)

Averaging ``q_L + q_R`` over a uniform phase gives ``2 y (I0(omega) - y)``.
``y**2`` is the probability that neither detector clicks; the remainder
``1 - q_L - q_R - y**2`` is the double-click probability.

Everything here broadcasts over numpy arrays, so the same functions serve
single evaluations, phase grids and whole optimizer populations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from asyncmdi.exceptions import DomainError, ParameterError

#: Largest argument for which :func:`bessel_i0` meets its 1e-12 accuracy target.
I0_MAX_ARG = 10.0
_I0_TERMS = 48


@dataclass(frozen=True)
class ChannelConfig:
    """Fiber and detector parameters.

    Attributes:
        l_a: Alice-Charlie fiber length in km.
        l_b: Bob-Charlie fiber length in km.
        alpha: Fiber attenuation in dB/km.
        eta_d: Detector efficiency, shared by both detectors.
        p_d: Dark count probability per pulse per detector.
    """

    l_a: float
    l_b: float
    alpha: float = 0.165
    eta_d: float = 0.7
    p_d: float = 1e-8

    def __post_init__(self):
        if self.l_a < 0 or self.l_b < 0:
            raise ParameterError("fiber lengths must be nonnegative")
        if self.alpha < 0:
            raise ParameterError("attenuation must be nonnegative")
        if not 0 < self.eta_d <= 1:
            raise ParameterError("detector efficiency must lie in (0, 1]")
        if not 0 <= self.p_d < 1:
            raise ParameterError("dark count probability must lie in [0, 1)")

    @property
    def eta_a(self) -> float:
        return self.eta_d * 10 ** (-self.alpha * self.l_a / 10)

    @property
    def eta_b(self) -> float:
        return self.eta_d * 10 ** (-self.alpha * self.l_b / 10)

    @property
    def distance(self) -> float:
        return self.l_a + self.l_b

    @property
    def eta_channel(self) -> float:
        """Fiber-only transmittance between Alice and Bob."""
        return 10 ** (-self.alpha * self.distance / 10)

    def with_lengths(self, l_a: float, l_b: float) -> ChannelConfig:
        return ChannelConfig(l_a, l_b, self.alpha, self.eta_d, self.p_d)


@dataclass(frozen=True)
class SourceConfig:
    """Four-intensity decoy source of one user.

    The preserve-vacuum and declare-vacuum intensities are both exactly zero
    and are therefore not stored. Fields may hold numpy arrays of equal shape
    when a whole population of candidate sources is evaluated at once.
    """

    mu: ArrayLike
    nu: ArrayLike
    p_mu: ArrayLike
    p_nu: ArrayLike
    p_o: ArrayLike
    p_ohat: ArrayLike

    def __post_init__(self):
        mu, nu = np.asarray(self.mu), np.asarray(self.nu)
        if not np.all(nu > 0) or not np.all(mu > nu):
            raise ParameterError("source intensities must satisfy mu > nu > 0")
        probs = np.array(np.broadcast_arrays(self.p_mu, self.p_nu, self.p_o, self.p_ohat), dtype=float)
        if np.any(probs < 0):
            raise ParameterError("send probabilities must be nonnegative")
        if not np.allclose(probs.sum(axis=0), 1.0, rtol=0, atol=1e-9):
            raise ParameterError("send probabilities must sum to 1")

    @property
    def p_vac(self):
        """Probability of sending either vacuum state."""
        return self.p_o + self.p_ohat

    def is_scalar(self) -> bool:
        return np.ndim(self.mu) == 0

    def as_dict(self) -> dict[str, float]:
        return {
            "mu": float(self.mu),
            "nu": float(self.nu),
            "p_mu": float(self.p_mu),
            "p_nu": float(self.p_nu),
            "p_o": float(self.p_o),
            "p_ohat": float(self.p_ohat),
        }


def bessel_i0(x: ArrayLike):
    """Modified Bessel function of the first kind, order zero.

    Power series ``sum_k (x^2/4)^k / (k!)^2`` truncated at 48 terms, which is
    accurate to better than 1e-12 relative for ``|x| <= 10``. The click model
    only needs ``omega <= max intensity``, far inside that range.

    Raises:
        DomainError: for ``|x| > 10``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > I0_MAX_ARG):
        raise DomainError(f"bessel_i0 series is only validated for |x| <= {I0_MAX_ARG}")
    total = 1.0 + _i0_minus_one(x)
    return float(total) if total.ndim == 0 else total


def _i0_minus_one(x: np.ndarray) -> np.ndarray:
    quarter = x * x / 4
    term = np.ones_like(x)
    total = np.zeros_like(x)
    for k in range(1, _I0_TERMS):
        term = term * quarter / (k * k)
        total = total + term
    return total


def _check_intensity(*ks):
    for k in ks:
        if np.any(np.asarray(k) < 0):
            raise ParameterError("intensities must be nonnegative")


def no_click_and_coupling(k_a: ArrayLike, k_b: ArrayLike, ch: ChannelConfig):
    """Return ``(y, omega)`` for the given intensities."""
    _check_intensity(k_a, k_b)
    ma = ch.eta_a * np.asarray(k_a, dtype=float)
    mb = ch.eta_b * np.asarray(k_b, dtype=float)
    y = np.exp(-(ma + mb) / 2) * (1 - ch.p_d)
    omega = np.sqrt(ma * mb)
    return y, omega


def single_click_gains(k_a: ArrayLike, k_b: ArrayLike, phi: ArrayLike, ch: ChannelConfig):
    """Probabilities ``(q_L, q_R)`` that only detector L (R) clicks."""
    y, omega = no_click_and_coupling(k_a, k_b, ch)
    c = omega * np.cos(phi)
    q_l = y * (np.exp(c) - y)
    q_r = y * (np.exp(-c) - y)
    return q_l, q_r


def phase_gain(k_a: ArrayLike, k_b: ArrayLike, phi: ArrayLike, ch: ChannelConfig):
    """Single-click gain ``q_L + q_R`` at a fixed phase difference."""
    q_l, q_r = single_click_gains(k_a, k_b, phi, ch)
    return q_l + q_r


def average_gain(k_a: ArrayLike, k_b: ArrayLike, ch: ChannelConfig):
    """Phase-averaged single-click gain ``2 y (I0(omega) - y)``."""
    y, omega = no_click_and_coupling(k_a, k_b, ch)
    bessel_i0(omega)  # domain check
    # I0 - y = (I0 - 1) + (1 - y), each part free of cancellation
    ma = ch.eta_a * np.asarray(k_a, dtype=float)
    mb = ch.eta_b * np.asarray(k_b, dtype=float)
    one_minus_y = -np.expm1(-(ma + mb) / 2) + ch.p_d * np.exp(-(ma + mb) / 2)
    return 2 * y * (_i0_minus_one(np.asarray(omega, dtype=float)) + one_minus_y)


def pair_count(n_pulses: ArrayLike, p_ka: ArrayLike, p_kb: ArrayLike, q: ArrayLike):
    """Expected number of single-click events for one intensity pair."""
    return np.asarray(n_pulses, dtype=float) * p_ka * p_kb * q
