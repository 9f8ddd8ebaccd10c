"""Post-matching statistics for the Z and X bases.

Two matching regimes are modelled:

``arbitrary``
    Detection events anywhere in the run may be paired (phase tracking and
    locking keep every time bin phase-correlated).
``short``
    Only events inside a window of ``T_c`` seconds are paired. Detections with
    no neighbour within ``T_c`` (case 2) are discarded, and the run is treated
    as ``d = N / N_Tc`` identical windows of ``N_Tc = T_c F`` bins.

Z-basis matching pairs one of Alice's signal bins with one of her
preserve-vacuum bins; the fraction of correct and erroneous pairs follows
from Bob's intensity choices in the two bins. X-basis pairs are formed from
decoy-decoy events whose announced phase differences coincide or differ by
pi; the error probability of a pair depends on the residual misalignment
``sigma`` between its two bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from asyncmdi.channel import ChannelConfig, single_click_gains
from asyncmdi.exceptions import NumericError, ParameterError

MODES = ("arbitrary", "short")


@dataclass(frozen=True)
class MatchingConfig:
    """Matching regime and timing.

    Attributes:
        mode: ``"arbitrary"`` or ``"short"``.
        F: System repetition rate in Hz.
        T_c: Matching window in seconds.
        M: Number of phase slices, even.
        sigma: Base X-basis misalignment angle in radians.
        Lambda: Abort threshold on the number of case-2 events.
        quad_nodes: Trapezoid nodes for continuous phase integrals.
    """

    mode: str = "short"
    F: float = 1e9
    T_c: float = 50e-6
    M: int = 16
    sigma: float = 0.0
    Lambda: int = 10
    quad_nodes: int = 1024

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"matching mode must be one of {MODES}")
        if self.F <= 0 or self.T_c <= 0:
            raise ParameterError("repetition rate and matching window must be positive")
        if self.M < 2 or self.M % 2:
            raise ParameterError("phase slice count must be an even integer >= 2")
        if not 0 <= self.sigma < np.pi:
            raise ParameterError("misalignment must lie in [0, pi)")
        if self.N_Tc < 1:
            raise ParameterError("matching window must contain at least one time bin")
        if self.Lambda < 0:
            raise ParameterError("abort threshold must be nonnegative")
        if self.quad_nodes < 8:
            raise ParameterError("need at least 8 quadrature nodes")

    @property
    def N_Tc(self) -> float:
        return self.T_c * self.F


@dataclass(frozen=True)
class ZMatchCounts:
    n_C: ArrayLike
    n_E: ArrayLike

    @property
    def n_z(self):
        return self.n_C + self.n_E

    @property
    def E_z(self):
        n_z = np.asarray(self.n_z, dtype=float)
        safe = np.where(n_z > 0, n_z, 1.0)
        e = np.where(n_z > 0, np.asarray(self.n_E) / safe, 0.0)
        return float(e) if e.ndim == 0 else e


def z_match_arbitrary(x_mu_o, x_o_mu, x_mu_mu, x_o_o) -> ZMatchCounts:
    """Correct and error Z pairs from the four Z-basis event counts.

    Counts are indexed ``x_<alice><bob>``; ``o`` is the preserve-vacuum state.
    When no data exists (``x_max = 0``) both counts are zero.
    """
    x_mu_o, x_o_mu, x_mu_mu, x_o_o = (np.asarray(v, dtype=float) for v in (x_mu_o, x_o_mu, x_mu_mu, x_o_o))
    if any(np.any(v < 0) for v in (x_mu_o, x_o_mu, x_mu_mu, x_o_o)):
        raise ParameterError("counts must be nonnegative")
    x_max = np.maximum(x_o_mu + x_o_o, x_mu_o + x_mu_mu)
    safe = np.where(x_max > 0, x_max, 1.0)
    n_c = np.where(x_max > 0, x_o_mu * x_mu_o / safe, 0.0)
    n_e = np.where(x_max > 0, x_o_o * x_mu_mu / safe, 0.0)
    if n_c.ndim == 0:
        return ZMatchCounts(float(n_c), float(n_e))
    return ZMatchCounts(n_c, n_e)


def case_probabilities(p_bar: ArrayLike, N_Tc: float, N: float):
    """Case-1/case-2 probabilities of a detection and the expected case-2 count.

    Returns:
        ``(p_c1, p_c2, Nbar_c2)`` where ``p_c2 = (1 - p_bar)^(2 N_Tc - 2)``
        is the chance that none of the neighbouring bins within ``T_c``
        holds another detection.
    """
    p_bar = np.asarray(p_bar, dtype=float)
    if np.any(p_bar < 0) or np.any(p_bar > 1):
        raise ParameterError("average detection probability must lie in [0, 1]")
    if N_Tc < 1:
        raise ParameterError("N_Tc must be at least 1")
    # log1p keeps precision for p_bar ~ 1e-4 and exponents ~ 1e5
    inner = np.where(p_bar < 1, p_bar, 0.0)
    p_c2 = np.exp((2 * N_Tc - 2) * np.log1p(-inner))
    p_c2 = np.where(p_bar >= 1, 0.0 if N_Tc > 1 else 1.0, p_c2)
    p_c1 = 1.0 - p_c2
    nbar = N * p_c2 * p_bar
    if p_c2.ndim == 0:
        return float(p_c1), float(p_c2), float(nbar)
    return p_c1, p_c2, nbar


def z_match_short(x_mu_o, x_o_mu, x_mu_mu, x_o_o, d: float) -> ZMatchCounts:
    """Z pairs summed over ``d`` identical windows.

    Arguments are the per-window, case-1 filtered counts. Because windows are
    identical the window sum is ``d`` times the single-window result.
    """
    if d < 1:
        raise ParameterError("need at least one window")
    one = z_match_arbitrary(x_mu_o, x_o_mu, x_mu_mu, x_o_o)
    return ZMatchCounts(d * one.n_C, d * one.n_E)


def pair_yield_poisson(lam: ArrayLike, M: int):
    """Expected decoy-decoy pairs per window from a Poisson event count.

    ``lam`` is the mean number of decoy-decoy detections in a window. An odd
    count leaves one event unpaired; with ``P(odd) = (1 - exp(-2 lam)) / 2``
    the yield is ``(lam - P(odd)) / M``. For small ``lam`` this agrees to
    leading order (``lam**2 / M``) with explicit pairing inside the ``M / 2``
    phase groups.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ParameterError("Poisson mean must be nonnegative")
    if M < 2 or M % 2:
        raise ParameterError("M must be an even integer >= 2")
    # -expm1(-2 lam) keeps the cancellation accurate for tiny lam
    out = (lam + np.expm1(-2 * lam) / 2) / M
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def pair_error_fraction(k_a, k_b, phi, sigma, ch: ChannelConfig):
    """Probability that a matched X pair is an error.

    The first bin of the pair sits at phase ``phi`` and the second at
    ``phi + sigma``. Phases where both gains vanish contribute zero.
    """
    ql1, qr1 = single_click_gains(k_a, k_b, phi, ch)
    ql2, qr2 = single_click_gains(k_a, k_b, np.asarray(phi) + sigma, ch)
    num = ql1 * qr2 + qr1 * ql2
    den = (ql1 + qr1) * (ql2 + qr2)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def slice_phases(M: int) -> np.ndarray:
    """Left edges ``2 pi m / M`` of the ``M`` phase slices."""
    return 2 * np.pi * np.arange(M) / M


def slice_error_fraction(k_a, k_b, M: int, sigma, ch: ChannelConfig):
    """Average pair error probability over the ``M / 2`` matching groups."""
    phases = slice_phases(M)[: M // 2]
    ka = np.asarray(k_a, dtype=float)[..., None]
    kb = np.asarray(k_b, dtype=float)[..., None]
    sig = np.asarray(sigma, dtype=float)[..., None]
    f = pair_error_fraction(ka, kb, phases, sig, ch)
    return np.sum(f, axis=-1) * 2 / M


def x_error_short(nu_a, nu_b, M: int, sigma, n_pairs, ch: ChannelConfig):
    """Expected X-basis error count for ``n_pairs`` decoy-decoy pairs."""
    n_pairs = np.asarray(n_pairs, dtype=float)
    if np.any(n_pairs < 0):
        raise ParameterError("pair count must be nonnegative")
    out = n_pairs * slice_error_fraction(nu_a, nu_b, M, sigma, ch)
    return float(out) if np.ndim(out) == 0 else out


def quadrature_phases(nodes: int) -> np.ndarray:
    """Equally spaced trapezoid nodes on ``[0, 2 pi)``."""
    return 2 * np.pi * np.arange(nodes) / nodes


def x_error_arbitrary(nu_a, nu_b, sigma, N, p_nu_a, p_nu_b, ch: ChannelConfig, nodes: int = 1024):
    """Expected X-basis error count under arbitrary-time matching.

    Evaluates ``N p_a p_b / (4 pi)`` times the phase integral of
    ``[q_L(phi) q_R(phi+sigma) + q_R(phi) q_L(phi+sigma)] / q(phi+sigma)``
    with the periodic trapezoid rule.

    Raises:
        NumericError: if the integrand is not finite.
    """
    phases = quadrature_phases(nodes)
    ka = np.asarray(nu_a, dtype=float)[..., None]
    kb = np.asarray(nu_b, dtype=float)[..., None]
    sig = np.asarray(sigma, dtype=float)[..., None]
    ql1, qr1 = single_click_gains(ka, kb, phases, ch)
    ql2, qr2 = single_click_gains(ka, kb, phases + sig, ch)
    q2 = ql2 + qr2
    num = ql1 * qr2 + qr1 * ql2
    integrand = np.where(q2 > 0, num / np.where(q2 > 0, q2, 1.0), 0.0)
    if not np.all(np.isfinite(integrand)):
        raise NumericError("non-finite X-basis error integrand")
    mean = np.mean(integrand, axis=-1)
    out = np.asarray(N, dtype=float) * p_nu_a * p_nu_b * mean / 2
    return float(out) if np.ndim(out) == 0 else out


def drift_averaged_error_fraction(k_a, k_b, M: int, sigma0: float, drift_span: float,
                                  ch: ChannelConfig, nodes: int = 257):
    """Pair error probability when the misalignment grows linearly in time.

    Two events placed uniformly at random in one window are separated by a
    fraction ``u`` of the window with density ``2 (1 - u)``; the pair then
    sees misalignment ``sigma0 + drift_span * u``. Integrated with Simpson's
    rule over ``u``.
    """
    from scipy.integrate import simpson

    u = np.linspace(0.0, 1.0, nodes)
    f = np.array([slice_error_fraction(k_a, k_b, M, sigma0 + drift_span * ui, ch) for ui in u])
    return float(simpson(f * 2 * (1 - u), x=u))
