"""Decoy-state estimation of the single-photon and vacuum contributions.

Pipeline for one set of observations:

1. Observed counts are turned into bounds on their expectations with the
   variant Chernoff bound, and fed to the three-intensity decoy formulas for
   the single-photon yields ``y10`` (Alice one photon, Bob vacuum) and
   ``y01``.
2. Expected-value products (single-photon pairs in Z and X, vacuum events in
   Z, vacuum error terms in X) are converted back to bounds on observed
   values with the Chernoff bound.
3. The X-basis single-photon error count gives ``e11``; random sampling
   without replacement lifts it to a phase-error bound ``phi11`` for the
   Z-basis single-photon pairs.

Intensity labels: ``mu`` signal, ``nu`` decoy, ``o`` preserve-vacuum,
``ohat`` declare-vacuum. ``x[(ka, kb)]`` is the number of single-click events
where Alice sent ``ka`` and Bob sent ``kb``.

Every concentration-bound call goes through a :class:`BoundCounter` so the
failure-probability budget can be checked against the number of uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from asyncmdi import bounds
from asyncmdi.channel import SourceConfig
from asyncmdi.exceptions import NumericError, ParameterError
from asyncmdi.matching import ZMatchCounts

LABELS = ("mu", "nu", "o", "ohat")
VACUUM_ERROR_RATE = 0.5


class BoundCounter:
    """Concentration-bound calls with a running use count."""

    def __init__(self, eps: float):
        self.eps = eps
        self.uses = 0

    def expected_lower(self, x):
        self.uses += 1
        return bounds.expected_lower(x, self.eps)

    def expected_upper(self, x):
        self.uses += 1
        return bounds.expected_upper(x, self.eps)

    def observed_lower(self, x):
        self.uses += 1
        return bounds.observed_lower(x, self.eps)

    def observed_upper(self, x):
        self.uses += 1
        return bounds.observed_upper(x, self.eps)


@dataclass
class ObservedCounts:
    """Observed statistics entering the estimators.

    Attributes:
        x: Single-click counts for every intensity pair.
        m_oo_d: Error count of the pooled declare-vacuum events.
        slice_pairs: Decoy-decoy X pairs per phase slice, shape ``(..., K)``.
        slice_gains: Decoy-decoy gain per phase slice, same shape.
        m_x: Total decoy-decoy X-basis error count.
    """

    x: dict[tuple[str, str], ArrayLike]
    m_oo_d: ArrayLike
    slice_pairs: np.ndarray
    slice_gains: np.ndarray
    m_x: ArrayLike

    def __post_init__(self):
        missing = [(a, b) for a in LABELS for b in LABELS if (a, b) not in self.x]
        if missing:
            raise ParameterError(f"missing counts for intensity pairs {missing}")
        for key, value in self.x.items():
            if np.any(np.asarray(value) < 0):
                raise ParameterError(f"count {key} is negative")
        if np.any(np.asarray(self.slice_pairs) < 0) or np.any(np.asarray(self.m_x) < 0):
            raise ParameterError("X-basis counts must be nonnegative")

    @property
    def x_oo_d(self):
        return self.x[("ohat", "ohat")] + self.x[("ohat", "o")] + self.x[("o", "ohat")]

    @property
    def n_x(self):
        return np.sum(self.slice_pairs, axis=-1)


@dataclass
class DecoyBounds:
    y10_lower: ArrayLike
    y01_lower: ArrayLike
    s0mu_z_lower: ArrayLike
    s11_z_lower: ArrayLike
    s11_x_lower: ArrayLike
    t11_x_upper: ArrayLike
    e11_x_upper: ArrayLike
    phi11_z_upper: ArrayLike
    failure_uses: int
    flags: dict[str, ArrayLike] = field(default_factory=dict)


def p_declared(src_a: SourceConfig, src_b: SourceConfig):
    """Probability that a bin is a declared-vacuum pair."""
    return src_a.p_ohat * src_b.p_ohat + src_a.p_ohat * src_b.p_o + src_a.p_o * src_b.p_ohat


def _div(num, den):
    den = np.asarray(den, dtype=float)
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def _x_vac_nu(obs: ObservedCounts):
    """Counts of (either vacuum, decoy) and (decoy, either vacuum)."""
    x_o_nu = obs.x[("o", "nu")] + obs.x[("ohat", "nu")]
    x_nu_o = obs.x[("nu", "o")] + obs.x[("nu", "ohat")]
    return x_o_nu, x_nu_o


@dataclass
class _YieldTerms:
    y10: ArrayLike
    y01: ArrayLike
    x_o_nu_lower: ArrayLike
    x_nu_o_lower: ArrayLike


def _yields(obs, src_a, src_b, N, counter: BoundCounter) -> _YieldTerms:
    mu_a, nu_a, mu_b, nu_b = src_a.mu, src_a.nu, src_b.mu, src_b.nu
    if np.any(np.asarray(nu_a) >= mu_a) or np.any(np.asarray(nu_b) >= mu_b):
        raise ParameterError("decoy intensity must be below signal intensity")
    x_o_nu, x_nu_o = _x_vac_nu(obs)
    pd = p_declared(src_a, src_b)

    x_o_nu_lo = counter.expected_lower(x_o_nu)
    x_oh_mu_up = counter.expected_upper(obs.x[("ohat", "mu")])
    x_d_up = counter.expected_upper(obs.x_oo_d)
    x_nu_o_lo = counter.expected_lower(x_nu_o)
    x_mu_oh_up = counter.expected_upper(obs.x[("mu", "ohat")])

    vac_rate = _div(x_d_up, pd)
    y01 = mu_b / (N * (mu_b * nu_b - nu_b**2)) * (
        np.exp(nu_b) * _div(x_o_nu_lo, src_a.p_vac * src_b.p_nu)
        - nu_b**2 / mu_b**2 * np.exp(mu_b) * _div(x_oh_mu_up, src_a.p_ohat * src_b.p_mu)
        - (mu_b**2 - nu_b**2) / mu_b**2 * vac_rate
    )
    y10 = mu_a / (N * (mu_a * nu_a - nu_a**2)) * (
        np.exp(nu_a) * _div(x_nu_o_lo, src_a.p_nu * src_b.p_vac)
        - nu_a**2 / mu_a**2 * np.exp(mu_a) * _div(x_mu_oh_up, src_a.p_mu * src_b.p_ohat)
        - (mu_a**2 - nu_a**2) / mu_a**2 * vac_rate
    )
    return _YieldTerms(np.maximum(y10, 0.0), np.maximum(y01, 0.0), x_o_nu_lo, x_nu_o_lo)


def yields_lower(obs: ObservedCounts, src_a: SourceConfig, src_b: SourceConfig, N: float,
                 eps: float, counter: BoundCounter | None = None):
    """Lower bounds ``(y10, y01)`` on the single-photon yields, clamped at 0."""
    counter = counter or BoundCounter(eps)
    terms = _yields(obs, src_a, src_b, N, counter)
    return terms.y10, terms.y01


def _z_x_max(obs: ObservedCounts):
    x0 = obs.x[("o", "mu")] + obs.x[("o", "o")]
    x1 = obs.x[("mu", "o")] + obs.x[("mu", "mu")]
    return np.maximum(x0, x1)


def s11_z_lower(y10, y01, obs: ObservedCounts, src_a, src_b, N, eps,
                counter: BoundCounter | None = None):
    """Lower bound on observed Z-basis single-photon pairs."""
    counter = counter or BoundCounter(eps)
    z10 = N * src_a.p_mu * src_b.p_o * src_a.mu * np.exp(-src_a.mu) * y10
    z01 = N * src_a.p_o * src_b.p_mu * src_b.mu * np.exp(-src_b.mu) * y01
    s_star = _div(z10 * z01, _z_x_max(obs))
    return counter.observed_lower(s_star)


def s0mu_z_lower(obs: ObservedCounts, src_a, src_b, N, z_counts: ZMatchCounts, eps,
                 counter: BoundCounter | None = None):
    """Lower bound on Z pairs where Alice sent vacuum in both bins."""
    counter = counter or BoundCounter(eps)
    pd = p_declared(src_a, src_b)
    x_d_lo = counter.expected_lower(obs.x_oo_d)
    x_oh_mu_lo = counter.expected_lower(obs.x[("ohat", "mu")])
    z00 = src_a.p_mu * src_b.p_o * np.exp(-src_a.mu) * _div(x_d_lo, pd)
    x_o_mu_lo = src_a.p_o * _div(x_oh_mu_lo, src_a.p_ohat)
    z0mu = src_a.p_mu * src_b.p_mu * np.exp(-src_a.mu) * _div(x_o_mu_lo, src_a.p_o * src_b.p_mu)
    s_star = (z_counts.n_C * _div(z00, obs.x[("mu", "o")])
              + z_counts.n_E * _div(z0mu, obs.x[("mu", "mu")]))
    return counter.observed_lower(s_star)


def s11_x_lower(slice_pairs, y10, y01, src_a, src_b, slice_gains, eps,
                counter: BoundCounter | None = None):
    """Lower bound on observed X-basis single-photon pairs.

    Raises:
        NumericError: if a slice holds pairs but has zero gain.
    """
    counter = counter or BoundCounter(eps)
    n = np.asarray(slice_pairs, dtype=float)
    q = np.asarray(slice_gains, dtype=float)
    if np.any((q <= 0) & (n > 0)):
        raise NumericError("phase slice with pairs but zero gain")
    nu_a = np.asarray(src_a.nu, dtype=float)[..., None]
    nu_b = np.asarray(src_b.nu, dtype=float)[..., None]
    damp = np.exp(-nu_a - nu_b)
    ya = nu_a * damp * np.asarray(y10, dtype=float)[..., None]
    yb = nu_b * damp * np.asarray(y01, dtype=float)[..., None]
    s_star = np.sum(n * 2 * _div(ya * yb, q * q), axis=-1)
    return counter.observed_lower(s_star)


def t11_x_upper(obs: ObservedCounts, src_a, src_b, N, eps, symmetric: bool,
                counter: BoundCounter | None = None, x_o_nu_lower=None, x_nu_o_lower=None,
                literal_vacuum_gain: bool = True):
    """Upper bound on X-basis errors of single-photon pairs.

    In the symmetric case both vacuum-decoy gains are estimated from the
    pooled count; otherwise each from its own count (reusing the lower
    bounds from the yield estimate when supplied).

    Returns:
        ``(t11, clamped)`` where ``clamped`` marks a negative intermediate.
    """
    counter = counter or BoundCounter(eps)
    e_o = VACUUM_ERROR_RATE
    x_o_nu, x_nu_o = _x_vac_nu(obs)
    if symmetric:
        pooled = counter.expected_lower(x_o_nu + x_nu_o)
        q0nu = qnu0 = _div(pooled, 2 * N * src_a.p_vac * src_b.p_nu)
    else:
        if x_o_nu_lower is None:
            x_o_nu_lower = counter.expected_lower(x_o_nu)
        if x_nu_o_lower is None:
            x_nu_o_lower = counter.expected_lower(x_nu_o)
        qnu0 = _div(x_nu_o_lower, N * src_a.p_nu * src_b.p_vac)
        q0nu = _div(x_o_nu_lower, N * src_a.p_vac * src_b.p_nu)
    # the literal form takes the vacuum gain from the declared-vacuum error
    # count, i.e. e_o times the gain; the alternative uses the full count
    m_d_up = counter.expected_upper(obs.m_oo_d if literal_vacuum_gain else obs.x_oo_d)
    q00 = _div(m_d_up, N * p_declared(src_a, src_b))

    n = np.asarray(obs.slice_pairs, dtype=float)
    q = np.asarray(obs.slice_gains, dtype=float)
    inv_sq = np.sum(_div(n, q * q), axis=-1)
    nu_a, nu_b = src_a.nu, src_b.nu
    m_0_2nu = e_o * np.exp(-2 * nu_a) * q0nu**2 * inv_sq
    m_2nu_0 = e_o * np.exp(-2 * nu_b) * qnu0**2 * inv_sq
    m_00 = e_o * np.exp(-2 * (nu_a + nu_b)) * q00**2 * inv_sq

    vac_lower = counter.observed_lower(m_0_2nu + m_2nu_0)
    m00_upper = counter.observed_upper(m_00)
    t = obs.m_x - vac_lower + m00_upper
    clamped = np.asarray(t) < 0
    return np.maximum(t, 0.0), clamped


def phi11_z_upper(s11_z, s11_x, e11_x, eps):
    """Phase-error bound of Z single-photon pairs, capped at 0.5.

    An X error rate of exactly zero is replaced by ``1 / s11_x`` before the
    sampling gap is evaluated. Rates of 0.5 or more, or fewer than one pair
    on either side, give the cap directly.

    Returns:
        ``(phi, regularized)``.
    """
    s_z = np.asarray(s11_z, dtype=float)
    s_x = np.asarray(s11_x, dtype=float)
    e = np.asarray(e11_x, dtype=float)
    valid = (s_z >= 1) & (s_x >= 1) & (e < 0.5)
    regularized = valid & (e * s_x < 1)
    e_reg = np.where(valid, np.maximum(e, 1.0 / np.where(valid, s_x, 1.0)), 0.25)
    e_reg = np.minimum(e_reg, 0.5)
    gap = bounds.sampling_gap(np.where(valid, s_z, 1.0), np.where(valid, s_x, 1.0), e_reg, eps)
    phi = np.where(valid, np.minimum(e_reg + gap, 0.5), 0.5)
    if phi.ndim == 0:
        return float(phi), bool(regularized)
    return phi, regularized


def estimate(obs: ObservedCounts, src_a: SourceConfig, src_b: SourceConfig, N: float,
             z_counts: ZMatchCounts, eps: float, symmetric: bool,
             literal_vacuum_gain: bool = True) -> DecoyBounds:
    """Run every estimator on one set of observations."""
    counter = BoundCounter(eps)
    terms = _yields(obs, src_a, src_b, N, counter)
    s11z = s11_z_lower(terms.y10, terms.y01, obs, src_a, src_b, N, eps, counter)
    s0 = s0mu_z_lower(obs, src_a, src_b, N, z_counts, eps, counter)
    s11x = s11_x_lower(obs.slice_pairs, terms.y10, terms.y01, src_a, src_b, obs.slice_gains,
                       eps, counter)
    t11, clamped = t11_x_upper(obs, src_a, src_b, N, eps, symmetric, counter,
                               terms.x_o_nu_lower, terms.x_nu_o_lower, literal_vacuum_gain)
    s11x_arr = np.asarray(s11x, dtype=float)
    e11 = np.where(s11x_arr > 0, np.asarray(t11) / np.where(s11x_arr > 0, s11x_arr, 1.0), 1.0)
    e11 = np.minimum(e11, 1.0)
    phi, regularized = phi11_z_upper(s11z, s11x, e11, eps)
    e11 = float(e11) if e11.ndim == 0 else e11
    return DecoyBounds(
        y10_lower=terms.y10,
        y01_lower=terms.y01,
        s0mu_z_lower=s0,
        s11_z_lower=s11z,
        s11_x_lower=s11x,
        t11_x_upper=t11,
        e11_x_upper=e11,
        phi11_z_upper=phi,
        failure_uses=counter.uses,
        flags={"t11_clamped": clamped, "e11_regularized": regularized},
    )
