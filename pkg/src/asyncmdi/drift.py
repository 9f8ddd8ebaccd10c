"""Phase evolution between the two users and the resulting misalignment.

Without phase tracking the channel phase still drifts slowly, and without
phase locking the two lasers differ in frequency by ``delta_v``. Two bins
paired inside a matching window ``T_c`` are taken to be ``T_c / 2`` apart, so
the extra misalignment is half of the drift accumulated over ``T_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from asyncmdi.exceptions import ParameterError

SPEED_IN_FIBER = 2e8
OPTICAL_FREQUENCY = 193.4e12

TRACKED_LOCKED = "tracked_locked"
LOCKED_ONLY = "locked_only"
FREE = "free"
TECHNIQUES = (TRACKED_LOCKED, LOCKED_ONLY, FREE)


@dataclass(frozen=True)
class DriftConfig:
    """Laser and fiber drift parameters.

    Attributes:
        technique: Which stabilisation is in use; one of ``tracked_locked``
            (phase tracking and locking), ``locked_only`` (locking, no
            tracking) or ``free`` (neither).
        delta_v: Residual laser frequency difference in Hz.
        fiber_drift_rate: Relative fiber phase drift in rad/s.
        v: Mean optical frequency in Hz.
        s_fiber: Speed of light in fiber in m/s.
        tau: Bin separation used for HOM calibration in s.
    """

    technique: str = TRACKED_LOCKED
    delta_v: float = 0.0
    fiber_drift_rate: float = 8e3
    v: float = OPTICAL_FREQUENCY
    s_fiber: float = SPEED_IN_FIBER
    tau: float = 1e-6

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ParameterError(f"technique must be one of {TECHNIQUES}")
        if self.delta_v < 0 or self.fiber_drift_rate < 0:
            raise ParameterError("drift parameters must be nonnegative")
        if self.s_fiber <= 0 or self.tau <= 0:
            raise ParameterError("s_fiber and tau must be positive")

    def drift_rate(self) -> float:
        """Phase drift rate in rad/s seen by two bins of a pair."""
        return _drift_rate(self.technique, self)


def _drift_rate(technique: str, drift: DriftConfig) -> float:
    if technique == TRACKED_LOCKED:
        return 0.0
    if technique == LOCKED_ONLY:
        return drift.fiber_drift_rate
    return 2 * math.pi * drift.delta_v + drift.fiber_drift_rate


def differential_phase(t, delta_v, l, delta_l, v=OPTICAL_FREQUENCY, s_fiber=SPEED_IN_FIBER):
    """Phase of Alice's pulse relative to Bob's at Charlie, in radians."""
    if s_fiber <= 0:
        raise ParameterError("s_fiber must be positive")
    return 2 * np.pi * delta_v * t - 2 * np.pi / s_fiber * (delta_v * l + v * delta_l)


def drift_locked(v_i, v_j, delta_l_i, delta_l_j, s_fiber=SPEED_IN_FIBER):
    """Phase change between bins i and j with locked lasers (fiber drift only)."""
    return 2 * np.pi / s_fiber * (v_j * delta_l_j - v_i * delta_l_i)


def drift_unlocked(delta_v, dt):
    """Phase change ``2 pi delta_v dt`` from a laser frequency offset."""
    if np.any(np.asarray(dt) < 0):
        raise ParameterError("time separation must be nonnegative")
    return 2 * np.pi * np.asarray(delta_v) * dt


def intrinsic_error(angle: ArrayLike):
    """Interference error ``(1 - cos angle) / 2`` of a misaligned pair."""
    return (1 - np.cos(angle)) / 2


def effective_misalignment(technique: str, T_c: float, drift: DriftConfig, sigma_base: float) -> float:
    """X-basis misalignment angle for a matching window ``T_c``.

    Contributions are added as angles, which is adequate while each stays
    below about 0.5 rad. The result is reduced into ``[0, 2 pi)``.
    """
    if technique not in TECHNIQUES:
        raise ParameterError(f"technique must be one of {TECHNIQUES}")
    sigma = sigma_base
    if technique in (LOCKED_ONLY, FREE):
        sigma += drift.fiber_drift_rate * T_c / 2
    if technique == FREE:
        sigma += math.pi * drift.delta_v * T_c
    return math.fmod(sigma, 2 * math.pi)


def mean_pair_error_exact(technique: str, T_c: float, drift: DriftConfig, sigma_base: float,
                          nodes: int = 2001) -> float:
    """Error averaged over the pair-separation distribution (diagnostic only).

    Two bins uniform in the window are separated by ``u T_c`` with density
    ``2 (1 - u)``, whose mean is ``T_c / 3``. The average error is therefore
    below the value at the ``T_c / 2`` separation that key rates use, so the
    latter is the more pessimistic of the two.
    """
    from scipy.integrate import simpson

    rate = _drift_rate(technique, drift)
    u = np.linspace(0.0, 1.0, nodes)
    err = intrinsic_error(sigma_base + rate * T_c * u)
    return float(simpson(err * 2 * (1 - u), x=u))


def hom_curve(delta_v: ArrayLike, tau: float):
    """HOM visibility and error rate of two weak coherent pulses.

    ``V = 0.5 cos(2 pi delta_v tau)`` on the first falling branch and zero
    beyond the quarter period; ``E = (1 - V) / 2``.
    """
    if tau <= 0:
        raise ParameterError("tau must be positive")
    arg = 2 * np.pi * np.abs(np.asarray(delta_v, dtype=float)) * tau
    vis = np.where(arg <= np.pi / 2, 0.5 * np.cos(arg), 0.0)
    err = (1 - vis) / 2
    if vis.ndim == 0:
        return float(vis), float(err)
    return vis, err


def detections_per_window(T_c, F, mu_bar, eta_d, eta_ch):
    """Approximate detection count per matching window.

    ``T_c F (1 - exp(-mu_bar eta_d sqrt(eta_ch)))`` with ``mu_bar`` the total
    mean photon number of both users and ``eta_ch`` the Alice-Bob fiber
    transmittance.
    """
    for value in (T_c, F, mu_bar, eta_d, eta_ch):
        if np.any(np.asarray(value) < 0):
            raise ParameterError("all arguments must be nonnegative")
    return T_c * F * -np.expm1(-mu_bar * eta_d * np.sqrt(eta_ch))
