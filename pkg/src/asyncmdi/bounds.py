"""Concentration bounds and the binary entropy.

All functions accept scalars or numpy arrays and broadcast elementwise. The
failure probability ``eps`` must be a scalar in (0, 1); ``beta = ln(1/eps)``.

Two directions of conversion are provided:

* :func:`chernoff_observed_bounds` maps an expected value to a confidence
  interval on the value that will be observed.
* :func:`chernoff_expected_bounds` maps an observed value back to an interval
  on its expectation.

:func:`sampling_gap` bounds the error rate of the unobserved part of a bit
string given the error rate of a random subset drawn without replacement.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from asyncmdi.exceptions import DomainError, ParameterError


def _beta(eps: float) -> float:
    if not 0.0 < float(eps) < 1.0:
        raise ParameterError(f"failure probability must lie in (0, 1), got {eps!r}")
    return -math.log(eps)


def _nonneg(x: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ParameterError(f"{name} must be nonnegative")
    return arr


def _out(x: np.ndarray):
    return float(x) if x.ndim == 0 else x


def chernoff_observed_bounds(x_star: ArrayLike, eps: float):
    """Bound the observed value of a count with known expectation.

    Args:
        x_star: Expected count(s), nonnegative.
        eps: Failure probability of each side.

    Returns:
        ``(lower, upper)``. The lower bound is clamped at zero.
    """
    beta = _beta(eps)
    x = _nonneg(x_star, "x_star")
    upper = x + beta / 2 + np.sqrt(2 * beta * x + beta**2 / 4)
    lower = np.maximum(x - np.sqrt(2 * beta * x), 0.0)
    return _out(lower), _out(upper)


def chernoff_expected_bounds(x_obs: ArrayLike, eps: float):
    """Bound the expectation of a count from its observed value.

    Args:
        x_obs: Observed count(s), nonnegative.
        eps: Failure probability of each side.

    Returns:
        ``(lower, upper)`` on the expected value.
    """
    beta = _beta(eps)
    x = _nonneg(x_obs, "x_obs")
    upper = x + beta + np.sqrt(2 * beta * x + beta**2)
    lower = np.maximum(x - beta / 2 - np.sqrt(2 * beta * x + beta**2 / 4), 0.0)
    return _out(lower), _out(upper)


def observed_lower(x_star: ArrayLike, eps: float):
    return chernoff_observed_bounds(x_star, eps)[0]


def observed_upper(x_star: ArrayLike, eps: float):
    return chernoff_observed_bounds(x_star, eps)[1]


def expected_lower(x_obs: ArrayLike, eps: float):
    return chernoff_expected_bounds(x_obs, eps)[0]


def expected_upper(x_obs: ArrayLike, eps: float):
    return chernoff_expected_bounds(x_obs, eps)[1]


def sampling_gap(n: ArrayLike, k: ArrayLike, lam: ArrayLike, eps: float):
    """Finite-sample gap for random sampling without replacement.

    A string of ``n + k`` bits is split at random into a sample of ``k`` bits
    with observed error rate ``lam`` and a remainder of ``n`` bits. With
    probability at least ``1 - eps`` the remainder's error rate does not
    exceed ``lam + sampling_gap(n, k, lam, eps)``.

    A negative logarithm (possible only when ``eps`` is close to one) is
    clamped so that the gap is zero rather than complex.

    Raises:
        DomainError: if any ``lam`` is not strictly inside (0, 1).
        ParameterError: if ``n`` or ``k`` is below one.
    """
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(n < 1) or np.any(k < 1):
        raise ParameterError("sample sizes n and k must be at least 1")
    if np.any(lam <= 0) or np.any(lam >= 1):
        raise DomainError("error rate must lie strictly inside (0, 1)")
    _beta(eps)
    total = n + k
    big = np.maximum(n, k)
    g = total / (n * k) * np.log(total / (2 * np.pi * n * k * lam * (1 - lam) * eps**2))
    g = np.maximum(g, 0.0)
    num = (1 - 2 * lam) * big * g / total + np.sqrt(
        big**2 * g**2 / total**2 + 4 * lam * (1 - lam) * g
    )
    den = 2 + 2 * big**2 * g / total**2
    return _out(np.maximum(num / den, 0.0))


def binary_entropy(x: ArrayLike):
    """Binary Shannon entropy in bits, with ``H(0) = H(1) = 0``.

    >>> binary_entropy(0.5)
    1.0
    """
    p = np.asarray(x, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise DomainError("binary entropy is defined on [0, 1]")
    inner = (p > 0) & (p < 1)
    safe = np.where(inner, p, 0.5)
    h = -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe)
    return _out(np.where(inner, h, 0.0))
