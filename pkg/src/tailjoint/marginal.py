"""Univariate tail estimators: LAWS expectiles, Hill index, QB expectiles,
Weissman quantiles and their extrapolated versions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LevelError
from .sample import effective_k


def _column(column) -> np.ndarray:
    x = np.asarray(column, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise DomainError("observations must be finite")
    return x


def asymmetric_weight(y, tau: float):
    """phi_tau(y) = |tau - 1{y <= 0}| y, the derivative of the check
    function eta_tau / 2."""
    y = np.asarray(y, dtype=float)
    return np.where(y > 0.0, tau * y, (1.0 - tau) * y)


def laws_expectile(column, tau: float) -> float:
    """Empirical expectile at level tau, solved exactly on the sorted data.

    The estimating function sum phi_tau(x_i - theta) is continuous, strictly
    decreasing and piecewise linear with breakpoints at the observations, so
    the root is located by a sign change and solved in closed form.
    """
    if not 0.0 < tau < 1.0:
        raise DomainError(f"expectile level must be in (0,1), got {tau}")
    xs = np.sort(_column(column))
    n = xs.size
    cum = np.cumsum(xs)
    total = cum[-1]
    below = np.arange(1, n + 1)
    above = n - below
    s_below = cum
    s_above = total - cum
    psi = tau * (s_above - above * xs) + (1.0 - tau) * (s_below - below * xs)
    idx = np.flatnonzero(psi <= 0.0)
    m = int(idx[0])  # psi(x_max) <= 0 always
    if m == 0 or psi[m] == 0.0:
        return float(xs[m])
    # Root lies in (xs[m-1], xs[m]); on that segment m points sit at or below.
    s_lo, s_hi = cum[m - 1], total - cum[m - 1]
    num = tau * s_hi + (1.0 - tau) * s_lo
    den = tau * (n - m) + (1.0 - tau) * m
    return float(num / den)


def empirical_quantile(column, tau: float) -> float:
    """Order statistic X_{n - floor(n(1-tau)), n}."""
    xs = np.sort(_column(column))
    n = xs.size
    i = n - effective_k(n, tau)
    if i < 1:
        raise LevelError(f"quantile level tau={tau} too small for n={n}")
    return float(xs[i - 1])


def hill_estimator(column, k: int) -> float:
    """Average log-excess of the top k order statistics over the (k+1)-th."""
    xs = np.sort(_column(column))
    n = xs.size
    if not 1 <= k <= n - 1:
        raise LevelError(f"Hill effective size k={k} outside [1, {n - 1}]")
    threshold = xs[n - k - 1]
    if threshold <= 0.0:
        raise DomainError("Hill requires positive tail: threshold order statistic <= 0")
    return float(np.mean(np.log(xs[n - k:] / threshold)))


def hill_at_level(column, tau: float) -> float:
    x = _column(column)
    return hill_estimator(x, effective_k(x.size, tau))


def qb_factor(gamma: float) -> float:
    """(gamma^{-1} - 1)^{-gamma}, the expectile/quantile proportionality."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"QB factor undefined for tail index {gamma}")
    return (1.0 / gamma - 1.0) ** -gamma


def qb_expectile(column, tau: float) -> float:
    """Quantile-based expectile estimator at level tau."""
    gamma = hill_at_level(column, tau)
    return qb_factor(gamma) * empirical_quantile(column, tau)


def _extrapolation_factor(gamma: float, tau: float, tau_prime: float) -> float:
    if not 0.0 < tau <= tau_prime < 1.0:
        raise LevelError(
            f"extrapolation requires tau <= tau_prime in (0,1), "
            f"got {tau}, {tau_prime}"
        )
    return ((1.0 - tau_prime) / (1.0 - tau)) ** -gamma


def weissman_quantile(column, tau: float, tau_prime: float) -> float:
    gamma = hill_at_level(column, tau)
    return _extrapolation_factor(gamma, tau, tau_prime) * empirical_quantile(column, tau)


def extrapolate_expectile_laws(column, tau: float, tau_prime: float) -> float:
    gamma = hill_at_level(column, tau)
    return _extrapolation_factor(gamma, tau, tau_prime) * laws_expectile(column, tau)


def extrapolate_expectile_qb(column, tau: float, tau_prime: float) -> float:
    gamma = hill_at_level(column, tau)
    return qb_factor(gamma) * weissman_quantile(column, tau, tau_prime)


def gain_loss_ratio(column, theta: float) -> float:
    """Empirical share of absolute deviation lying at or below theta."""
    x = _column(column)
    dev = np.abs(x - theta)
    total = dev.sum()
    if total == 0.0:
        raise DomainError("gain-loss ratio undefined: all observations equal theta")
    return float(dev[x <= theta].sum() / total)


@dataclass(frozen=True)
class MarginalTailEstimates:
    """Per-margin tail summaries at a common intermediate level."""

    tau: float
    gamma_hat: np.ndarray
    q_hat: np.ndarray
    xi_laws: np.ndarray
    xi_qb: np.ndarray


def estimate_margins(sample, tau: float) -> MarginalTailEstimates:
    """Hill, intermediate quantile and both expectile estimators per column."""
    d = sample.d
    gamma = np.empty(d)
    q = np.empty(d)
    xi = np.empty(d)
    for j in range(d):
        col = sample.column(j)
        gamma[j] = hill_at_level(col, tau)
        q[j] = empirical_quantile(col, tau)
        xi[j] = laws_expectile(col, tau)
    xi_qb = np.array([qb_factor(g) for g in gamma]) * q
    return MarginalTailEstimates(
        tau=tau, gamma_hat=gamma, q_hat=q, xi_laws=xi, xi_qb=xi_qb
    )


def m_function(x: float) -> float:
    """(1-x)^{-1} - log(x^{-1} - 1), the expectile log-derivative factor."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"m(x) requires x in (0,1), got {x}")
    return 1.0 / (1.0 - x) - math.log(1.0 / x - 1.0)
