"""Univariate peaks-over-threshold margins: GPD cdf, profile maximum
likelihood for threshold excesses, and the semiparametric tail estimator.

The tail probability of a coordinate is estimated by the rescaled empirical
cdf below the fitted threshold and by (k/n) times the GPD survival function
of the excess above it; the jump this can create at the threshold is part of
the estimator's definition and is kept as is.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import EstimationError, InputError, ParameterError

XI_ZERO_TOL = 1e-9   # |xi| below this uses the exponential branch
XI_FLOOR = -0.5      # fitting region: xi > -0.5
MIN_EXCESSES = 10


@dataclass(frozen=True)
class GpdFit:
    """Fitted per-coordinate tail model over a high threshold."""

    xi: float
    sigma: float
    threshold: float
    k: int
    n: int
    converged: bool

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise EstimationError("fitted scale must be positive")


def gpd_cdf(y, xi: float, sigma: float):
    """Generalized Pareto cdf at excess y >= 0; exponential branch at xi = 0."""
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise InputError("excesses must be nonnegative")
    if abs(xi) < XI_ZERO_TOL:
        out = 1.0 - np.exp(-y / sigma)
    else:
        base = np.maximum(1.0 + xi * y / sigma, 0.0)
        out = 1.0 - base ** (-1.0 / xi)
    return float(out) if out.ndim == 0 else out


def _profile_xi(eta: float, y: np.ndarray) -> float:
    """Mean of log(1 + eta*y): the shape implied by the profile parameter."""
    return float(np.log1p(eta * y).mean())


def _profile_loglik(eta: float, y: np.ndarray) -> float:
    """GPD log-likelihood profiled down to the single parameter eta = xi/sigma."""
    k = y.shape[0]
    if eta == 0.0:
        return -k * (np.log(y.mean()) + 1.0)
    xi = _profile_xi(eta, y)
    if xi == 0.0:
        return -np.inf
    return -k * (np.log(xi / eta) + xi + 1.0)


def gpd_mle(excesses) -> GpdFit:
    """Maximum-likelihood GPD fit to positive excesses.

    Maximizes the profile likelihood in eta = xi/sigma over a bracketed 1-d
    search (the eta -> 0 exponential limit included), constrained to
    xi > -0.5; deterministic.  The caller supplies threshold metadata.
    """
    y = np.asarray(excesses, dtype=float).ravel()
    if y.size < MIN_EXCESSES:
        raise EstimationError(f"need at least {MIN_EXCESSES} excesses (got {y.size})")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InputError("excesses must be finite and strictly positive")
    ymax = float(y.max())
    ymean = float(y.mean())

    # Feasible range: eta > -1/ymax keeps all log terms finite; additionally
    # xi(eta) > XI_FLOOR.  xi is increasing in eta with xi -> -inf at the left
    # endpoint and xi(0) = 0, so the floor determines a left boundary.
    eta_left = -(1.0 - 1e-12) / ymax
    if _profile_xi(eta_left, y) < XI_FLOOR:
        eta_floor = brentq(lambda e: _profile_xi(e, y) - XI_FLOOR,
                           eta_left, -1e-16 / ymax, xtol=1e-15, maxiter=200)
    else:
        eta_floor = eta_left
    eta_hi = 1e10 / ymean

    neg = -np.geomspace(-eta_floor, max(-eta_floor * 1e-12, 1e-300), 120)
    pos = np.geomspace(1e-10 / ymean, eta_hi, 160)
    grid = np.concatenate([neg, [0.0], pos])
    grid = grid[(grid > eta_floor) & (grid <= eta_hi)]
    values = np.array([_profile_loglik(e, y) for e in grid])
    best = int(np.nanargmax(values))

    lo = grid[best - 1] if best > 0 else eta_floor
    hi = grid[best + 1] if best + 1 < grid.size else eta_hi
    res = minimize_scalar(lambda e: -_profile_loglik(e, y), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    eta_hat = float(res.x)
    if _profile_loglik(eta_hat, y) < values[best]:
        eta_hat = float(grid[best])

    if abs(eta_hat) < 1e-14:
        xi_hat, sigma_hat = 0.0, ymean
    else:
        xi_hat = _profile_xi(eta_hat, y)
        sigma_hat = xi_hat / eta_hat
    boundary = xi_hat <= XI_FLOOR + 1e-6
    converged = bool(res.success) and not boundary
    return GpdFit(xi=float(xi_hat), sigma=float(sigma_hat), threshold=0.0,
                  k=int(y.size), n=int(y.size), converged=converged)


def tail_prob(x: float, fit: GpdFit, column) -> float:
    """Semiparametric upper-tail probability estimate q(x) for one coordinate.

    Below the threshold this is one minus the (n+1)-rescaled empirical cdf of
    the column; above it, (k/n) times the fitted GPD survival of the excess.
    """
    col = np.sort(np.asarray(column, dtype=float).ravel())
    n = col.size
    if n != fit.n:
        raise InputError("column length differs from the fitted sample size")
    x = float(x)
    if x <= fit.threshold:
        return 1.0 - np.searchsorted(col, x, side="right") / (n + 1.0)
    return fit.k / fit.n * float(1.0 - gpd_cdf(x - fit.threshold, fit.xi, fit.sigma))


def fit_margin(column, k: int) -> GpdFit:
    """Fit the top-k excesses of one data column over its (n-k)-th order statistic.

    Tied observations equal to the threshold produce zero excesses, which are
    dropped with a warning; at least 10 strictly positive excesses must remain.
    """
    col = np.asarray(column, dtype=float).ravel()
    n = col.size
    if not np.all(np.isfinite(col)):
        raise InputError("column contains non-finite entries")
    if not (MIN_EXCESSES <= k < n):
        raise ParameterError(f"k must satisfy {MIN_EXCESSES} <= k < n (got k={k}, n={n})")
    srt = np.sort(col)
    threshold = srt[n - k - 1]
    excesses = srt[n - k:] - threshold
    positive = excesses[excesses > 0]
    if positive.size < excesses.size:
        warnings.warn(
            f"{excesses.size - positive.size} tied excesses at the threshold dropped",
            stacklevel=2,
        )
    if positive.size < MIN_EXCESSES:
        raise EstimationError("too few strictly positive excesses after dropping ties")
    fit = gpd_mle(positive)
    return replace(fit, threshold=float(threshold), k=int(positive.size), n=int(n))
