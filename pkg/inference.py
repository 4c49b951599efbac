"""
Heteroskedasticity-robust inference for OLS fits: HC3 sandwich covariance,
Student-t p-values, the Breusch-Pagan LM test and significance stars.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from errors import InsufficientDataError, PerfectLeverageError
from ols import DesignMatrix, fit_ols

# Squared residuals whose spread is below this (relative to y^2) count as constant
_ZERO_SPREAD = 1e-24
_LEVERAGE_LIMIT = 1.0 - 1e-10

STAR_THRESHOLDS = ((0.01, '***'), (0.05, '**'), (0.1, '*'))


@dataclass(frozen=True)
class RobustSummary:
    columns: Tuple[str, ...]
    estimates: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    stars: Tuple[str, ...]
    covariance: np.ndarray
    df: int
    bp_statistic: float
    bp_pvalue: float
    degenerate_se: Tuple[bool, ...]


def _sandwich(fit, design, weights):
    """(X'X)^-1 X' diag(w) X (X'X)^-1"""
    X = design.matrix
    meat = X.T @ (X * weights[:, None])
    cov = fit.xtx_inv @ meat @ fit.xtx_inv
    return (cov + cov.T) / 2.0


def hc3_covariance(fit, design):
    """HC3: squared residuals inflated by (1 - h_ii)^2"""
    h = fit.leverages
    if np.any(h >= _LEVERAGE_LIMIT):
        i = int(np.argmax(h))
        raise PerfectLeverageError(f"observation {i} has leverage {h[i]:.12f}")
    weights = fit.residuals ** 2 / (1.0 - h) ** 2
    return _sandwich(fit, design, weights)


def hc0_covariance(fit, design):
    """White's estimator; kept for comparison with HC3"""
    return _sandwich(fit, design, fit.residuals ** 2)


def t_two_sided_pvalue(t, df):
    return 2.0 * stats.t.sf(np.abs(t), df)


def chi2_sf(x, df):
    return stats.chi2.sf(x, df)


def p_values(fit, cov):
    """
    Two-sided Student-t p-values with df = n - p.

    A zero standard error gives p = 1 for a zero coefficient and p = 0
    (flagged degenerate) otherwise.
    """
    df = fit.df_resid
    if df < 1:
        raise InsufficientDataError(f"p-values need n > p, got n={fit.n}, p={fit.p}")
    b = fit.coefficients
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    pvals = np.empty_like(b)
    t_stats = np.zeros_like(b)
    degenerate = np.zeros(len(b), dtype=bool)
    for j in range(len(b)):
        if se[j] > 0:
            t_stats[j] = b[j] / se[j]
            pvals[j] = t_two_sided_pvalue(t_stats[j], df)
        elif b[j] == 0:
            pvals[j] = 1.0
        else:
            t_stats[j] = np.copysign(np.inf, b[j])
            pvals[j] = 0.0
            degenerate[j] = True
    return np.clip(pvals, 0.0, 1.0), t_stats, se, degenerate


def breusch_pagan(fit, design):
    """
    LM = n * R^2 of the auxiliary regression of e^2 on the regressors,
    chi-square with p - 1 degrees of freedom.
    """
    if fit.df_resid < 1:
        raise InsufficientDataError(f"Breusch-Pagan needs n > p, got n={fit.n}, p={fit.p}")
    u2 = fit.residuals ** 2
    scale = max(1.0, float(np.max(design.response ** 2)))
    if np.ptp(u2) <= _ZERO_SPREAD * scale:
        return 0.0, 1.0
    aux = fit_ols(DesignMatrix(design.matrix, u2, design.columns))
    statistic = fit.n * aux.r_squared
    return float(statistic), float(chi2_sf(statistic, fit.p - 1))


def stars(p):
    for threshold, mark in STAR_THRESHOLDS:
        if p < threshold:
            return mark
    return ''


def robust_summary(fit, design) -> RobustSummary:
    cov = hc3_covariance(fit, design)
    pvals, t_stats, se, degenerate = p_values(fit, cov)
    bp_statistic, bp_pvalue = breusch_pagan(fit, design)
    return RobustSummary(
        columns=fit.columns,
        estimates=fit.coefficients,
        std_errors=se,
        t_stats=t_stats,
        p_values=pvals,
        stars=tuple(stars(p) for p in pvals),
        covariance=cov,
        df=fit.df_resid,
        bp_statistic=bp_statistic,
        bp_pvalue=bp_pvalue,
        degenerate_se=tuple(bool(d) for d in degenerate),
    )


def confidence_intervals(summary, level=0.95):
    """Student-t intervals from the robust standard errors, one (low, high) row per coefficient"""
    q = stats.t.ppf(0.5 + level / 2.0, summary.df)
    half = q * summary.std_errors
    return np.column_stack([summary.estimates - half, summary.estimates + half])
