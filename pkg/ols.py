"""
Linear regression via QR decomposition.

Ordinary least squares with intercept for
    y_long ~ b0 + b1 * x + b2 * y_t
and the IF-only reduction used for uncited publications.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import solve_triangular

from errors import DegenerateResponseError, InsufficientDataError, RankDeficiencyError, ValidationError

# Reciprocal condition estimate below which the design counts as collinear
RCOND_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DesignMatrix:
    """n x p design (intercept column first) and the response vector"""

    matrix: np.ndarray
    response: np.ndarray
    columns: Tuple[str, ...]

    def __post_init__(self):
        n, p = self.matrix.shape
        if self.response.shape != (n,):
            raise ValidationError(f"response has shape {self.response.shape}, expected ({n},)")
        if len(self.columns) != p:
            raise ValidationError(f"{len(self.columns)} column names for {p} columns")
        if not (np.all(np.isfinite(self.matrix)) and np.all(np.isfinite(self.response))):
            raise ValidationError('design contains non-finite entries')
        if n < p:
            raise InsufficientDataError(f"{n} observations for {p} coefficients")

    @classmethod
    def build(cls, response, **regressors):
        """Intercept column of ones followed by the regressors in keyword order"""
        y = np.asarray(response, dtype=float)
        cols = [np.ones(len(y))] + [np.asarray(v, dtype=float) for v in regressors.values()]
        return cls(np.column_stack(cols), y, ('intercept',) + tuple(regressors))

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def p(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class OlsFit:
    """Results from linear regression."""

    coefficients: np.ndarray
    residuals: np.ndarray
    leverages: np.ndarray
    r_squared: float
    rss: float
    tss: float
    n: int
    p: int
    columns: Tuple[str, ...]
    xtx_inv: np.ndarray       # (X'X)^-1, the bread of every sandwich
    degenerate: bool = False  # constant response fitted exactly

    @property
    def df_resid(self):
        return self.n - self.p


def fit_ols(design: DesignMatrix) -> OlsFit:
    """
    Fit by Householder QR on the column-equilibrated design.

    1. scale columns to unit norm, factor X = QR
    2. reject rcond(R) < RCOND_THRESHOLD, naming the weakest column
    3. solve R b = Q'y by back-substitution; hat diagonal = row norms of Q
    """
    X, y = design.matrix, design.response
    n, p = X.shape
    if n < p or n < 2:
        raise InsufficientDataError(f"{n} observations for {p} coefficients")

    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        column = design.columns[int(np.argmin(scale))]
        raise RankDeficiencyError(column, 0.0)
    Q, R = np.linalg.qr(X / scale)

    with np.errstate(divide='ignore', invalid='ignore'):
        rcond = 1.0 / np.linalg.cond(R)
    if not np.isfinite(rcond) or rcond < RCOND_THRESHOLD:
        weakest = int(np.argmin(np.abs(np.diag(R))))
        raise RankDeficiencyError(design.columns[weakest], float(rcond) if np.isfinite(rcond) else 0.0)

    coefficients = solve_triangular(R, Q.T @ y) / scale
    residuals = y - X @ coefficients
    leverages = np.einsum('ij,ij->i', Q, Q)
    r_inv = solve_triangular(R, np.eye(p))
    xtx_inv = (r_inv @ r_inv.T) / np.outer(scale, scale)

    rss = float(residuals @ residuals)
    degenerate = False
    if np.ptp(y) == 0:
        tss = 0.0
        tolerance = (n * 1e-10 * max(1.0, float(np.max(np.abs(y))))) ** 2
        if rss > tolerance:
            raise DegenerateResponseError(f"constant response with rss={rss:.3g}")
        r_squared = 1.0
        degenerate = True
    else:
        centered = y - y.mean()
        tss = float(centered @ centered)
        r_squared = min(1.0, max(0.0, 1.0 - rss / tss))

    return OlsFit(
        coefficients=coefficients,
        residuals=residuals,
        leverages=leverages,
        r_squared=r_squared,
        rss=rss,
        tss=tss,
        n=n,
        p=p,
        columns=design.columns,
        xtx_inv=xtx_inv,
        degenerate=degenerate,
    )


def predict(fit: OlsFit, x, y_t=None):
    """b0 + b1 * x (+ b2 * y_t for the full model)"""
    b = fit.coefficients
    x = np.asarray(x, dtype=float)
    predicted = b[0] + b[1] * x
    if fit.p == 3:
        if y_t is None:
            raise ValidationError('early-citation regressor required for the full model')
        predicted = predicted + b[2] * np.asarray(y_t, dtype=float)
    return float(predicted) if np.ndim(predicted) == 0 else predicted
