"""Least-squares fitting for exponent estimates.

Every scaling claim in the toolkit is a slope of log(value) against
log(n), with the standard error taken from the residual variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    points: list = field(default_factory=list)  # (log n, log value) pairs


def loglog_fit(points) -> FitResult:
    """Ordinary least squares of log(value) on log(n).

    With exactly two points the fit is an interpolation and the stderr
    is reported as NaN.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    for n, v in pts:
        if n <= 0 or v <= 0:
            raise ValueError(f"log-log fit needs positive data, got ({n}, {v})")
    lx = np.log([n for n, _ in pts])
    ly = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(((ly - fitted) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if len(pts) == 2:
        stderr = math.nan
    else:
        dof = len(pts) - 2
        sxx = float(((lx - lx.mean()) ** 2).sum())
        stderr = math.sqrt(ss_res / dof / sxx)
    return FitResult(
        slope=float(slope),
        intercept=float(intercept),
        slope_stderr=stderr,
        r_squared=r2,
        points=list(zip(lx.tolist(), ly.tolist())),
    )


@dataclass(frozen=True)
class OlsResult:
    coefficients: np.ndarray
    stderrs: np.ndarray
    r_squared: float


def ols(design: np.ndarray, response: np.ndarray) -> OlsResult:
    """Multiple regression with per-coefficient standard errors.

    The design matrix should include an explicit intercept column.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    n, k = design.shape
    if n <= k:
        raise ValueError("underdetermined regression")
    coef, _, _, _ = np.linalg.lstsq(design, response, rcond=None)
    resid = response - design @ coef
    sigma2 = float(resid @ resid) / (n - k)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    ss_tot = float(((response - response.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    return OlsResult(coefficients=coef, stderrs=np.sqrt(np.diag(cov)), r_squared=r2)
