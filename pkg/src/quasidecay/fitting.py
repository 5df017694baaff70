"""Log-log least squares used for decay exponents and scaling laws."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFit


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 2:
        raise DegenerateFit("need at least two points for a slope")
    if np.any(y == 0.0) or not np.all(np.isfinite(y)) or np.any(x <= 0.0):
        raise DegenerateFit("log-log fit needs positive finite data")
    lx, ly = np.log(x), np.log(y)
    lx = lx - lx.mean()
    denom = float(np.dot(lx, lx))
    if denom == 0.0:
        raise DegenerateFit("abscissae are all equal")
    return float(np.dot(lx, ly - ly.mean()) / denom)


def decay_exponent(r, v) -> float:
    """Exponent alpha in v ~ r^(-alpha), fitted over the given samples."""
    return -loglog_slope(r, v)
