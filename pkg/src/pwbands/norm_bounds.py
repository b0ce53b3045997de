"""High-probability upper bounds on the squared RKHS norm of the target.

Both bounds are Hoeffding bounds for a mean of variables in [0, 1]: the
squared outputs in the noise-free case, and the squared worst-case endpoints
of simultaneous intervals in the noisy case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyObservedIntervals, InvalidRisk, ValidationError


@dataclass(frozen=True)
class NormBudget:
    value: float
    risk: float
    delta0: float
    sample_count: int


def check_risk(alpha, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidRisk(f"{name} must lie in (0, 1), got {alpha!r}")
    return alpha


def hoeffding_term(alpha: float, n: int) -> float:
    """sqrt(ln(alpha) / (-2 n))."""
    return math.sqrt(math.log(alpha) / (-2.0 * n))


def _check_delta0(delta0) -> float:
    delta0 = float(delta0)
    if not delta0 >= 0.0:
        raise ValidationError(f"delta0 must be nonnegative, got {delta0!r}")
    return delta0


def noise_free_bound(ys, alpha: float, delta0: float) -> NormBudget:
    alpha = check_risk(alpha)
    delta0 = _check_delta0(delta0)
    ys = np.asarray(ys, dtype=float).ravel()
    n = ys.size
    if n == 0:
        raise ValidationError("need at least one output")
    value = float(np.mean(ys**2)) + hoeffding_term(alpha, n) + delta0
    return NormBudget(value, alpha, delta0, n)


def noisy_bound(intervals, alpha: float, delta0: float) -> NormBudget:
    """Bound from simultaneous intervals [lowers_k, uppers_k] at d inputs.

    Unbounded intervals give an infinite budget.
    """
    alpha = check_risk(alpha)
    delta0 = _check_delta0(delta0)
    lo = np.asarray(intervals.lowers, dtype=float)
    hi = np.asarray(intervals.uppers, dtype=float)
    d = lo.size
    if d == 0:
        raise ValidationError("need at least one interval")
    if intervals.empty:
        raise EmptyObservedIntervals("observed intervals carry the empty marker (1, -1)")
    if np.any(lo > hi):
        raise ValidationError("every observed interval needs lower <= upper")
    worst = np.maximum(lo**2, hi**2)
    value = float(np.mean(worst)) + hoeffding_term(alpha, d) + delta0
    return NormBudget(value, alpha, delta0, d)
