"""Real branches of the Lambert W function.

``lambert_w0`` and ``lambert_wm1`` solve ``w * exp(w) = x`` for the principal
(``w >= -1``) and lower (``w <= -1``) real branches.  Both use Halley's method
started from a branch-appropriate series or asymptotic guess and iterate to
machine precision.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

__all__ = [
    "Branch",
    "BRANCH_POINT",
    "DOMAIN_SLACK",
    "lambert_w0",
    "lambert_wm1",
    "lambertw",
]

BRANCH_POINT = -math.exp(-1.0)
DOMAIN_SLACK = 1e-15

_MAX_ITER = 64
_EPS = np.finfo(float).eps


class Branch(str, Enum):
    principal = "principal"
    lower = "lower"


def _near_branch_series(x: float, sign: float) -> float:
    # Series in p = sqrt(2(e x + 1)); sign=+1 for W0, -1 for W-1.
    p = sign * math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3 - 43.0 / 540.0 * p**4


def _halley(x: float, w: float) -> float:
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        den = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if den == 0.0:
            break
        dw = f / den
        w -= dw
        if abs(dw) <= 4.0 * _EPS * (1.0 + abs(w)):
            break
    return w


def _newton_log_form(log_minus_x: float, w: float) -> float:
    # w + ln(-w) = ln(-x); exp(w) would underflow in w*exp(w) - x
    for _ in range(_MAX_ITER):
        dw = (w + math.log(-w) - log_minus_x) / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 4.0 * _EPS * abs(w):
            break
    return w


def _check_real(x: float) -> float:
    x = float(x)
    if math.isnan(x):
        raise ValueError("Lambert W argument is NaN")
    return x


def lambert_w0(x: float) -> float:
    """Principal branch W0(x) for x >= -1/e.

    Arguments up to ``DOMAIN_SLACK`` below -1/e are treated as the branch
    point itself.  Raises ``ValueError`` below that.
    """
    x = _check_real(x)
    if x < BRANCH_POINT - DOMAIN_SLACK:
        raise ValueError(f"W0 undefined for x={x!r} < -1/e")
    if x <= BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x < -0.32:
        w = _near_branch_series(x, 1.0)
        if x + 1.0 / math.e < 1e-10:
            # Series error is O(p^5) here; Halley cannot improve on rounding.
            return w
    elif x < 3.0:
        w = math.log1p(x)
        w = w * (1.0 - math.log1p(w) / (2.0 + w))
    else:
        lx = math.log(x)
        llx = math.log(lx)
        w = lx - llx + llx / lx
    return _halley(x, w)


def lambert_wm1(x: float) -> float:
    """Lower branch W-1(x) for -1/e <= x < 0."""
    x = _check_real(x)
    if x < BRANCH_POINT - DOMAIN_SLACK or x >= 0.0:
        raise ValueError(f"W-1 undefined for x={x!r} outside [-1/e, 0)")
    if x <= BRANCH_POINT:
        return -1.0
    if x < -0.25:
        w = _near_branch_series(x, -1.0)
        if x + 1.0 / math.e < 1e-10:
            return w
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
        if x > -1e-250:
            return _newton_log_form(l1, w)
    return _halley(x, w)


def lambertw(x, branch: Branch | str = Branch.principal):
    """Evaluate a real Lambert W branch on a scalar or array."""
    fn = lambert_w0 if Branch(branch) is Branch.principal else lambert_wm1
    if np.ndim(x) == 0:
        return fn(float(x))
    arr = np.asarray(x, dtype=float)
    return np.fromiter((fn(v) for v in arr.ravel()), dtype=float, count=arr.size).reshape(arr.shape)
