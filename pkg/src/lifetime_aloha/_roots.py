"""Bracketed bisection for monotone scalar functions."""

from __future__ import annotations

from typing import Callable


def bisect_bracket(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    rtol: float = 0.0,
    maxiter: int = 2000,
) -> tuple[float, float]:
    """Shrink a sign-change bracket ``[lo, hi]`` of ``f`` around its root.

    Stops when ``hi - lo <= xtol + rtol * |lo|`` or when the midpoint no
    longer differs from the endpoints in floating point.  A zero hit exactly
    collapses the bracket to that point.
    """
    if not lo <= hi:
        raise ValueError(f"empty bracket [{lo!r}, {hi!r}]")
    flo = f(lo)
    if flo == 0.0:
        return lo, lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi, hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ValueError(f"root not bracketed: f({lo!r})={flo!r}, f({hi!r})={fhi!r}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol + rtol * abs(lo) or mid in (lo, hi):
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid, mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return lo, hi


def bisect(f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-12, rtol: float = 0.0) -> float:
    """Root of ``f`` on ``[lo, hi]``; ``f(lo)`` and ``f(hi)`` must differ in sign."""
    a, b = bisect_bracket(f, lo, hi, xtol=xtol, rtol=rtol)
    return 0.5 * (a + b)
