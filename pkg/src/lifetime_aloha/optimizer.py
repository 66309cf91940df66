"""Lifetime-constrained maximization of lifetime throughput over ``q``.

For a backlogged node the lifetime throughput, as a function of the success
probability ``p``, peaks at ``p_m`` (a function of ``n`` and ``P_T/P_W`` only)
and the lifetime increases with ``p``.  The optimum is therefore one of

* the unsaturated plateau ``p = p_L`` (any ``q`` in the steady interval),
  when the load is at most ``lambda_M``;
* ``p = p_m`` when the load exceeds ``lambda_M``;
* the constraint boundary ``p = p_c`` where the lifetime equals ``T_0``,
  once ``T_0`` exceeds the lifetime at the unconstrained optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import cb_analytic
from ._roots import bisect_bracket
from .cb_analytic import SATURATED, UNSATURATED, steady_region
from .model import CbParams, EnergyProfile, PbParams
from .special_fn import lambert_w0

CB = "cb"
PB = "pb"

BELOW_T0STAR_UNSAT = "below_T0star_unsat"
BELOW_T0STAR_SAT = "below_T0star_sat"
CONSTRAINED = "constrained_by_T0"
INFEASIBLE = "infeasible"

Params = Union[CbParams, PbParams]


@dataclass(frozen=True)
class Thresholds:
    p_m: float
    lambda_M: float
    T0_star: float
    p_c: float | None = None


@dataclass(frozen=True)
class OptResult:
    """``q_opt`` is a float, or a ``(lo, hi)`` tuple when a whole interval is optimal."""

    feasible: bool
    U_max: float
    q_opt: float | tuple[float, float] | None
    p_opt: float
    regime: str | None
    case_tag: str
    thresholds: Thresholds

    @property
    def q_point(self) -> float:
        """A single optimal ``q`` (interval midpoint when the optimum is flat)."""
        if isinstance(self.q_opt, tuple):
            return 0.5 * (self.q_opt[0] + self.q_opt[1])
        return math.nan if self.q_opt is None else self.q_opt


def scheme_of(params: Params) -> str:
    return CB if isinstance(params, CbParams) else PB


def _shape(params: Params) -> tuple[int, float, float, float]:
    if isinstance(params, CbParams):
        return params.n, params.M, params.delta, params.lambda_N
    return params.n, 1.0, 0.0, params.lambda_P


def _log_p_m(n: int, power_ratio: float) -> float:
    x = power_ratio - 1.0
    if x < 0.0:
        raise ValueError(f"power ratio must be >= 1, got {power_ratio!r}")
    # (n - sqrt(n^2 + 4 n x)) / (2 x), rationalized so x -> 0 is exact
    return -2.0 * n / (n + math.sqrt(n * n + 4.0 * n * x))


def p_m(n: int, power_ratio: float) -> float:
    """Success probability maximizing a backlogged node's lifetime throughput."""
    return math.exp(_log_p_m(n, power_ratio))


def saturation_boundary(n: int, power_ratio: float, M: float = 1.0, delta: float = 0.0, scheme: str = CB) -> float:
    """Per-node arrival rate separating the unsaturated and saturated optima."""
    lp = _log_p_m(n, power_ratio)
    pm = math.exp(lp)
    if scheme == PB:
        x = power_ratio - 1.0
        # (sqrt(1 + 4x/n) - 1) / (2x), rationalized
        coef = 2.0 / (n + math.sqrt(n * n + 4.0 * n * x))
        return coef * pm
    if scheme != CB:
        raise ValueError(f"unknown scheme {scheme!r}")
    plp = pm * lp
    return (M / n) * plp / (plp * (M + delta - 1.0) - 1.0)


def _saturated_T(p: float, log_p: float, n, M, delta, energy) -> float:
    return float(cb_analytic.saturated_lifetime(p, n, M, delta, energy, log_p))


def _saturated_U(p: float, log_p: float, n, M, delta, energy) -> float:
    return float(cb_analytic.saturated_lifetime_throughput(p, n, M, delta, energy, log_p))


def t0_star(params: Params, energy: EnergyProfile) -> float:
    """Largest lifetime constraint that leaves the unconstrained optimum feasible."""
    n, M, delta, lam = _shape(params)
    if scheme_of(params) == PB:
        lm = saturation_boundary(n, energy.power_ratio, scheme=PB)
        x = min(lam, lm)
        pL = math.exp(lambert_w0(-n * x))
        return energy.E_over_sigma / (x / pL * (energy.P_T - energy.P_W) + energy.P_W)
    lp = _log_p_m(n, energy.power_ratio)
    T_pm = _saturated_T(math.exp(lp), lp, n, M, delta, energy)
    region = steady_region(n, M, delta, lam)
    if not region.defined:
        return T_pm
    T_pL = float(cb_analytic.unsaturated_lifetime(region.p_L, lam, M, delta, energy))
    return max(T_pL, T_pm)


def critical_p(params: Params, energy: EnergyProfile, T_0: float, tol: float = 1e-12) -> float:
    """Success probability at which a backlogged node lives exactly ``T_0``.

    Requires ``t0_star < T_0 <= (E/sigma)/P_W``.
    """
    n, M, delta, lam = _shape(params)
    T0s = t0_star(params, energy)
    if not T0s < T_0 <= energy.max_lifetime:
        raise ValueError(f"T_0={T_0!r} outside ({T0s!r}, {energy.max_lifetime!r}]")
    return math.exp(-_critical_log_p(params, energy, T_0, tol))


def _critical_log_p(params: Params, energy: EnergyProfile, T_0: float, tol: float) -> float:
    """``-ln p_c``; returns the bracket end on the feasible (longer-lived) side."""
    n, M, delta, lam = _shape(params)
    PT, PW, E = energy.P_T, energy.P_W, energy.E_over_sigma
    if scheme_of(params) == PB:
        return n * (E / T_0 - PW) / (PT - PW)
    region = steady_region(n, M, delta, lam)
    p_floor = p_m(n, energy.power_ratio)
    if region.defined:
        p_floor = max(p_floor, region.p_L)
    s_hi = -math.log(p_floor)

    def excess(s: float) -> float:
        return _saturated_T(math.exp(-s), -s, n, M, delta, energy) - T_0

    s_lo = -math.log1p(-1e-12)
    while excess(s_lo) < 0.0:
        s_lo *= 1e-3
        if s_lo < 1e-300:
            return 0.0
    lo, hi = bisect_bracket(excess, s_lo, s_hi, xtol=0.0, rtol=tol)
    return lo


def thresholds(params: Params, energy: EnergyProfile) -> Thresholds:
    n, M, delta, _ = _shape(params)
    r = energy.power_ratio
    lm = saturation_boundary(n, r, M, delta, scheme_of(params))
    return Thresholds(p_m=p_m(n, r), lambda_M=lm, T0_star=t0_star(params, energy))


def optimize(params: Params, energy: EnergyProfile, T_0: float = 0.0, tol: float = 1e-12) -> OptResult:
    """Maximal lifetime throughput subject to ``lifetime >= T_0``.

    An infeasible constraint (``T_0 > (E/sigma)/P_W``) is reported through
    ``feasible=False`` rather than raised.
    """
    if T_0 < 0.0:
        raise ValueError(f"T_0 must be >= 0, got {T_0!r}")
    n, M, delta, lam = _shape(params)
    th = thresholds(params, energy)
    PT, PW, E = energy.P_T, energy.P_W, energy.E_over_sigma
    if T_0 > energy.max_lifetime:
        return OptResult(False, 0.0, None, math.nan, None, INFEASIBLE, th)

    if T_0 <= th.T0_star:
        region = steady_region(n, M, delta, lam)
        if lam <= th.lambda_M and region.defined:
            U = float(cb_analytic.unsaturated_lifetime_throughput(region.p_L, lam, M, delta, energy))
            return OptResult(True, U, (region.q_lo, region.q_hi), region.p_L, UNSATURATED, BELOW_T0STAR_UNSAT, th)
        if scheme_of(params) == PB:
            lm = th.lambda_M
            U = E / ((PT - PW) / math.exp(lambert_w0(-n * lm)) + PW / lm)
        else:
            U = _saturated_U(th.p_m, _log_p_m(n, energy.power_ratio), n, M, delta, energy)
        return OptResult(True, U, -_log_p_m(n, energy.power_ratio) / n, th.p_m, SATURATED, BELOW_T0STAR_SAT, th)

    s = _critical_log_p(params, energy, T_0, tol)
    pc = math.exp(-s)
    U = _saturated_U(pc, -s, n, M, delta, energy)
    th = Thresholds(th.p_m, th.lambda_M, th.T0_star, pc)
    return OptResult(True, U, s / n, pc, SATURATED, CONSTRAINED, th)


def unconstrained_optimum(params: Params, energy: EnergyProfile) -> float:
    """Maximal lifetime throughput with no lifetime constraint, chosen by ``p_m <= p_L``."""
    n, M, delta, lam = _shape(params)
    pm = p_m(n, energy.power_ratio)
    region = steady_region(n, M, delta, lam)
    if region.defined and pm <= region.p_L:
        return float(cb_analytic.unsaturated_lifetime_throughput(region.p_L, lam, M, delta, energy))
    return _saturated_U(pm, math.log(pm), n, M, delta, energy)


def grid_search(
    params: Params,
    energy: EnergyProfile,
    T_0: float = 0.0,
    step: float = 1e-5,
    refine: float = 1e-8,
    points: int = 2001,
) -> tuple[float, float]:
    """Brute-force ``(U_max, q)`` by scanning ``q`` on a uniform grid.

    The best feasible grid point is refined by repeated local grids until
    their spacing falls below ``refine`` relative to ``q`` (and at least
    below ``refine`` absolute).  Shares no case analysis with
    :func:`optimize`; returns ``(-inf, nan)`` when no grid point is feasible.
    """
    cb = params if isinstance(params, CbParams) else params.as_cb()
    region = steady_region(cb.n, cb.M, cb.delta, cb.lambda_N)

    def best_on(q):
        r = cb_analytic.evaluate_q(cb, energy, q, region)
        U = np.where(r["T"] >= T_0, r["U"], -np.inf)
        i = int(np.argmax(U))
        return float(U[i]), float(q[i])

    q = np.append(np.arange(0.0, 1.0, step), 1.0)
    U_best, q_best = best_on(q)
    if U_best == -np.inf:
        return U_best, math.nan
    half = step
    while True:
        grid = np.linspace(max(0.0, q_best - half), min(1.0, q_best + half), points)
        spacing = grid[1] - grid[0]
        U, qq = best_on(grid)
        if U > U_best:
            U_best, q_best = U, qq
        if spacing <= refine * min(1.0, q_best) or spacing <= 1e-300 or spacing < 1e-17:
            break
        half = spacing
    return U_best, q_best
