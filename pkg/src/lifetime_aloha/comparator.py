"""Connection-based versus packet-based Aloha at matched payload.

A CB connection carries ``K`` packets of length ``L_P`` in ``M = K L_P/sigma_N``
slots; the PB network sends one packet per slot of length ``L_P + Delta_SP``.
With no lifetime constraint and both networks in the same regime, PB has the
larger optimal lifetime throughput exactly when a closed-form inequality
holds; this module evaluates that inequality next to a direct comparison of
the two optimizer results.

Throughputs are compared as the optimizer returns them: CB in data units of
one CB slot, PB in packets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable

from . import optimizer
from ._roots import bisect
from .cb_analytic import steady_region
from .model import CouplingParams, EnergyProfile, couple
from .special_fn import lambert_w0

PB_WINS = "PB"
CB_WINS = "CB"
TIE = "tie"

BOTH_SATURATED = "both_saturated"
BOTH_UNSATURATED = "both_unsaturated"
MIXED = "mixed"
INVALID = "invalid"

_REGIME_ALIASES = {
    "saturated": BOTH_SATURATED,
    BOTH_SATURATED: BOTH_SATURATED,
    "unsaturated": BOTH_UNSATURATED,
    BOTH_UNSATURATED: BOTH_UNSATURATED,
}


@dataclass(frozen=True)
class ComparisonVerdict:
    """``winner`` comes from the direct optimizer comparison; the inequality
    sides are ``nan`` for mixed or invalid cells."""

    winner: str
    regime: str
    U_pb: float
    U_cb: float
    inequality_lhs: float
    inequality_rhs: float
    K: float = math.nan
    L_P: float = math.nan
    M: float = math.nan

    CSV_COLUMNS = ("K", "L_P", "M", "winner", "U_pb", "U_cb", "lhs", "rhs", "regime")

    @property
    def inequality_holds(self) -> bool:
        return self.inequality_lhs < self.inequality_rhs

    @property
    def agrees(self) -> bool:
        """Whether the inequality predicts the direct winner (ties and mixed cells pass)."""
        if self.regime in (MIXED, INVALID) or self.winner == TIE:
            return True
        return self.inequality_holds == (self.winner == PB_WINS)

    def row(self) -> dict:
        return {
            "K": self.K,
            "L_P": self.L_P,
            "M": self.M,
            "winner": self.winner,
            "U_pb": self.U_pb,
            "U_cb": self.U_cb,
            "lhs": self.inequality_lhs,
            "rhs": self.inequality_rhs,
            "regime": self.regime,
        }


def _ratio(num: float, den: float) -> float:
    if den != 0.0:
        return num / den
    return math.nan if num == 0.0 else math.copysign(math.inf, num)


def saturated_rhs(n: int, power_ratio: float) -> float:
    """Right side of the saturated criterion; depends on ``n`` and ``P_T/P_W`` only."""
    lp = optimizer._log_p_m(n, power_ratio)
    pm = math.exp(lp)
    return ((n - 1) + power_ratio) * pm * lp / ((power_ratio - 1.0) * lp - n)


def saturated_lhs(c: CouplingParams) -> float:
    num = c.L_N * c.sigma_P / c.sigma_N - c.sigma_N
    return _ratio(num, c.L_N + c.sigma_N * (c.delta - 1.0))


def _unsaturated_lhs(L_N: float, sigma_P: float, sigma_N: float, delta: float, p_L: float) -> float:
    s = sigma_N
    return _ratio(L_N * p_L * sigma_P, s * s + (L_N + s * (delta - 1.0)) * p_L * s)


def unsaturated_lhs(c: CouplingParams, p_L: float) -> float:
    return _unsaturated_lhs(c.L_N, c.sigma_P, c.sigma_N, c.delta, p_L)


def unsaturated_rhs(n: int, lambda_P: float) -> float:
    return math.exp(lambert_w0(-n * lambda_P))


def _regime(lam: float, lambda_M: float) -> str:
    return "saturated" if lam > lambda_M else "unsaturated"


def _winner(U_pb: float, U_cb: float, tie_rtol: float) -> str:
    if abs(U_pb - U_cb) <= tie_rtol * max(abs(U_pb), abs(U_cb)):
        return TIE
    return PB_WINS if U_pb > U_cb else CB_WINS


def _verdict(c: CouplingParams, energy: EnergyProfile, n: int, tie_rtol: float) -> ComparisonVerdict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cb, pb, _, _ = couple(c, n)
    e_pb = energy.reslotted(c.sigma_N, c.sigma_P)
    r_cb = optimizer.optimize(cb, energy)
    r_pb = optimizer.optimize(pb, e_pb)
    reg_cb = _regime(cb.lambda_N, r_cb.thresholds.lambda_M)
    reg_pb = _regime(pb.lambda_P, r_pb.thresholds.lambda_M)
    if reg_cb != reg_pb:
        regime, lhs, rhs = MIXED, math.nan, math.nan
    elif reg_cb == "saturated":
        regime = BOTH_SATURATED
        lhs, rhs = saturated_lhs(c), saturated_rhs(n, energy.power_ratio)
    else:
        regime = BOTH_UNSATURATED
        p_L = steady_region(n, cb.M, cb.delta, cb.lambda_N).p_L
        lhs, rhs = unsaturated_lhs(c, p_L), unsaturated_rhs(n, pb.lambda_P)
    return ComparisonVerdict(
        winner=_winner(r_pb.U_max, r_cb.U_max, tie_rtol),
        regime=regime,
        U_pb=r_pb.U_max,
        U_cb=r_cb.U_max,
        inequality_lhs=lhs,
        inequality_rhs=rhs,
        K=c.K,
        L_P=c.L_P,
        M=cb.M,
    )


def pb_beats_cb(
    c: CouplingParams,
    energy: EnergyProfile,
    n: int,
    lambda_N: float | None = None,
    regime: str | None = None,
    tie_rtol: float = 1e-12,
) -> ComparisonVerdict:
    """Compare the unconstrained optima of coupled PB and CB networks.

    ``energy`` is normalized by the CB slot ``sigma_N``.  ``lambda_N``
    overrides the coupling's arrival rate.  Raises ``ValueError`` when the two
    networks are in different regimes, or not in the declared ``regime``
    (``"saturated"`` or ``"unsaturated"``).
    """
    if lambda_N is not None:
        c = replace(c, lambda_N=lambda_N)
    v = _verdict(c, energy, n, tie_rtol)
    if v.regime == MIXED:
        raise ValueError("CB and PB networks are in different regimes; no closed-form criterion applies")
    if regime is not None:
        want = _REGIME_ALIASES.get(regime)
        if want is None:
            raise ValueError(f"unknown regime {regime!r}")
        if want != v.regime:
            raise ValueError(f"declared regime {regime!r} but networks are {v.regime}")
    return v


def regime_map(
    K_values: Iterable[int],
    L_P_values: Iterable[float],
    base: CouplingParams,
    energy: EnergyProfile,
    n: int,
    tie_rtol: float = 1e-12,
) -> list[ComparisonVerdict]:
    """Verdicts over a ``K x L_P`` grid (row-major in ``K``).

    ``base`` supplies ``Delta_SP``, ``sigma_N``, ``delta`` and ``lambda_N``.
    Cells with ``M < 1`` are returned with regime ``invalid``.
    """
    L_P_values = list(L_P_values)
    cells = []
    for K in K_values:
        for L_P in L_P_values:
            c = replace(base, K=K, L_P=L_P)
            if c.M < 1.0 - 1e-12:
                cells.append(ComparisonVerdict("", INVALID, *(math.nan,) * 4, K=K, L_P=L_P, M=c.M))
            else:
                cells.append(_verdict(c, energy, n, tie_rtol))
    return cells


# -- 2-step vs 4-step small data transmission ---------------------------------


@dataclass(frozen=True)
class SmallDataSetup:
    """Physical timing (ms) and power (mW) of the 2-step and 4-step procedures."""

    Delta_SP: float = 6.0
    Delta_SN: float = 8.0
    sigma_N: float = 2.0
    P_T: float = 300.0
    P_W: float = 3.0
    n: int = 100

    @property
    def delta(self) -> float:
        return self.Delta_SN / self.sigma_N

    @property
    def power_ratio(self) -> float:
        return self.P_T / self.P_W


SMALL_DATA = SmallDataSetup()


def rasdt_coefficients(setup: SmallDataSetup = SMALL_DATA) -> tuple[float, float]:
    """``(a, b)`` such that PB wins under saturation iff ``L_N < a / (L_P + b)``."""
    R = saturated_rhs(setup.n, setup.power_ratio)
    s = setup.sigma_N
    return s * s * (1.0 + R * (setup.delta - 1.0)), setup.Delta_SP - R * s


def rasdt_threshold(L_P: float, setup: SmallDataSetup = SMALL_DATA) -> float:
    """Largest CB payload ``L_N`` (ms) for which PB still wins, both networks saturated."""
    if not L_P > 0.0:
        raise ValueError(f"L_P must be > 0, got {L_P!r}")
    a, b = rasdt_coefficients(setup)
    return a / (L_P + b) if L_P + b > 0.0 else math.inf


def rasdt_threshold_solve(L_P: float, setup: SmallDataSetup = SMALL_DATA, tol: float = 1e-13) -> float:
    """Same threshold found by root-finding the saturated criterion in ``L_N``."""
    R = saturated_rhs(setup.n, setup.power_ratio)
    s, d = setup.sigma_N, setup.delta
    sigma_P = L_P + setup.Delta_SP

    def gap(L_N: float) -> float:
        return (L_N * sigma_P / s - s) / (L_N + s * (d - 1.0)) - R

    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    return bisect(gap, 0.0, hi, xtol=0.0, rtol=tol)


def rasdt_unsaturated_threshold(
    L_P: float, lambda_N: float, setup: SmallDataSetup = SMALL_DATA, tol: float = 1e-13
) -> float:
    """Largest ``L_N`` (ms) for which PB wins with both networks unsaturated.

    ``lambda_N`` is per CB slot.  Returns ``nan`` when CB already wins at the
    shortest valid connection ``L_N = sigma_N``.
    """
    s, d = setup.sigma_N, setup.delta
    lambda_P = lambda_N * (L_P + setup.Delta_SP) / s
    rhs = unsaturated_rhs(setup.n, lambda_P)

    def gap(L_N: float) -> float:
        region = steady_region(setup.n, L_N / s, d, lambda_N)
        if not region.defined:
            raise ValueError(f"CB network has no steady region at L_N={L_N!r}")
        return _unsaturated_lhs(L_N, L_P + setup.Delta_SP, s, d, region.p_L) - rhs

    lo = s
    if gap(lo) >= 0.0:
        return math.nan
    hi = 2.0 * lo
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    return bisect(gap, lo, hi, xtol=0.0, rtol=tol)
