"""Closed-form model of energy-limited connection-based slotted Aloha.

Each node contends with a short request; a won contention holds the channel
for ``M + delta`` slots.  With ``a = -n*lambda/(M - n*lambda*(M+delta-1))``
the request-queue fixed point has two roots ``p_L = exp(W0(a))`` and
``p_S = exp(W-1(a))``.  For ``q`` in ``[-W0(a)/n, -W-1(a)/n]`` the network sits
at the large root and every node delivers its offered load (unsaturated
branch); otherwise nodes are backlogged and succeed with ``p = exp(-n q)``
(saturated branch).

Functions taking ``q`` accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import CbParams, EnergyProfile
from .special_fn import BRANCH_POINT, DOMAIN_SLACK, lambert_w0, lambert_wm1

P_FLOOR = 1e-300
P_CEIL = 1.0 - 1e-15

UNSATURATED = "unsaturated"
SATURATED = "saturated"


@dataclass(frozen=True)
class SteadyRegion:
    """Transmission probabilities for which the network stays at ``p_L``."""

    q_lo: float
    q_hi: float
    p_L: float
    p_S: float
    defined: bool
    argument: float

    def contains(self, q):
        if not self.defined:
            return np.zeros(np.shape(q), dtype=bool) if np.ndim(q) else False
        return (q >= self.q_lo) & (q <= self.q_hi)


_UNDEFINED = dict(q_lo=math.nan, q_hi=math.nan, p_L=math.nan, p_S=math.nan, defined=False)


@dataclass(frozen=True)
class StateCounts:
    """Expected per-lifetime counts: slots idle/waiting, failed attempts and
    successful connections, plus the request service rate and offered load."""

    n_I: float
    n_W: float
    n_F: float
    n_S: float
    mu_r: float
    rho: float
    T: float


class Evaluation(NamedTuple):
    p_success: float
    lambda_out: float
    T: float
    U: float
    regime: str


def lambert_argument(n: int, M: float, delta: float, lam: float) -> float:
    """``-n*lam / (M - n*lam*(M+delta-1))``; ``-inf`` when the denominator is not positive."""
    lam_hat = n * lam
    denom = M - lam_hat * (M + delta - 1.0)
    if lam_hat == 0.0:
        return 0.0
    if denom <= 0.0:
        return -math.inf
    return -lam_hat / denom


def steady_region(n: int, M: float, delta: float, lam: float) -> SteadyRegion:
    a = lambert_argument(n, M, delta, lam)
    if a == 0.0:
        return SteadyRegion(q_lo=0.0, q_hi=1.0, p_L=1.0, p_S=0.0, defined=True, argument=0.0)
    if a < BRANCH_POINT - DOMAIN_SLACK:
        return SteadyRegion(argument=a, **_UNDEFINED)
    w0 = lambert_w0(a)
    wm1 = lambert_wm1(a)
    return SteadyRegion(
        q_lo=min(1.0, -w0 / n),
        q_hi=min(1.0, -wm1 / n),
        p_L=math.exp(w0),
        p_S=math.exp(wm1),
        defined=True,
        argument=a,
    )


def steady_interval(p: CbParams) -> SteadyRegion:
    return steady_region(p.n, p.M, p.delta, p.lambda_N)


# -- branch formulas in terms of the success probability ---------------------


def _clamp_p(p):
    return np.clip(p, P_FLOOR, P_CEIL)


def saturated_lifetime(p, n, M, delta, energy: EnergyProfile, log_p=None):
    """Lifetime of a backlogged node succeeding with probability ``p``.

    ``log_p`` may be passed when known exactly (``-n q``); otherwise ``p`` is
    clamped into (0, 1) before taking logs.
    """
    if log_p is None:
        p = _clamp_p(p)
        log_p = np.log(p)
    g = M + delta - 1.0
    PT, PW = energy.P_T, energy.P_W
    plp = p * log_p
    num = energy.E_over_sigma * (1.0 - plp * g)
    den = PW - ((n - 1) * PW + PT) * g * plp / n - (PT - PW) * log_p / n
    return num / den


def saturated_lifetime_throughput(p, n, M, delta, energy: EnergyProfile, log_p=None):
    """Lifetime throughput of a backlogged node; maximal at ``p_m``."""
    if log_p is None:
        p = _clamp_p(p)
        log_p = np.log(p)
    g = M + delta - 1.0
    PT, PW = energy.P_T, energy.P_W
    p = np.asarray(p, dtype=float)
    log_p = np.asarray(log_p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        den = ((n - 1) * PW + PT) * g / M + (PT - PW) / (M * p) - n * PW / (M * p * log_p)
        out = energy.E_over_sigma / den
    out = np.where((log_p == 0.0) | (p == 0.0), 0.0, out)
    return out if out.ndim else float(out)


def saturated_throughput(p, n, M, delta, log_p=None):
    """Node throughput (data units per slot) of a backlogged node."""
    if log_p is None:
        p = _clamp_p(p)
        log_p = np.log(p)
    g = M + delta - 1.0
    plp = p * log_p
    return -M * plp / (n * (1.0 - g * plp))


def request_service_rate(p, n, M, delta, log_p=None):
    """Successful requests per slot of a backlogged node."""
    return saturated_throughput(p, n, M, delta, log_p) / M


def unsaturated_lifetime(p_L, lam, M, delta, energy: EnergyProfile):
    g = M + delta - 1.0
    PT, PW = energy.P_T, energy.P_W
    return energy.E_over_sigma / ((1.0 + g * p_L) * lam / (M * p_L) * (PT - PW) + PW)


def unsaturated_lifetime_throughput(p_L, lam, M, delta, energy: EnergyProfile):
    if lam == 0.0:
        return 0.0
    g = M + delta - 1.0
    PT, PW = energy.P_T, energy.P_W
    return energy.E_over_sigma / ((1.0 + g * p_L) / (M * p_L) * (PT - PW) + PW / lam)


# -- q-driven evaluation -----------------------------------------------------


def _require_q(p: CbParams) -> float:
    if p.q is None:
        raise ValueError("transmission probability q is not set")
    return p.q


def evaluate_q(p: CbParams, energy: EnergyProfile, q, region: SteadyRegion | None = None) -> dict:
    """All model outputs over a scalar or array of transmission probabilities.

    Returns arrays ``p_success``, ``lambda_out``, ``T``, ``U`` and a boolean
    mask ``unsaturated``.
    """
    q = np.asarray(q, dtype=float)
    if region is None:
        region = steady_interval(p)
    n, M, delta, lam = p.n, p.M, p.delta, p.lambda_N
    unsat = np.asarray(region.contains(q), dtype=bool)
    log_p = -n * q
    ps = np.exp(log_p)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_out = np.where(q == 0.0, 0.0, saturated_throughput(ps, n, M, delta, log_p))
        T = np.where(q == 0.0, energy.max_lifetime, saturated_lifetime(ps, n, M, delta, energy, log_p))
    U = np.asarray(saturated_lifetime_throughput(ps, n, M, delta, energy, log_p), dtype=float)
    if region.defined and unsat.any():
        pL = region.p_L
        ps = np.where(unsat, pL, ps)
        lam_out = np.where(unsat, lam, lam_out)
        T = np.where(unsat, unsaturated_lifetime(pL, lam, M, delta, energy), T)
        U = np.where(unsat, unsaturated_lifetime_throughput(pL, lam, M, delta, energy), U)
    return dict(p_success=ps, lambda_out=lam_out, T=T, U=U, unsaturated=unsat)


def evaluate(p: CbParams, energy: EnergyProfile) -> Evaluation:
    r = evaluate_q(p, energy, _require_q(p))
    return Evaluation(
        p_success=float(r["p_success"]),
        lambda_out=float(r["lambda_out"]),
        T=float(r["T"]),
        U=float(r["U"]),
        regime=UNSATURATED if bool(r["unsaturated"]) else SATURATED,
    )


def is_unsaturated(p: CbParams) -> bool:
    return bool(steady_interval(p).contains(_require_q(p)))


def success_prob(p: CbParams) -> float:
    q = _require_q(p)
    region = steady_interval(p)
    if region.contains(q):
        return region.p_L
    return math.exp(-p.n * q)


def node_throughput(p: CbParams) -> float:
    q = _require_q(p)
    if steady_interval(p).contains(q):
        return p.lambda_N
    if q == 0.0:
        return 0.0
    log_p = -p.n * q
    return float(saturated_throughput(math.exp(log_p), p.n, p.M, p.delta, log_p))


def lifetime(p: CbParams, energy: EnergyProfile) -> float:
    return float(evaluate_q(p, energy, _require_q(p))["T"])


def lifetime_throughput(p: CbParams, energy: EnergyProfile) -> float:
    return float(evaluate_q(p, energy, _require_q(p))["U"])


def expected_state_counts(p: CbParams, energy: EnergyProfile) -> StateCounts:
    """Per-lifetime state counts consistent with the lifetime and energy identities.

    Backlogged nodes never idle and complete requests at the saturated
    service rate.  Below saturation each node completes ``lambda*T/M``
    requests; the waiting/idle split follows from the fraction ``q_lo/q`` of
    contention slots in which a node holds a head-of-line request, and the
    node is assumed to hold one with the same probability while the channel is
    carrying another node's connection.
    """
    q = _require_q(p)
    n, M, delta, lam = p.n, p.M, p.delta, p.lambda_N
    g = M + delta - 1.0
    span = M + delta
    region = steady_interval(p)
    T = lifetime(p, energy)
    if region.contains(q):
        if lam == 0.0:
            return StateCounts(n_I=T, n_W=0.0, n_F=0.0, n_S=0.0, mu_r=math.nan, rho=0.0, T=T)
        pL = region.p_L
        n_S = lam * T / M
        n_F = n_S * (1.0 - pL) / pL
        free = 1.0 - n * lam * g / M
        busy_frac = min(1.0, region.q_lo / q) if q > 0.0 else 1.0
        n_W = busy_frac * ((1.0 - q) * free * T + (1.0 - free) * T - n_S * g)
        n_I = max(0.0, T - n_W - n_F - n_S * span)
    else:
        log_p = -n * q
        ps = math.exp(log_p)
        mu = 0.0 if q == 0.0 else float(request_service_rate(ps, n, M, delta, log_p))
        n_I = 0.0
        n_S = mu * T
        n_F = n_S * (1.0 - ps) / ps if n_S > 0.0 else 0.0
        n_W = max(0.0, T - n_F - n_S * span)
    busy = n_W + n_F + n_S * span
    mu_r = n_S / busy if busy > 0.0 else 0.0
    rho = lam * busy / (M * n_S) if n_S > 0.0 else math.inf
    return StateCounts(n_I=n_I, n_W=n_W, n_F=n_F, n_S=n_S, mu_r=mu_r, rho=rho, T=T)
