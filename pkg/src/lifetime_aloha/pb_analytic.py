"""Packet-based Aloha as the one-slot, overhead-free case of the CB model."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import cb_analytic
from .cb_analytic import SteadyRegion
from .model import EnergyProfile, PbParams


class PbEvaluation(NamedTuple):
    p_success: float
    lambda_out: float
    T_P: float
    U_P: float
    regime: str


def steady_interval(p: PbParams) -> SteadyRegion:
    return cb_analytic.steady_interval(p.as_cb())


def pb_eval(p: PbParams, energy: EnergyProfile) -> PbEvaluation:
    r = cb_analytic.evaluate(p.as_cb(), energy)
    return PbEvaluation(r.p_success, r.lambda_out, r.T, r.U, r.regime)


def evaluate_q(p: PbParams, energy: EnergyProfile, q) -> dict:
    return cb_analytic.evaluate_q(p.as_cb(), energy, q)


def lifetime(p: PbParams, energy: EnergyProfile) -> float:
    return cb_analytic.lifetime(p.as_cb(), energy)


def lifetime_throughput(p: PbParams, energy: EnergyProfile) -> float:
    return cb_analytic.lifetime_throughput(p.as_cb(), energy)


# Direct PB closed forms, kept for cross-checking the delegation.


def lifetime_closed_form(p: PbParams, energy: EnergyProfile) -> float:
    region = steady_interval(p)
    PT, PW, E = energy.P_T, energy.P_W, energy.E_over_sigma
    if region.contains(p.q):
        return E / (p.lambda_P / region.p_L * (PT - PW) + PW)
    return E / (PW + (PT - PW) * p.q)


def lifetime_throughput_closed_form(p: PbParams, energy: EnergyProfile) -> float:
    region = steady_interval(p)
    PT, PW, E = energy.P_T, energy.P_W, energy.E_over_sigma
    if p.lambda_P == 0.0 or p.q == 0.0:
        return 0.0
    if region.contains(p.q):
        return E / ((PT - PW) / region.p_L + PW / p.lambda_P)
    log_p = -p.n * p.q
    ps = np.exp(log_p)
    return float(E / ((PT - PW) / ps - p.n * PW / (ps * log_p)))
