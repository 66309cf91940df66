"""Lifetime and lifetime-throughput analysis of energy-limited slotted Aloha.

Closed-form models for connection-based (CB) and packet-based (PB) slotted
Aloha, the lifetime-constrained optimum over the transmission probability,
a CB-vs-PB comparator, and a Monte-Carlo simulator that checks the models.
"""

from .cb_analytic import evaluate, steady_interval
from .comparator import pb_beats_cb, rasdt_threshold, regime_map
from .model import CbParams, CouplingParams, EnergyProfile, PbParams, couple
from .optimizer import optimize
from .pb_analytic import pb_eval
from .special_fn import lambert_w0, lambert_wm1, lambertw

__version__ = "0.1.0"

__all__ = [
    "CbParams",
    "CouplingParams",
    "EnergyProfile",
    "PbParams",
    "couple",
    "evaluate",
    "lambert_w0",
    "lambert_wm1",
    "lambertw",
    "optimize",
    "pb_beats_cb",
    "pb_eval",
    "rasdt_threshold",
    "regime_map",
    "steady_interval",
]
