"""Parameter records shared by the analytic models, optimizer and simulator.

All quantities are slot-normalized: arrival rates are per slot of the scheme,
energy budgets are expressed as ``E / sigma`` in power x slots.  Unit
conversion from physical quantities happens in :mod:`lifetime_aloha.cli`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _check_q(q: float | None) -> None:
    if q is not None:
        _require(0.0 <= q <= 1.0 and not math.isnan(q), f"q must lie in [0, 1], got {q!r}")


@dataclass(frozen=True)
class CbParams:
    """Connection-based Aloha: ``n`` nodes, ``M`` data slots plus ``delta``
    overhead slots per connection, per-node arrival rate ``lambda_N`` in data
    units (one CB slot of data) per CB slot."""

    n: int
    M: float
    delta: float
    sigma_N: float = 1.0
    lambda_N: float = 0.0
    q: float | None = None

    def __post_init__(self):
        _require(int(self.n) == self.n and self.n >= 1, f"n must be a positive integer, got {self.n!r}")
        _require(self.M >= 1.0, f"M must be >= 1, got {self.M!r}")
        _require(self.delta >= 0.0, f"delta must be >= 0, got {self.delta!r}")
        _require(self.sigma_N > 0.0, f"sigma_N must be > 0, got {self.sigma_N!r}")
        _require(self.lambda_N >= 0.0, f"lambda_N must be >= 0, got {self.lambda_N!r}")
        _check_q(self.q)

    @property
    def lambda_hat(self) -> float:
        """Aggregate arrival rate n * lambda_N."""
        return self.n * self.lambda_N

    @property
    def L_N(self) -> float:
        return self.M * self.sigma_N

    def with_q(self, q: float) -> "CbParams":
        return replace(self, q=q)


@dataclass(frozen=True)
class PbParams:
    """Packet-based Aloha: one packet per PB slot ``sigma_P``; ``lambda_P``
    packets per PB slot per node."""

    n: int
    sigma_P: float = 1.0
    lambda_P: float = 0.0
    q: float | None = None

    def __post_init__(self):
        _require(int(self.n) == self.n and self.n >= 1, f"n must be a positive integer, got {self.n!r}")
        _require(self.sigma_P > 0.0, f"sigma_P must be > 0, got {self.sigma_P!r}")
        _require(self.lambda_P >= 0.0, f"lambda_P must be >= 0, got {self.lambda_P!r}")
        _check_q(self.q)

    @property
    def lambda_hat(self) -> float:
        return self.n * self.lambda_P

    def with_q(self, q: float) -> "PbParams":
        return replace(self, q=q)

    def as_cb(self) -> CbParams:
        """The CB record this scheme reduces to (M=1, delta=0)."""
        return CbParams(n=self.n, M=1.0, delta=0.0, sigma_N=self.sigma_P, lambda_N=self.lambda_P, q=self.q)


@dataclass(frozen=True)
class EnergyProfile:
    """Battery budget normalized by the scheme's slot and per-state powers.

    Idle and waiting power are the same (``P_W``).
    """

    E_over_sigma: float
    P_T: float
    P_W: float

    def __post_init__(self):
        _require(self.E_over_sigma > 0.0, f"E_over_sigma must be > 0, got {self.E_over_sigma!r}")
        _require(self.P_W > 0.0, f"P_W must be > 0, got {self.P_W!r}")
        _require(self.P_T >= self.P_W, f"P_T ({self.P_T!r}) must be >= P_W ({self.P_W!r})")

    @property
    def power_ratio(self) -> float:
        return self.P_T / self.P_W

    @property
    def max_lifetime(self) -> float:
        """Lifetime of a node that never transmits, (E/sigma)/P_W."""
        return self.E_over_sigma / self.P_W

    def scaled(self, factor: float) -> "EnergyProfile":
        return replace(self, E_over_sigma=self.E_over_sigma * factor)

    def reslotted(self, sigma_from: float, sigma_to: float) -> "EnergyProfile":
        """Same physical budget expressed in slots of length ``sigma_to``."""
        return self.scaled(sigma_from / sigma_to)


@dataclass(frozen=True)
class CouplingParams:
    """Physical description linking a CB and a PB network carrying the same data.

    ``K`` packets of payload ``L_P`` travel in one CB connection; a PB slot is
    ``L_P + Delta_SP`` long.  A failed RTS costs one CB slot ``sigma_N``.
    """

    K: int
    L_P: float
    Delta_SP: float
    sigma_N: float
    delta: float
    lambda_N: float = 0.0

    def __post_init__(self):
        _require(int(self.K) == self.K and self.K >= 1, f"K must be a positive integer, got {self.K!r}")
        _require(self.L_P > 0.0, f"L_P must be > 0, got {self.L_P!r}")
        _require(self.Delta_SP >= 0.0, f"Delta_SP must be >= 0, got {self.Delta_SP!r}")
        _require(self.sigma_N > 0.0, f"sigma_N must be > 0, got {self.sigma_N!r}")
        _require(self.delta >= 0.0, f"delta must be >= 0, got {self.delta!r}")
        _require(self.lambda_N >= 0.0, f"lambda_N must be >= 0, got {self.lambda_N!r}")

    @property
    def L_N(self) -> float:
        return self.K * self.L_P

    @property
    def M(self) -> float:
        return self.K * self.L_P / self.sigma_N

    @property
    def sigma_P(self) -> float:
        return self.L_P + self.Delta_SP

    @property
    def Delta_FN(self) -> float:
        return self.sigma_N

    @property
    def lambda_P(self) -> float:
        return self.lambda_N * self.sigma_P / self.sigma_N


class Coupled(NamedTuple):
    cb: CbParams
    pb: PbParams
    L_N: float
    integral_M: bool


def couple(c: CouplingParams, n: int = 1) -> Coupled:
    """Build matching CB and PB parameter records (``q`` unset).

    Raises ``ValueError`` when the CB connection would be shorter than one
    slot.  A non-integral ``M`` is accepted by the analytics but flagged (and
    warned about) since the simulator needs whole slots.
    """
    M = c.M
    if M < 1.0 - 1e-12:
        raise ValueError(f"coupling gives M = K*L_P/sigma_N = {M!r} < 1")
    M = max(M, 1.0)
    integral = abs(M - round(M)) <= 1e-9 * max(1.0, M)
    if integral:
        M = float(round(M))
    else:
        warnings.warn(f"coupled M = {M!r} is not an integer; the simulator cannot run it", stacklevel=2)
    cb = CbParams(n=n, M=M, delta=c.delta, sigma_N=c.sigma_N, lambda_N=c.lambda_N)
    pb = PbParams(n=n, sigma_P=c.sigma_P, lambda_P=c.lambda_P)
    return Coupled(cb, pb, c.L_N, integral)
