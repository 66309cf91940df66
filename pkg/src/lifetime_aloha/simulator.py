"""Slot-level Monte-Carlo simulation of energy-limited CB and PB slotted Aloha.

Every alive node receives one data unit per slot with probability ``lambda``
(Bernoulli arrivals at the start of the slot, drawn as geometric gaps).  ``M``
accumulated units form a request.  In a free slot each node holding a request
transmits with probability ``q``; a lone transmitter wins the channel for
``M + delta`` slots at transmit power, two or more transmitters each burn one
failed slot at transmit power, and everyone else spends the slot at waiting
power.  A node dies in the slot that exhausts its budget; a connection cut
short by death delivers nothing and frees the channel.  PB is the same
process with ``M = 1`` and ``delta = 0``.

The slot loop is compiled with numba; each run seeds its own generator from a
``numpy.random.SeedSequence`` child so runs are reproducible and independent.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .model import CbParams, EnergyProfile, PbParams

Z95 = 1.959963984540054

# per-node tally columns produced by the kernel
IDLE, WAITING, FAILED, SUCCESS_SLOTS, WINS, COMPLETED, DELIVERED, LIFETIME = range(8)
_N_COLS = 8


class HorizonWarning(RuntimeWarning):
    """Some node was still alive when the slot cap was reached."""


@numba.njit(cache=True, nogil=True)
def _run_kernel(n, M, span, lam, q, budget, P_T, P_W, seed, slot_cap):
    np.random.seed(seed)
    tally = np.zeros((n, _N_COLS), dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    attempted = np.zeros(n, dtype=np.bool_)
    units = np.zeros(n, dtype=np.int64)
    queue = np.zeros(n, dtype=np.int64)
    next_arrival = np.empty(n, dtype=np.int64)
    never = np.iinfo(np.int64).max
    for i in range(n):
        next_arrival[i] = np.random.geometric(lam) - 1 if lam > 0.0 else never
    n_alive = n
    winner = -1
    remaining = 0
    t = 0
    while n_alive > 0 and t < slot_cap:
        # arrivals at the start of the slot can contend in it
        for i in range(n):
            if alive[i] and next_arrival[i] == t:
                units[i] += 1
                if units[i] == M:
                    units[i] = 0
                    queue[i] += 1
                next_arrival[i] = t + np.random.geometric(lam)
        transmitters = 0
        if winner < 0:
            for i in range(n):
                attempted[i] = alive[i] and queue[i] > 0 and np.random.random() < q
                if attempted[i]:
                    transmitters += 1
                    winner = i
            if transmitters == 1:
                tally[winner, WINS] += 1
                remaining = span
            else:
                winner = -1
        for i in range(n):
            if not alive[i]:
                continue
            if i == winner:
                tally[i, SUCCESS_SLOTS] += 1
            elif transmitters > 1 and attempted[i]:
                tally[i, FAILED] += 1
            elif queue[i] > 0:
                tally[i, WAITING] += 1
            else:
                tally[i, IDLE] += 1
        if winner >= 0:
            remaining -= 1
            if remaining == 0:
                queue[winner] -= 1
                tally[winner, COMPLETED] += 1
                tally[winner, DELIVERED] += M
                winner = -1
        for i in range(n):
            if alive[i]:
                low = tally[i, IDLE] + tally[i, WAITING]
                high = tally[i, FAILED] + tally[i, SUCCESS_SLOTS]
                if P_W * low + P_T * high >= budget:
                    alive[i] = False
                    n_alive -= 1
                    tally[i, LIFETIME] = t + 1
                    if i == winner:
                        winner = -1
        t += 1
    for i in range(n):
        if alive[i]:
            tally[i, LIFETIME] = t
    return tally, n_alive


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment: ``runs`` independent replications of a
    network described by ``params`` (CB or PB) at transmission probability
    ``params.q``."""

    params: CbParams | PbParams
    energy: EnergyProfile
    seed: int = 0
    runs: int = 1
    slot_cap: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs!r}")
        if self.params.q is None:
            raise ValueError("params.q must be set for simulation")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if isinstance(self.params, CbParams):
            for name in ("M", "delta"):
                v = getattr(self.params, name)
                if v != int(v):
                    raise ValueError(f"simulator needs integral {name}, got {v!r}")
        if self.slot_cap is not None and self.slot_cap < self.energy.max_lifetime:
            raise ValueError(
                f"slot_cap={self.slot_cap} is below the longest possible lifetime {self.energy.max_lifetime:g}"
            )

    @property
    def scheme(self) -> str:
        return "cb" if isinstance(self.params, CbParams) else "pb"

    @property
    def cb_view(self) -> CbParams:
        return self.params if isinstance(self.params, CbParams) else self.params.as_cb()

    @property
    def horizon(self) -> int:
        if self.slot_cap is not None:
            return int(self.slot_cap)
        return int(math.ceil(self.energy.max_lifetime)) + 1

    def run_seeds(self) -> list[int]:
        children = np.random.SeedSequence(self.seed).spawn(self.runs)
        return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


@dataclass(frozen=True)
class RunResult:
    """Per-node tallies of one replication (rows are nodes, columns per ``IDLE`` ...)."""

    tally: np.ndarray
    survivors: int

    @property
    def lifetime(self) -> np.ndarray:
        return self.tally[:, LIFETIME]

    @property
    def delivered(self) -> np.ndarray:
        return self.tally[:, DELIVERED]

    def tallied_energy(self, energy: EnergyProfile) -> np.ndarray:
        t = self.tally
        return energy.P_W * (t[:, IDLE] + t[:, WAITING]) + energy.P_T * (t[:, FAILED] + t[:, SUCCESS_SLOTS])

    def consumed_energy(self, energy: EnergyProfile) -> np.ndarray:
        """Energy drawn from the battery; the final slot is truncated at the budget."""
        return np.minimum(self.tallied_energy(energy), energy.E_over_sigma)


@dataclass(frozen=True)
class SimStats:
    """Averages over nodes and runs; ``ci_*`` are 95% normal half-widths over run means."""

    scheme: str
    q: float
    mean_lifetime: float
    mean_delivered: float
    idle_slots: float
    waiting_slots: float
    failed_slots: float
    success_slots: float
    successes: float
    collisions: float
    ci_lifetime: float
    ci_delivered: float
    runs: tuple[RunResult, ...] = ()

    CSV_COLUMNS = (
        "scheme",
        "q",
        "mean_lifetime",
        "mean_delivered",
        "idle_slots",
        "waiting_slots",
        "failed_slots",
        "success_slots",
        "successes",
        "collisions",
        "ci_lifetime",
        "ci_delivered",
    )

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_COLUMNS}

    @property
    def horizon_hit(self) -> bool:
        return any(r.survivors for r in self.runs)


def _halfwidth(values: np.ndarray) -> float:
    if len(values) < 2:
        return math.nan
    return float(Z95 * np.std(values, ddof=1) / math.sqrt(len(values)))


def simulate_run(config: SimConfig, seed: int) -> RunResult:
    p = config.cb_view
    e = config.energy
    tally, survivors = _run_kernel(
        int(p.n),
        int(p.M),
        int(p.M + p.delta),
        float(p.lambda_N),
        float(p.q),
        float(e.E_over_sigma),
        float(e.P_T),
        float(e.P_W),
        seed,
        config.horizon,
    )
    return RunResult(tally=tally, survivors=int(survivors))


def simulate(config: SimConfig) -> SimStats:
    """Run all replications and aggregate per-node means.

    Emits :class:`HorizonWarning` when ``slot_cap`` stopped a run early.
    """
    seeds = config.run_seeds()
    if config.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            runs = tuple(pool.map(lambda s: simulate_run(config, s), seeds))
    else:
        runs = tuple(simulate_run(config, s) for s in seeds)
    if any(r.survivors for r in runs):
        warnings.warn(f"slot cap {config.horizon} reached with nodes still alive", HorizonWarning, stacklevel=2)

    per_run = np.array([r.tally.mean(axis=0) for r in runs])
    mean = per_run.mean(axis=0)
    return SimStats(
        scheme=config.scheme,
        q=float(config.params.q),
        mean_lifetime=float(mean[LIFETIME]),
        mean_delivered=float(mean[DELIVERED]),
        idle_slots=float(mean[IDLE]),
        waiting_slots=float(mean[WAITING]),
        failed_slots=float(mean[FAILED]),
        success_slots=float(mean[SUCCESS_SLOTS]),
        successes=float(mean[WINS]),
        collisions=float(mean[FAILED]),
        ci_lifetime=_halfwidth(per_run[:, LIFETIME]),
        ci_delivered=_halfwidth(per_run[:, DELIVERED]),
        runs=runs,
    )


@dataclass(frozen=True)
class ValidationRow:
    """Simulated against analytic values at one ``q``.

    ``success_ratio`` is successes per failed attempt pooled over nodes and
    runs, to be compared with ``p/(1-p)``; its CI is over run-level ratios.
    ``energy_residual`` is the largest ``|tallied energy - E/sigma|`` of any
    node, which stays below ``P_T`` when every node died of exhaustion.
    """

    q: float
    regime: str
    T_sim: float
    T_model: float
    T_rel_err: float
    ci_T: float
    U_sim: float
    U_model: float
    U_rel_err: float
    ci_U: float
    success_ratio: float
    success_ratio_model: float
    ci_success_ratio: float
    energy_residual: float
    slot_identity: bool

    CSV_COLUMNS = (
        "q",
        "regime",
        "T_sim",
        "T_model",
        "T_rel_err",
        "ci_T",
        "U_sim",
        "U_model",
        "U_rel_err",
        "ci_U",
        "success_ratio",
        "success_ratio_model",
        "ci_success_ratio",
        "energy_residual",
        "slot_identity",
    )

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_COLUMNS}


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple[ValidationRow, ...]

    @property
    def max_rel_error(self) -> float:
        return max(max(abs(r.T_rel_err), abs(r.U_rel_err)) for r in self.rows)

    @property
    def horizon_hit(self) -> bool:
        return any(not math.isfinite(r.energy_residual) for r in self.rows)


def _ratio_or_nan(num, den):
    return num / den if den > 0 else math.nan


def validate_against_analytic(config: SimConfig, q_grid) -> ValidationReport:
    """Simulate ``config`` at every ``q`` in ``q_grid`` and compare with the closed forms."""
    from . import cb_analytic

    q_grid = list(q_grid)
    if not q_grid:
        raise ValueError("q_grid must not be empty")
    e = config.energy
    rows = []
    for q in q_grid:
        cfg = SimConfig(
            params=config.params.with_q(float(q)),
            energy=e,
            seed=config.seed,
            runs=config.runs,
            slot_cap=config.slot_cap,
            workers=config.workers,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HorizonWarning)
            stats = simulate(cfg)
        model = cb_analytic.evaluate(cfg.cb_view, e)
        wins = np.array([r.tally[:, WINS].sum() for r in stats.runs], dtype=float)
        fails = np.array([r.tally[:, FAILED].sum() for r in stats.runs], dtype=float)
        per_run = np.array([_ratio_or_nan(w, f) for w, f in zip(wins, fails)])
        ps = model.p_success
        residual = max(float(np.max(np.abs(r.tallied_energy(e) - e.E_over_sigma))) for r in stats.runs)
        if stats.horizon_hit:
            residual = math.inf
        slots = [r.tally[:, [IDLE, WAITING, FAILED, SUCCESS_SLOTS]].sum(axis=1) for r in stats.runs]
        rows.append(
            ValidationRow(
                q=float(q),
                regime=model.regime,
                T_sim=stats.mean_lifetime,
                T_model=model.T,
                T_rel_err=stats.mean_lifetime / model.T - 1.0,
                ci_T=stats.ci_lifetime,
                U_sim=stats.mean_delivered,
                U_model=model.U,
                U_rel_err=_ratio_or_nan(stats.mean_delivered, model.U) - 1.0 if model.U > 0 else math.nan,
                ci_U=stats.ci_delivered,
                success_ratio=float(_ratio_or_nan(wins.sum(), fails.sum())),
                success_ratio_model=ps / (1.0 - ps) if ps < 1.0 else math.inf,
                ci_success_ratio=_halfwidth(per_run[np.isfinite(per_run)]),
                energy_residual=residual,
                slot_identity=all(np.array_equal(s, r.lifetime) for s, r in zip(slots, stats.runs)),
            )
        )
    return ValidationReport(tuple(rows))
