"""Command-line interface: ``lifetime-aloha <command> [flags]``.

Physical inputs are converted to the slot-normalized quantities the models
use: slot lengths and payloads in ms, powers in mW, the battery in mJ, so
``E/sigma = 1000 * E[mJ] / sigma[ms]`` in mW x slots.  ``--e-over-sigma``
gives the normalized budget directly.  Arrival rates are per slot of the
scheme (per CB slot for ``compare``, ``map`` and ``casestudy``).

Every command writes CSV to ``--out`` or standard output.  ``--json [PATH]``
adds a JSON summary (to PATH, or to standard output in place of the CSV when
no ``--out`` is given).  Options may also come from ``--config FILE`` holding
``key = value`` lines named like the flags; flags win over the file.

Exit status: 0 success, 1 invalid input, 2 infeasible optimization,
3 simulation horizon reached.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__, cb_analytic, comparator, optimizer, pb_analytic, simulator
from .model import CbParams, CouplingParams, EnergyProfile, PbParams
from .special_fn import Branch, lambertw

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_HORIZON = 3

# Reference-network grid: both regimes, away from the regime edges.
DEFAULT_VALIDATION_Q = "0.0001,0.0002,0.0004,0.0006,0.0025,0.005,0.01,0.03"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def float_list(text: str) -> list[float]:
    """``"a,b,c"`` or ``"start:stop:num"`` (inclusive linear grid)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def int_list(text: str) -> list[int]:
    values = float_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return [int(v) for v in values]


# -- parser ------------------------------------------------------------------


def _add_output(p):
    p.add_argument("--out", help="CSV output path (default: standard output)")
    p.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH", help="also write a JSON summary")
    p.add_argument("--config", help="key = value file with default options")


def _add_energy(p, pt=100.0, pw=1.0, e_over_sigma=None):
    p.add_argument("--energy", type=float, help="battery budget E in mJ")
    p.add_argument("--e-over-sigma", type=float, default=e_over_sigma, help="normalized budget E/sigma (mW x slots)")
    p.add_argument("--pt", type=float, default=pt, help="transmit power, mW")
    p.add_argument("--pw", type=float, default=pw, help="wait/idle power, mW")


def _add_network(p):
    p.add_argument("--scheme", choices=("cb", "pb"), default="cb")
    p.add_argument("--n", type=int, default=100, help="number of nodes")
    p.add_argument("--m", type=float, default=8.0, help="CB data slots per connection")
    p.add_argument("--delta", type=float, default=4.0, help="CB overhead slots per connection")
    p.add_argument("--sigma-n", type=float, default=1.0, help="CB slot length, ms")
    p.add_argument("--lp", type=float, help="PB payload, ms (PB slot = lp + delta-sp)")
    p.add_argument("--delta-sp", type=float, default=0.0, help="PB per-slot overhead, ms")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="arrival rate per slot per node")
    _add_energy(p)


def _add_numerics(p):
    p.add_argument("--wtol", type=float, default=1e-12, help="Lambert W residual tolerance")
    p.add_argument("--roottol", type=float, default=1e-12, help="relative root-finding tolerance")
    p.add_argument("--gridstep", type=float, default=1e-5, help="q grid step")


def _add_sim(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--slot-cap", type=int, help="hard stop for each run, in slots")
    p.add_argument("--workers", type=int, default=1)


def _add_coupling(p, sigma_n, delta_sp, delta):
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--sigma-n", type=float, default=sigma_n, help="CB slot length, ms")
    p.add_argument("--delta-sp", type=float, default=delta_sp, help="PB per-slot overhead, ms")
    p.add_argument("--delta", type=float, default=delta, help="CB overhead slots per connection")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="arrival rate per CB slot per node")


def build_parser() -> _Parser:
    parser = _Parser(prog="lifetime-aloha", description="Energy-limited CB/PB slotted Aloha analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lambertw", help="evaluate a real Lambert W branch")
    p.add_argument("--x", type=float_list, required=True)
    p.add_argument("--branch", choices=("0", "-1", "principal", "lower"), default="0")
    p.add_argument("--wtol", type=float, default=1e-12, help="residual tolerance for the ok column")
    _add_output(p)

    p = sub.add_parser("eval", help="lifetime and lifetime throughput at given q")
    _add_network(p)
    p.add_argument("--q", type=float_list, required=True)
    _add_numerics(p)
    _add_output(p)

    p = sub.add_parser("optimize", help="best q under a lifetime constraint")
    _add_network(p)
    p.add_argument("--t0", type=float_list, default=[0.0], help="lifetime constraint(s), slots")
    _add_numerics(p)
    _add_output(p)

    p = sub.add_parser("sweep", help="model curves over q or over T_0")
    _add_network(p)
    p.add_argument("--over", choices=("q", "t0"), default="q")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, help="default: 1 for q, (E/sigma)/P_W for t0")
    p.add_argument("--num", type=int, help="grid points (default: spacing --gridstep for q, 201 for t0)")
    _add_numerics(p)
    _add_output(p)

    p = sub.add_parser("compare", help="PB vs CB at coupled parameters")
    p.add_argument("--k", type=int, required=True, help="packets per CB connection")
    p.add_argument("--lp", type=float, required=True, help="packet payload, ms")
    _add_coupling(p, sigma_n=2.0, delta_sp=2.0, delta=4.0)
    _add_energy(p, e_over_sigma=1e6)
    p.add_argument("--regime", choices=("saturated", "unsaturated"))
    _add_output(p)

    p = sub.add_parser("map", help="PB vs CB winner over a K x L_P grid")
    p.add_argument("--k", type=int_list, default=int_list("1:16:16"))
    p.add_argument("--lp", type=float_list, default=float_list("0.5:16:32"))
    _add_coupling(p, sigma_n=2.0, delta_sp=2.0, delta=4.0)
    _add_energy(p, e_over_sigma=1e6)
    _add_output(p)

    for name, text in (("simulate", "Monte-Carlo simulation at given q"), ("validate", "simulation vs model")):
        p = sub.add_parser(name, help=text)
        _add_network(p)
        if name == "simulate":
            p.add_argument("--q", type=float_list, required=True)
        else:
            p.add_argument("--q", type=float_list, default=float_list(DEFAULT_VALIDATION_Q))
        _add_sim(p)
        _add_output(p)

    p = sub.add_parser("casestudy", help="2-step vs 4-step small data payload thresholds")
    p.add_argument("--lp", type=float_list, default=[0.5], help="2-step payload(s), ms")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--sigma-n", type=float, default=2.0, help="ms")
    p.add_argument("--delta-sp", type=float, default=6.0, help="2-step overhead, ms")
    p.add_argument("--delta-sn", type=float, default=8.0, help="4-step overhead, ms")
    p.add_argument("--pt", type=float, default=300.0, help="mW")
    p.add_argument("--pw", type=float, default=3.0, help="mW")
    p.add_argument("--lambda", dest="lam", type=float, help="arrival rate per CB slot for the unsaturated threshold")
    p.add_argument("--roottol", type=float, default=1e-12)
    _add_output(p)

    parser.subparsers = sub.choices
    return parser


# -- config files --------------------------------------------------------------


def read_config(path: str, sub: argparse.ArgumentParser) -> dict:
    """Parse ``key = value`` lines into defaults for ``sub``; unknown keys are errors."""
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    flags = {}
    for a in known.values():
        for s in a.option_strings:
            flags[s.lstrip("-").replace("-", "_")] = a.dest
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in flags:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        action = known[flags[key]]
        value = value.strip()
        if action.type is not None:
            try:
                action.type(value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{path}:{lineno}: {key!r} must be one of {sorted(action.choices)}")
        values[action.dest] = value
        action.required = False
    return values


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in parser.subparsers:
        sub = parser.subparsers[known.command]
        sub.set_defaults(**read_config(known.config, sub))
    return parser.parse_args(argv)


# -- building model inputs -----------------------------------------------------


def _budget(ns, slot_ms: float) -> float:
    if ns.e_over_sigma is not None:
        return ns.e_over_sigma
    if ns.energy is None:
        raise ValueError("give the battery budget with --energy (mJ) or --e-over-sigma")
    return 1000.0 * ns.energy / slot_ms


def network(ns, q: float | None = None) -> tuple[CbParams | PbParams, EnergyProfile]:
    if ns.scheme == "cb":
        params = CbParams(n=ns.n, M=ns.m, delta=ns.delta, sigma_N=ns.sigma_n, lambda_N=ns.lam, q=q)
        slot = ns.sigma_n
    else:
        slot = ns.lp + ns.delta_sp if ns.lp is not None else ns.sigma_n
        params = PbParams(n=ns.n, sigma_P=slot, lambda_P=ns.lam, q=q)
    return params, EnergyProfile(_budget(ns, slot), ns.pt, ns.pw)


def coupling(ns, K: int, L_P: float) -> tuple[CouplingParams, EnergyProfile]:
    c = CouplingParams(K=K, L_P=L_P, Delta_SP=ns.delta_sp, sigma_N=ns.sigma_n, delta=ns.delta, lambda_N=ns.lam)
    return c, EnergyProfile(_budget(ns, ns.sigma_n), ns.pt, ns.pw)


# -- commands ------------------------------------------------------------------

EVAL_COLUMNS = ("scheme", "q", "p_success", "lambda_out", "T", "U", "regime", "q_lo", "q_hi")
OPT_COLUMNS = (
    "scheme",
    "T_0",
    "feasible",
    "U_max",
    "q_opt",
    "q_opt_lo",
    "q_opt_hi",
    "p_opt",
    "regime",
    "case",
    "p_m",
    "lambda_M",
    "T0_star",
    "p_c",
)


def _eval_rows(ns, qs):
    params, energy = network(ns)
    region = cb_analytic.steady_interval(params if ns.scheme == "cb" else params.as_cb())
    rows = []
    for q in qs:
        p = params.with_q(q)
        r = cb_analytic.evaluate(p, energy) if ns.scheme == "cb" else pb_analytic.pb_eval(p, energy)
        rows.append(dict(zip(EVAL_COLUMNS, (ns.scheme, q, *r[:4], r.regime, region.q_lo, region.q_hi))))
    return rows


def _opt_row(ns, params, energy, T_0):
    r = optimizer.optimize(params, energy, T_0, tol=ns.roottol)
    lo, hi = r.q_opt if isinstance(r.q_opt, tuple) else (r.q_point, r.q_point)
    th = r.thresholds
    p_c = th.p_c if th.p_c is not None else math.nan
    values = (ns.scheme, T_0, r.feasible, r.U_max, r.q_point, lo, hi, r.p_opt, r.regime or "", r.case_tag)
    return dict(zip(OPT_COLUMNS, (*values, th.p_m, th.lambda_M, th.T0_star, p_c)))


def cmd_lambertw(ns):
    branch = Branch.principal if ns.branch in ("0", "principal") else Branch.lower
    rows = []
    for x in ns.x:
        w = lambertw(x, branch)
        res = abs(w * math.exp(w) - x)
        rows.append(dict(x=x, branch=branch.value, w=w, residual=res, ok=res <= ns.wtol * max(1.0, abs(x))))
    return ("x", "branch", "w", "residual", "ok"), rows, {}, EXIT_OK


def cmd_eval(ns):
    return EVAL_COLUMNS, _eval_rows(ns, ns.q), {}, EXIT_OK


def cmd_optimize(ns):
    params, energy = network(ns)
    rows = [_opt_row(ns, params, energy, t) for t in ns.t0]
    bad = [r["T_0"] for r in rows if not r["feasible"]]
    if bad:
        diag(f"infeasible: lifetime constraint above the maximum lifetime {energy.max_lifetime:g} slots")
    return OPT_COLUMNS, rows, {}, EXIT_INFEASIBLE if bad else EXIT_OK


def cmd_sweep(ns):
    params, energy = network(ns)
    if ns.over == "q":
        stop = 1.0 if ns.stop is None else ns.stop
        num = ns.num if ns.num is not None else int(round((stop - ns.start) / ns.gridstep)) + 1
        return EVAL_COLUMNS, _eval_rows(ns, np.linspace(ns.start, stop, num).tolist()), {}, EXIT_OK
    stop = energy.max_lifetime if ns.stop is None else ns.stop
    grid = np.linspace(ns.start, stop, ns.num or 201).tolist()
    return OPT_COLUMNS, [_opt_row(ns, params, energy, t) for t in grid], {}, EXIT_OK


def cmd_compare(ns):
    c, energy = coupling(ns, ns.k, ns.lp)
    v = comparator.pb_beats_cb(c, energy, ns.n, regime=ns.regime)
    row = v.row()
    row["inequality_holds"] = v.inequality_holds
    return (*v.CSV_COLUMNS, "inequality_holds"), [row], {"winner": v.winner, "agrees": v.agrees}, EXIT_OK


def cmd_map(ns):
    c, energy = coupling(ns, 1, 1.0)
    cells = comparator.regime_map(ns.k, ns.lp, c, energy, ns.n)
    summary = {"disagreements": sum(not v.agrees for v in cells)}
    return comparator.ComparisonVerdict.CSV_COLUMNS, [v.row() for v in cells], summary, EXIT_OK


def _sim_config(ns, q):
    params, energy = network(ns, q)
    return simulator.SimConfig(params, energy, seed=ns.seed, runs=ns.runs, slot_cap=ns.slot_cap, workers=ns.workers)


def cmd_simulate(ns):
    rows, hit = [], False
    for q in ns.q:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", simulator.HorizonWarning)
            stats = simulator.simulate(_sim_config(ns, q))
        hit |= stats.horizon_hit
        rows.append(stats.row())
    if hit:
        diag("slot cap reached with nodes still alive")
    return simulator.SimStats.CSV_COLUMNS, rows, {"horizon_hit": hit}, EXIT_HORIZON if hit else EXIT_OK


def cmd_validate(ns):
    report = simulator.validate_against_analytic(_sim_config(ns, ns.q[0]), ns.q)
    summary = {"max_rel_error": report.max_rel_error, "horizon_hit": report.horizon_hit}
    diag(f"max relative error {report.max_rel_error:.4g}", error=False)
    if report.horizon_hit:
        diag("slot cap reached with nodes still alive")
    code = EXIT_HORIZON if report.horizon_hit else EXIT_OK
    return simulator.ValidationRow.CSV_COLUMNS, [r.row() for r in report.rows], summary, code


CASESTUDY_COLUMNS = ("L_P", "L_N_threshold", "K_threshold", "L_N_threshold_solved", "fit_a", "fit_b", "L_N_threshold_unsat")


def cmd_casestudy(ns):
    setup = comparator.SmallDataSetup(
        Delta_SP=ns.delta_sp, Delta_SN=ns.delta_sn, sigma_N=ns.sigma_n, P_T=ns.pt, P_W=ns.pw, n=ns.n
    )
    EnergyProfile(1.0, ns.pt, ns.pw)  # validates the powers
    a, b = comparator.rasdt_coefficients(setup)
    rows = []
    for L_P in ns.lp:
        L_N = comparator.rasdt_threshold(L_P, setup)
        solved = comparator.rasdt_threshold_solve(L_P, setup, tol=ns.roottol)
        unsat = math.nan
        if ns.lam is not None:
            unsat = comparator.rasdt_unsaturated_threshold(L_P, ns.lam, setup, tol=ns.roottol)
        rows.append(dict(zip(CASESTUDY_COLUMNS, (L_P, L_N, L_N / L_P, solved, a, b, unsat))))
    return CASESTUDY_COLUMNS, rows, {"fit_a": a, "fit_b": b}, EXIT_OK


COMMANDS = {
    "lambertw": cmd_lambertw,
    "eval": cmd_eval,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "map": cmd_map,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "casestudy": cmd_casestudy,
}


# -- output --------------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return "" if v is None else str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def to_json(ns, columns, rows, summary) -> str:
    config = {k: v for k, v in vars(ns).items() if k not in ("out", "json", "config")}
    meta = {"version": __version__, "command": ns.command, "seed": getattr(ns, "seed", None), "config": config}
    doc = {"meta": meta, "columns": list(columns), "rows": rows, "summary": summary}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def diag(message: str, error: bool = True) -> None:
    label = "error" if error else "note"
    if sys.stderr.isatty() and not os.environ.get("NO_COLOR"):
        label = f"\033[{31 if error else 36}m{label}\033[0m"
    print(f"{label}: {message}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse_args(argv)
        columns, rows, summary, code = COMMANDS[ns.command](ns)
    except UsageError as exc:
        diag(str(exc))
        return EXIT_INVALID
    except ValueError as exc:
        diag(str(exc))
        return EXIT_INVALID
    if ns.out:
        _write(ns.out, to_csv(columns, rows))
    elif ns.json != "-":
        _write("-", to_csv(columns, rows))
    if ns.json:
        _write(ns.json, to_json(ns, columns, rows, summary))
    return code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
