import math

import numpy as np
import pytest
from _sets import near_tie, random_coupling

from lifetime_aloha import comparator
from lifetime_aloha.comparator import (
    BOTH_SATURATED,
    BOTH_UNSATURATED,
    CB_WINS,
    INVALID,
    PB_WINS,
    TIE,
    pb_beats_cb,
    rasdt_threshold,
    regime_map,
)
from lifetime_aloha.model import CouplingParams, EnergyProfile

MAP_E = EnergyProfile(1e6, 100.0, 1.0)
SAT = CouplingParams(K=1, L_P=1.0, Delta_SP=2.0, sigma_N=2.0, delta=4.0, lambda_N=0.02)
UNSAT = CouplingParams(K=1, L_P=1.0, Delta_SP=2.0, sigma_N=2.0, delta=4.0, lambda_N=1e-4)
K_GRID = [1, 2, 3, 4, 6, 8, 12, 16]
LP_GRID = [0.5, 1, 2, 3, 4, 6, 8, 12, 16]


def test_saturated_rhs_value_and_scale_free():
    assert comparator.saturated_rhs(100, 100.0) == pytest.approx(0.4113, abs=5e-5)
    e1, e2 = EnergyProfile(1.0, 300.0, 3.0), EnergyProfile(1.0, 100.0, 1.0)
    assert comparator.saturated_rhs(100, e1.power_ratio) == comparator.saturated_rhs(100, e2.power_ratio)


@pytest.mark.parametrize("regime", ["saturated", "unsaturated"])
def test_inequality_matches_direct_comparison(regime):
    rng = np.random.default_rng(3 if regime == "saturated" else 4)
    checked = 0
    for _ in range(40):
        c, e, n = random_coupling(rng, regime)
        v = pb_beats_cb(c, e, n, regime=regime)
        if near_tie(v):
            continue
        checked += 1
        assert v.inequality_holds == (v.U_pb > v.U_cb)
        assert v.winner == (PB_WINS if v.U_pb > v.U_cb else CB_WINS)
    assert checked >= 35


def test_mixed_regimes_are_rejected():
    c = CouplingParams(K=1, L_P=20.0, Delta_SP=2.0, sigma_N=2.0, delta=4.0, lambda_N=0.002)
    with pytest.raises(ValueError, match="different regimes"):
        pb_beats_cb(c, MAP_E, 100)


def test_declared_regime_must_match():
    with pytest.raises(ValueError, match="declared"):
        pb_beats_cb(SAT.__class__(4, 1.0, 2.0, 2.0, 4.0, 0.02), MAP_E, 100, regime="unsaturated")
    with pytest.raises(ValueError, match="unknown"):
        pb_beats_cb(SAT.__class__(4, 1.0, 2.0, 2.0, 4.0, 0.02), MAP_E, 100, regime="busy")


def test_lambda_override():
    base = CouplingParams(4, 1.0, 2.0, 2.0, 4.0)
    assert pb_beats_cb(base, MAP_E, 100, lambda_N=0.02).regime == BOTH_SATURATED
    assert pb_beats_cb(base, MAP_E, 100, lambda_N=1e-4).regime == BOTH_UNSATURATED


def test_vanishing_overheads_tie():
    c = CouplingParams(K=1, L_P=2.0, Delta_SP=0.0, sigma_N=2.0, delta=0.0, lambda_N=0.02)
    v = pb_beats_cb(c, MAP_E, 100)
    assert v.winner == TIE
    assert v.U_pb == pytest.approx(v.U_cb, rel=1e-12)
    assert math.isnan(v.inequality_lhs)


def test_invalid_cells_and_single_cell():
    cells = regime_map([1], [0.5, 4.0], SAT, MAP_E, 100)
    assert cells[0].regime == INVALID and cells[0].M == 0.25
    direct = pb_beats_cb(CouplingParams(1, 4.0, 2.0, 2.0, 4.0, 0.02), MAP_E, 100)
    assert cells[1] == direct


def winners(cells):
    return {(v.K, v.L_P): v.winner for v in cells if v.regime != INVALID}


def test_payload_map_shape():
    sat = regime_map(K_GRID, LP_GRID, SAT, MAP_E, 100)
    unsat = regime_map(K_GRID, LP_GRID, UNSAT, MAP_E, 100)
    assert all(v.regime in (BOTH_SATURATED, INVALID) for v in sat)
    assert all(v.regime in (BOTH_UNSATURATED, INVALID) for v in unsat)
    assert all(v.agrees for v in sat + unsat)
    ws, wu = winners(sat), winners(unsat)
    cb_sat = {k for k, w in ws.items() if w == CB_WINS}
    cb_unsat = {k for k, w in wu.items() if w == CB_WINS}
    # CB's region grows under saturation
    assert cb_unsat < cb_sat
    # small K, unsaturated: CB only at the long end of L_P
    for K in (1, 2):
        row = [wu.get((K, lp)) for lp in LP_GRID if (K, lp) in wu]
        assert row[0] == PB_WINS and row[-1] == CB_WINS
        first_cb = row.index(CB_WINS)
        assert all(w == CB_WINS for w in row[first_cb:])
    # K-slices of the saturated map are up-closed
    for lp in LP_GRID:
        col = [ws[(K, lp)] for K in K_GRID if (K, lp) in ws]
        if CB_WINS in col:
            assert all(w == CB_WINS for w in col[col.index(CB_WINS):])


def test_row_and_columns():
    v = regime_map([2], [2.0], SAT, MAP_E, 100)[0]
    assert tuple(v.row()) == comparator.ComparisonVerdict.CSV_COLUMNS


def test_rasdt_threshold_values():
    assert round(rasdt_threshold(0.5), 2) == 1.57
    assert rasdt_threshold(0.5) == pytest.approx(comparator.rasdt_threshold_solve(0.5), rel=1e-11)
    for lp in np.linspace(0.01, 10, 200):
        assert rasdt_threshold(lp) == pytest.approx(8.9356 / (lp + 5.1774), rel=1e-3)
    a, b = comparator.rasdt_coefficients()
    assert a / b == pytest.approx(8.9356 / 5.1774, rel=1e-3)
    assert rasdt_threshold(1e-9) == pytest.approx(a / b, rel=1e-9)
    with pytest.raises(ValueError):
        rasdt_threshold(0.0)


def test_rasdt_threshold_separates_winners():
    setup = comparator.SMALL_DATA
    R = comparator.saturated_rhs(setup.n, setup.power_ratio)
    L_P = 0.5
    L_N = rasdt_threshold(L_P)
    for frac, below in ((0.9, True), (1.1, False)):
        c = CouplingParams(1, frac * L_N, L_P + setup.Delta_SP - frac * L_N, setup.sigma_N, setup.delta)
        assert (comparator.saturated_lhs(c) < R) == below
    # every realizable connection (L_N >= sigma_N) lies above the threshold: CB wins
    e = EnergyProfile(1e6, setup.P_T, setup.P_W)
    for K in (4, 8, 16):
        c = CouplingParams(K, L_P, setup.Delta_SP, setup.sigma_N, setup.delta, 0.05)
        assert pb_beats_cb(c, e, setup.n, regime="saturated").winner == CB_WINS


def test_unsaturated_threshold():
    L_N = comparator.rasdt_unsaturated_threshold(0.5, 1e-4)
    assert 2.0 < L_N < 10.0
    setup = comparator.SMALL_DATA
    rhs = comparator.unsaturated_rhs(setup.n, 1e-4 * 6.5 / 2.0)
    p_L = comparator.steady_region(setup.n, L_N / 2.0, setup.delta, 1e-4).p_L
    lhs = comparator._unsaturated_lhs(L_N, 6.5, 2.0, setup.delta, p_L)
    assert lhs == pytest.approx(rhs, rel=1e-10)
