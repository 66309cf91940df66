import csv
import io
import json

import pytest

from lifetime_aloha import __version__, cli, simulator

BASE = ["--n", "20", "--m", "4", "--delta", "2", "--lambda", "0.02", "--e-over-sigma", "2000", "--pt", "20"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_casestudy_threshold(capsys):
    code, out, _ = run(capsys, "casestudy", "--lp", "0.5")
    assert code == 0
    (row,) = rows(out)
    assert round(float(row["L_N_threshold"]), 2) == 1.57
    assert out.splitlines()[0] == ",".join(cli.CASESTUDY_COLUMNS)
    assert row["L_P"] == "5.0000000000000000e-01"


def test_casestudy_unsaturated_column(capsys):
    code, out, _ = run(capsys, "casestudy", "--lp", "0.5,1", "--lambda", "1e-4")
    assert code == 0
    assert all(float(r["L_N_threshold_unsat"]) > 0 for r in rows(out))


def test_minimal_pb_flags(capsys):
    args = ["eval", "--scheme", "pb", "--n", "100", "--lambda", "0.01", "--q", "0.1"]
    code, out, _ = run(capsys, *args, "--energy", "1e5", "--pt", "100", "--pw", "1")
    assert code == 0
    (row,) = rows(out)
    assert row["scheme"] == "pb" and row["regime"] == "saturated"
    # 1e5 mJ over a 1 ms slot is 1e8 mW x slots
    assert float(row["T"]) == pytest.approx(1e8 / (1 + 99 * 0.1), rel=1e-12)


def test_budget_is_required(capsys):
    code, _, err = run(capsys, "eval", "--q", "0.1")
    assert code == 1 and "--energy" in err


def test_optimize_infeasible_exit(capsys):
    code, out, err = run(capsys, "optimize", *BASE, "--t0", "0,3000")
    assert code == 2 and "infeasible" in err
    assert [r["feasible"] for r in rows(out)] == ["true", "false"]


def test_optimize_interval_columns(capsys):
    code, out, _ = run(capsys, "optimize", "--lambda", "0.004", "--e-over-sigma", "1e5")
    (row,) = rows(out)
    assert code == 0 and row["case"] == "below_T0star_unsat"
    assert float(row["q_opt_lo"]) < float(row["q_opt"]) < float(row["q_opt_hi"])


def test_validation_errors_exit_1(capsys):
    assert run(capsys, "eval", *BASE, "--q", "2")[0] == 1
    assert run(capsys, "eval", *BASE, "--q", "abc")[0] == 1
    assert run(capsys, "nosuch")[0] == 1
    code, _, err = run(capsys, "compare", "--k", "1", "--lp", "20", "--lambda", "0.002")
    assert code == 1 and "regimes" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# network\nscheme = pb\nn = 100\nlambda = 0.01\nq = 0.1  # trailing\nenergy = 1e5\n")
    code, out, _ = run(capsys, "eval", "--config", str(cfg))
    assert code == 0 and rows(out)[0]["scheme"] == "pb"
    code, out, _ = run(capsys, "eval", "--config", str(cfg), "--q", "0.2")
    assert float(rows(out)[0]["q"]) == 0.2


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 100\nfoo = 3\n")
    code, _, err = run(capsys, "eval", "--config", str(cfg), "--q", "0.1")
    assert code == 1 and "'foo'" in err and ":2:" in err


def test_config_bad_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n 100\n")
    assert run(capsys, "eval", "--config", str(cfg), "--q", "0.1")[0] == 1
    cfg.write_text("n = many\n")
    code, _, err = run(capsys, "eval", "--config", str(cfg), "--q", "0.1")
    assert code == 1 and "'n'" in err


def test_json_summary(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", "--k", "4", "--lp", "1", "--lambda", "0.02", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["meta"]["version"] == __version__
    assert doc["meta"]["config"]["k"] == 4
    assert doc["rows"][0]["winner"] == doc["summary"]["winner"] == "PB"
    csv_path, json_path = tmp_path / "o.csv", tmp_path / "o.json"
    code, out, _ = run(capsys, "casestudy", "--out", str(csv_path), "--json", str(json_path))
    assert out == "" and rows(csv_path.read_text())
    assert json.loads(json_path.read_text())["summary"]["fit_b"] == pytest.approx(5.1774, rel=1e-3)


def test_outputs_are_reproducible(tmp_path, capsys):
    paths = []
    for i in range(2):
        p = tmp_path / f"sim{i}.csv"
        j = tmp_path / f"sim{i}.json"
        code = cli.main(["simulate", *BASE, "--q", "0.02,0.05", "--runs", "3", "--seed", "5", "--out", str(p), "--json", str(j)])
        assert code == 0
        paths.append((p.read_bytes(), j.read_bytes()))
    assert paths[0] == paths[1]
    assert rows(paths[0][0].decode())[0].keys() == set(simulator.SimStats.CSV_COLUMNS)


def test_validate_reports_max_error(capsys):
    code, out, err = run(capsys, "validate", *BASE, "--q", "0.01,0.05", "--runs", "3", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["summary"]["max_rel_error"] >= 0
    assert "max relative error" in err
    assert len(doc["rows"]) == 2


def test_horizon_exit(monkeypatch, capsys):
    monkeypatch.setattr(simulator.SimConfig, "horizon", property(lambda self: 30))
    code, _, err = run(capsys, "simulate", *BASE, "--q", "0.02", "--runs", "2")
    assert code == 3 and "slot cap" in err


@pytest.mark.parametrize(
    "argv, column",
    [
        (["lambertw", "--x=-0.36787944117144233,-0.1", "--branch", "-1"], "w"),
        (["sweep", *BASE, "--num", "5", "--stop", "0.1"], "U"),
        (["sweep", *BASE, "--over", "t0", "--num", "4"], "U_max"),
        (["map", "--k", "1:4:4", "--lp", "1,2", "--lambda", "0.02"], "winner"),
    ],
)
def test_other_commands(argv, column, capsys):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert all(r[column] != "" for r in rows(out) if r.get("regime") != "invalid")


def test_lambertw_ok_column(capsys):
    code, out, _ = run(capsys, "lambertw", "--x", "1,10,1e6")
    assert code == 0 and all(r["ok"] == "true" for r in rows(out))


def test_no_color(monkeypatch, capsys):
    monkeypatch.setenv("NO_COLOR", "1")
    monkeypatch.setattr("sys.stderr.isatty", lambda: True, raising=False)
    cli.diag("boom")
    assert capsys.readouterr().err == "error: boom\n"


def test_number_lists():
    assert cli.float_list("1:2:3") == [1.0, 1.5, 2.0]
    assert cli.int_list("1,2") == [1, 2]
    with pytest.raises(Exception):
        cli.int_list("1.5")
