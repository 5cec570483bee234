import json
import math

import pytest

from handover_timing.cli import main
from handover_timing.cost import CostBreakdown
from handover_timing.experiments import rows_from_csv
from handover_timing.optimize import OptimizationResult
from handover_timing.simulate import SimReport

SMALL = ["--grid", "60,60"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_exponential(capsys):
    code, out, _ = run(capsys, "eval", "--dist", "exp", "--t", "0", "--A", "0.693147", "--ch", "1", "--cr", "1")
    assert code == 0
    d = json.loads(out)
    assert {"expected_waiting", "expected_visits", "total_cost", "method", "est_error"} <= set(d)
    assert d["total_cost"] == pytest.approx(3.271684, abs=1e-5)
    assert d["method"] == "SeriesQuadrature"


def test_eval_uniform(capsys):
    code, out, _ = run(capsys, "eval", "--dist", "uniform", "--t", "0", "--A", "1", "--ch", "1", "--cr", "1")
    assert code == 0
    assert json.loads(out)["total_cost"] == 1.5


def test_eval_round_trip(capsys):
    _, out, _ = run(capsys, "eval", "--dist", "uniform:0,2", "--t", "0.3", "--A", "0.7")
    b = CostBreakdown.from_dict(json.loads(out))
    assert b.expected_visits >= 1.0


@pytest.mark.parametrize("argv, message", [
    (["eval", "--dist", "exp", "--A", "0"], "A must be positive"),
    (["eval", "--dist", "exp"], "--A is required"),
    (["eval", "--dist", "gamma", "--A", "1"], "unknown distribution"),
    (["eval", "--A", "1", "--t", "-1"], "t"),
    (["eval", "--A", "1", "--format", "csv"], "--format"),
    (["optimize", "--dist", "exp", "--A-range", "2,1"], "A_lo"),
    (["optimize", "--dist", "exp", "--grid", "1,5"], "grid"),
    (["simulate", "--dist", "exp", "--A", "1", "--cycles", "0"], "cycles"),
    (["simulate", "--A", "1", "--protocol", "maybe"], "protocol"),
    (["sweep", "--ch-values", "2,1"], "increasing"),
])
def test_validation_errors_exit_2(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert message in err
    assert len(err.strip().splitlines()) == 1


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--A", "abc"])
    assert exc.value.code == 2


def test_unreadable_input_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--dist", f"empirical:{tmp_path / 'missing.txt'}", "--A", "1")
    assert code == 3 and "I/O error" in err
    code, _, _ = run(capsys, "eval", "--A", "1", "--config", str(tmp_path / "nope.cfg"))
    assert code == 3


def test_unwritable_output_exit_3(capsys, tmp_path):
    code, _, _ = run(capsys, "eval", "--A", "1", "--out", str(tmp_path / "no" / "such" / "dir.json"))
    assert code == 3


def test_optimize_output(capsys):
    code, out, _ = run(capsys, "optimize", "--dist", "uniform", "--ch", "5", *SMALL)
    assert code == 0
    d = json.loads(out)
    assert {"t_star", "A_star", "cost_star", "evaluations", "grid_best", "active_bounds"} <= set(d)
    res = OptimizationResult.from_dict(d)
    assert res.cost_star <= res.grid_best.cost


def test_optimize_point_mass_flags_bound(capsys):
    code, out, _ = run(capsys, "optimize", "--dist", "det:0", "--ch", "1", "--cr", "1")
    assert code == 0
    d = json.loads(out)
    assert d["A_star"] == pytest.approx(1.0, abs=1e-6)
    assert "A_hi" in d["active_bounds"]


def test_sweep_csv(capsys, tmp_path):
    out_path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--dist", "uniform", "--n-ch", "5", *SMALL, "--out", str(out_path))
    assert code == 0 and out == ""
    raw = out_path.read_bytes()
    assert b"\r" not in raw
    text = raw.decode()
    assert text.splitlines()[0] == "ch,cr,t_star,a_star,cost_star,expected_waiting,expected_visits"
    rows = rows_from_csv(text)
    assert len(rows) == 5
    assert rows[0].ch == pytest.approx(0.1) and rows[-1].ch == pytest.approx(20.0)


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--dist", "exp", "--ch-values", "1,2", *SMALL, "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [r["ch"] for r in rows] == [1.0, 2.0]


def test_single_row_sweep_matches_optimize(capsys):
    _, out, _ = run(capsys, "sweep", "--dist", "exp", "--ch-values", "5", *SMALL)
    (row,) = rows_from_csv(out)
    _, out, _ = run(capsys, "optimize", "--dist", "exp", "--ch", "5", *SMALL)
    d = json.loads(out)
    assert (row.t_star, row.a_star, row.cost_star) == (d["t_star"], d["A_star"], d["cost_star"])


def test_simulate_output_and_determinism(capsys):
    argv = ["simulate", "--dist", "exp", "--A", "0.693147", "--cycles", "1000000", "--seed", "7",
            "--protocol", "never-waits"]
    code, first, _ = run(capsys, *argv)
    assert code == 0
    rep = SimReport.from_dict(json.loads(first))
    n = rep.cycles_run
    var = sum(c * (k - rep.mean_visits) ** 2 for k, c in rep.hist_visits.items()) / (n - 1)
    assert abs(rep.mean_visits - 2.0) <= 3 * math.sqrt(var / n)
    _, second, _ = run(capsys, *argv, "--workers", "4")
    assert first == second


def test_simulate_first_waits(capsys):
    code, out, _ = run(capsys, "simulate", "--dist", "det:0", "--A", "1", "--protocol", "first-waits",
                       "--cycles", "10", "--robot-wait-rate", "3")
    assert code == 0
    d = json.loads(out)
    assert d["mean_waiting"] == 1.0 and d["hist_visits"] == {"1": 10}


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# evaluation settings\ndist = uniform\nA = 1\nch = 3\n")
    _, out, _ = run(capsys, "eval", "--config", str(cfg))
    assert json.loads(out)["total_cost"] == pytest.approx(3 * 0.5 + 1.0)
    _, out, _ = run(capsys, "eval", "--config", str(cfg), "--ch", "1")
    assert json.loads(out)["total_cost"] == pytest.approx(1.5)


def test_config_rejects_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("cycles = 5\n")
    code, _, err = run(capsys, "eval", "--A", "1", "--config", str(cfg))
    assert code == 2 and "cycles" in err


def test_numbers_have_twelve_significant_digits(capsys):
    _, out, _ = run(capsys, "eval", "--dist", "exp", "--A", "0.3")
    for v in json.loads(out).values():
        if isinstance(v, float) and v != 0:
            assert len(repr(v).replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 12
