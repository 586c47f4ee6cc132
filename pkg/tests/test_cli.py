import csv
import json
import math

import numpy as np
import pytest

from pairhedge import __version__
from pairhedge.aggregator import run_full
from pairhedge.cli import ingest, main, write_returns
from pairhedge.errors import InputError
from pairhedge.hindsight import ReturnSequence
from pairhedge.simulate import GbmPairSpec, simulate_shannon_demon


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    return path


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


# --- ingestion --------------------------------------------------------------------------


def test_prices_become_returns(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["t", "a", "b"], [(0, 10, 4), (1, 20, 2), (2, 10, 4)])
    seq = ingest(p, "prices")
    assert seq.returns.tolist() == [[2.0, 0.5], [0.5, 2.0]]
    assert seq.names == ("a", "b")


def test_returns_passthrough_is_exact(tmp_path):
    x = np.random.default_rng(0).lognormal(0, 0.3, size=(7, 3))
    p = tmp_path / "r.csv"
    write_returns(p, ReturnSequence(x))
    assert np.array_equal(ingest(p).returns, x)


@pytest.mark.parametrize("rows,mode,match", [
    ([(1, 1.0, -2.0)], "returns", "line 2, column 'b': negative"),
    ([(1, 1.0, 1.0), (2, 0.0, 0.0)], "returns", "line 3: all returns are zero"),
    ([(1, 1.0)], "returns", "line 2 has 2 fields"),
    ([(1, "x", 1.0)], "returns", "not a number"),
    ([(1, 0.0, 1.0), (2, 1.0, 1.0)], "prices", "zero price"),
    ([(1, 1.0, 1.0)], "prices", "at least two rows"),
])
def test_ingest_errors(tmp_path, rows, mode, match):
    p = write_csv(tmp_path / "bad.csv", ["t", "a", "b"], rows)
    with pytest.raises(InputError, match=match):
        ingest(p, mode)


# --- subcommands ----------------------------------------------------------------------


def test_price(capsys):
    code, out, _ = run_cli(capsys, "price", "--T", 2, "--s", 2, "--m", 3)
    assert code == 0
    assert out["p"] == pytest.approx(2.5) and out["cost"] == pytest.approx(7.5)
    assert out["regret_bound"] == pytest.approx(math.log(7.5) / 2)
    assert out["log_p"] == pytest.approx(math.log(2.5))
    assert out["version"] == __version__


def test_price_scale_guard_exit_code(capsys):
    code, _, err = run_cli(capsys, "price", "--T", 50, "--s", 5)
    assert code == 3
    assert json.loads(err)["error"] == "scale"


def test_horizon(capsys):
    code, out, _ = run_cli(capsys, "horizon", "--epsilon", 0.5, "--m", 2)
    assert code == 0 and out["T"] == 2
    assert out["bound_at_T"] < 0.5 <= out["bound_at_T_minus_1"]


def test_hindsight_three_winners(tmp_path, capsys):
    p = write_csv(tmp_path / "h.csv", ["t", "a", "b", "c"],
                  [(1, 1, 0, 0), (2, 0, 1, 0), (3, 0, 0, 1), (4, 1, 0, 0)])
    code, out, _ = run_cli(capsys, "hindsight", "--input", p, "--full")
    assert code == 0
    assert out["d2"]["bankrupt"] and out["d2"]["value"] == 0.0
    assert out["d3"]["value"] == pytest.approx(0.5 ** 2 * 0.25 ** 2)
    assert out["d1"]["value"] == 0.0


def test_run_all_ones(tmp_path, capsys):
    p = write_csv(tmp_path / "ones.csv", ["t", "a", "b", "c"], [(t, 1, 1, 1) for t in range(1, 9)])
    code, out, _ = run_cli(capsys, "run", "--input", p, "--out", tmp_path / "res", "--pairs-report")
    assert code == 0
    assert out["wealth"]["value"] == pytest.approx(1.0)
    assert out["realized_excess_growth"] == pytest.approx(0.0, abs=1e-12)
    assert out["regret_bound_holds"]
    report = json.loads((tmp_path / "res" / "report.json").read_text())
    assert report["config"]["input"] == str(p) and "seed" in report
    with open(tmp_path / "res" / "pairs.csv") as fh:
        assert len(list(csv.reader(fh))) == 4


def test_run_missing_file(tmp_path, capsys):
    code, _, err = run_cli(capsys, "run", "--input", tmp_path / "nope.csv")
    assert code == 2 and json.loads(err)["error"] == "input"


def test_run_bad_horizon(tmp_path, capsys):
    p = write_csv(tmp_path / "r.csv", ["t", "a", "b"], [(1, 1, 2), (2, 2, 1)])
    code, _, err = run_cli(capsys, "run", "--input", p, "--T", 5)
    assert code == 2 and "outside" in json.loads(err)["message"]


def test_simulate_then_run_round_trip(tmp_path, capsys):
    code, sim, _ = run_cli(capsys, "simulate", "--model", "demon", "--horizon", 1.0,
                           "--seed", 11, "--out", tmp_path / "sim")
    assert code == 0 and sim["seed"] == 11
    code, _, _ = run_cli(capsys, "run", "--input", tmp_path / "sim" / "returns.csv",
                         "--out", tmp_path / "run")
    assert code == 0

    seq, _ = simulate_shannon_demon(GbmPairSpec(horizon=1.0, seed=11))
    res = run_full(seq.returns)
    with open(tmp_path / "run" / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == res.T
    for row, (t, wealth, lw, theta, reg) in zip(rows, res.trajectory()):
        assert int(row[0]) == t
        assert float(row[2]) == lw
        assert [float(v) for v in row[3:-1]] == theta.tolist()


@pytest.mark.parametrize("model", ["lognormal", "horse"])
def test_simulate_other_models(tmp_path, capsys, model):
    code, out, _ = run_cli(capsys, "simulate", "--model", model, "--T", 12, "--m", 3,
                           "--out", tmp_path)
    assert code == 0 and out["T"] == 12 and out["m"] == 3
    assert ingest(tmp_path / "returns.csv").returns.shape == (12, 3)


def test_verify_single_game(capsys):
    code, out, _ = run_cli(capsys, "verify", "--m", 2, "--s", 2, "--T", 3, "--n-random", 5)
    assert code == 0 and out["passed"]
    # p(3, 2) = 1 + 4/9 + 4/9 + 1
    assert out["game_values"][0]["claimed_value"] == pytest.approx(9 / 26, rel=1e-12)


def test_verify_reports_failure_exit_code(capsys):
    code, out, _ = run_cli(capsys, "verify", "--m", 3, "--s", 2, "--T", 3, "--n-random", 5)
    # with s < m the mixture counts single-winner paths once per support, and
    # the claimed equilibrium payoff is not met (see the README)
    failed = {r["name"].split(".")[-1] for r in out["results"] if not r["passed"]}
    assert code == 4 and not out["passed"]
    assert "superhedge_expected_payoff" in failed
    assert not failed & {"mixture_mass", "superhedge_guarantee", "single_winner_cap"}
    info = out["game_values"][0]
    assert info["distinct_path_value"] > info["claimed_value"]


def test_verify_needs_all_three(capsys):
    code, _, err = run_cli(capsys, "verify", "--m", 2)
    assert code == 2
