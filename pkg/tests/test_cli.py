import csv
import io
import json
import math
from pathlib import Path

import pytest

from cardguess.cli import COMPARE_FIELDS, SINGLE_FIELDS, parse_range, run

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_CASES = {
    "simulate.csv": "simulate --n 2..3 --m 2 --reps 1000 --seed 1 --workers 1",
    "exact_rational.csv": "exact --n 2..3 --m 2..3 --rational --method both",
    "exact.json": "exact --n 2 --m 2..3 --format json",
    "asympt.csv": "asympt --n 100 --m 100",
    "indep.csv": "indep --n 3 --m 4..5",
    "markov.csv": "markov --n 100 --steps 10000 --seed 2",
    "compare.csv": "compare --n 2..3 --m 2..3 --reps 2000 --seed 3 --workers 1",
}


def invoke(capsys, cmd: str) -> tuple[int, str]:
    code = run(cmd.split())
    return code, capsys.readouterr().out


def rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_output(capsys, name):
    code, out = invoke(capsys, GOLDEN_CASES[name])
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_headers():
    assert SINGLE_FIELDS == ("n", "m", "method", "value", "stderr", "reps", "seed")
    assert COMPARE_FIELDS == ("n", "m", "s_exact", "s_mc", "s_mc_stderr", "s_tilde", "dg", "ho", "main", "admissible")


def test_exact_rational_example(capsys):
    code, out = invoke(capsys, "exact --n 2 --m 2 --rational")
    assert code == 0
    assert rows(out)[0]["value"] == "17/6"


def test_simulate_single_type(capsys):
    code, out = invoke(capsys, "simulate --n 1 --m 5 --reps 100 --seed 7")
    r = rows(out)[0]
    assert code == 0 and float(r["value"]) == 5.0 and float(r["stderr"]) == 0.0


def test_asympt_example(capsys):
    code, out = invoke(capsys, "asympt --n 100 --m 100")
    by = {r["method"]: r["value"] for r in rows(out)}
    assert float(by["main"]) == pytest.approx(147.67, abs=5e-3)
    # default c = 1, eps = 0.1: (ln 100)^3.1 = 113.8 > 100
    assert by["main-admissible"] == "false"
    code, out = invoke(capsys, "asympt --n 100 --m 100 --c 1.2")
    assert {r["method"]: r["value"] for r in rows(out)}["main-admissible"] == "true"


@pytest.mark.parametrize("workers", ["1", "4"])
def test_simulate_byte_identical_across_runs_and_workers(capsys, workers):
    base = invoke(capsys, "simulate --n 5 --m 3 --reps 40000 --seed 11 --workers 1")[1]
    again = invoke(capsys, f"simulate --n 5 --m 3 --reps 40000 --seed 11 --workers {workers}")[1]
    assert again == base


def test_workers_env_does_not_change_output(capsys, monkeypatch):
    base = invoke(capsys, "simulate --n 4 --m 4 --reps 40000 --seed 2")[1]
    monkeypatch.setenv("CARDGUESS_WORKERS", "3")
    assert invoke(capsys, "simulate --n 4 --m 4 --reps 40000 --seed 2")[1] == base


def test_compare_grid(capsys):
    code, out = invoke(capsys, "compare --n 2..4 --m 2..4 --reps 20000 --seed 5 --workers 4")
    table = rows(out)
    assert code == 0 and [(int(r["n"]), int(r["m"])) for r in table] == [(n, m) for n in (2, 3, 4) for m in (2, 3, 4)]
    for r in table:
        assert abs(float(r["s_mc"]) - float(r["s_exact"])) <= 4 * float(r["s_mc_stderr"])
    assert invoke(capsys, "compare --n 2..4 --m 2..4 --reps 20000 --seed 5 --workers 1")[1] == out


def test_compare_single_type_row(capsys):
    code, out = invoke(capsys, "compare --n 1 --m 3 --reps 100 --seed 0")
    r = rows(out)[0]
    assert float(r["s_exact"]) == float(r["dg"]) == float(r["main"]) == 3.0
    # ho at n = 1: H_3 * H_1 + ln 3 + ln 3 / 2
    assert float(r["ho"]) == pytest.approx(11 / 6 + 1.5 * math.log(3), rel=1e-14)


def test_compare_degrades_over_cap(capsys):
    code, out = invoke(capsys, "compare --n 2 --m 2..3 --reps 100 --state-cap 5 --sum-cap 5")
    assert code == 0
    for r in rows(out):
        assert r["s_exact"] == ""
        assert r["s_tilde"] != ""


def test_json_mirrors_csv(capsys):
    csv_out = invoke(capsys, "asympt --n 10 --m 2..3")[1]
    json_out = invoke(capsys, "asympt --n 10 --m 2..3 --format json")[1]
    objs = [json.loads(line) for line in json_out.splitlines()]
    table = rows(csv_out)
    assert len(objs) == len(table)
    for o, r in zip(objs, table):
        assert list(o) == list(SINGLE_FIELDS)
        assert o["method"] == r["method"]


def test_output_file_and_profile(capsys, tmp_path):
    out = tmp_path / "out.csv"
    prof = tmp_path / "prof.csv"
    assert run(["exact", "--n", "3", "--m", "2", "--output", str(out), "--profile", str(prof)]) == 0
    assert capsys.readouterr().out == ""
    assert rows(out.read_text())[0]["method"] == "dp"
    p = rows(prof.read_text())
    assert list(p[0]) == ["t", "p", "emax", "emax_over_t"] and len(p) == 6
    assert math.fsum(float(r["emax_over_t"]) for r in p) == pytest.approx(float(rows(out.read_text())[0]["value"]))


def test_indep_profile(tmp_path):
    prof = tmp_path / "p.csv"
    assert run(["indep", "--n", "3", "--m", "2", "--profile", str(prof)]) == 0
    assert list(rows(prof.read_text())[0]) == ["t", "p", "emax_indep", "term"]


@pytest.mark.parametrize(
    "cmd",
    [
        "simulate --n 2 --m 2 --reps 1",
        "simulate --n 2 --m 2 --strategy uniform --tiebreak random",
        "simulate --n 0 --m 2",
        "exact --n 3..2 --m 2",
        "exact --n x --m 2",
        "teleport --n 2 --m 2",
        "exact --n 2..3 --m 2 --profile /tmp/never.csv",
        "indep --n 2 --m 2 --mode quadrature --grid-size 4",
    ],
)
def test_invalid_config_exit_2(capsys, cmd):
    assert run(cmd.split()) == 2


def test_capacity_exit_3(capsys):
    assert run("exact --n 40 --m 40 --state-cap 1000".split()) == 3
    assert "capacity" in capsys.readouterr().err


def test_parse_range():
    assert parse_range("5") == [5]
    assert parse_range("2..4") == [2, 3, 4]
