import csv
import json

import pytest

from sharptrace.cli import parse_norm, run, UsageError


def load(path):
    with open(path) as fh:
        return json.load(fh)


def test_constants_command(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["constants", "--n", "3", "--p", "2", "--a", "4", "--out", str(out)]) == 0
    d = load(out)
    assert d["params"]["theta"] == pytest.approx(2 / 3)
    consts = d["environment"]["constants"]
    for key in ("c_np", "c_npa", "a_np", "B_np", "D_affine"):
        assert consts[key] > 0
    assert "PASS" in capsys.readouterr().err


def test_report_to_stdout(capsys):
    assert run(["constants", "--n", "2", "--p", "1.5", "--a", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["suite"] == "constants"


@pytest.mark.parametrize(
    "argv",
    [
        ["constants", "--n", "3", "--p", "3", "--a", "4"],
        ["constants", "--n", "3", "--p", "2"],
        ["verify", "nothing", "--n", "2", "--p", "1.5", "--a", "2"],
        ["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--norm", "lq"],
        ["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--norm", "polar:2"],
        ["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--norm", "ellipsoid:/does/not/exist.json"],
        ["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--level", "12"],
        ["verify", "transport", "--n", "2", "--p", "1.5", "--a", "2", "--grid-level", "4"],
    ],
)
def test_invalid_arguments_exit_two(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().err


def test_norm_parsing(tmp_path):
    assert parse_norm(None, 3).q == 2.0
    assert parse_norm("lq:3", 3).q == 3.0
    assert parse_norm("split:1.5", 3).kind == "split_q"
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"matrix": [[2.0, 0.1], [0.1, 1.0]]}))
    assert parse_norm(f"ellipsoid:{path}", 2).kind == "ellipsoid"
    with pytest.raises(UsageError):
        parse_norm(f"ellipsoid:{path}", 3)


def test_verify_gn_deterministic_and_csv(tmp_path):
    args = ["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--seed", "4", "--samples", "2"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    table = tmp_path / "cases.csv"
    assert run(args + ["--out", str(a), "--csv", str(table)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    da, db = load(a), load(b)
    da.pop("wall_time")
    db.pop("wall_time")
    assert json.dumps(da) == json.dumps(db)
    rows = list(csv.DictReader(open(table)))
    assert [r["id"] for r in rows] == [c["id"] for c in da["cases"]]


def test_failing_case_exits_one(tmp_path):
    # an unattainable tolerance turns the invariance cases into failures
    out = tmp_path / "r.json"
    code = run(["verify", "gn", "--n", "2", "--p", "1.5", "--a", "2", "--samples", "0", "--tol", "1e-18",
                "--out", str(out)])
    d = load(out)
    assert code == 1 and not d["pass"]


def test_verify_dual_example(tmp_path):
    out = tmp_path / "d.json"
    assert run(["verify", "dual", "--n", "2", "--p", "1.5", "--a", "2", "--seed", "7", "--pairs", "5",
                "--out", str(out)]) == 0
    d = load(out)
    assert all(c["gap"] >= -2e-5 for c in d["cases"])


def test_search_writes_trace_csv(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "rational_bump", "bounds": [[3, 6], [3, 6]], "max_evals": 12}))
    out, trace = tmp_path / "s.json", tmp_path / "t.csv"
    code = run(["search", "--n", "2", "--p", "1.5", "--a", "2", "--directions", "2", "--config", str(cfg),
                "--out", str(out), "--csv", str(trace)])
    assert code == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "eval,x0,x1,value" and len(lines) == 13
