from __future__ import annotations

import json

import pytest

from mcmsched import corpus
from mcmsched.cli import main
from mcmsched.costmodel import dump_cost_db, tabulate_costs

MOTIV = ["--workload", "motivational", "--hardware", "motivational-2x2"]


def _schedule(out, *extra):
    return main(["schedule", *MOTIV, "--n-splits", "1", "--seed", "5", "--out-dir", str(out), *extra])


def test_schedule_writes_artifacts(tmp_path, capsys):
    assert _schedule(tmp_path) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["breakdown.csv", "cost.json", "frontier.csv", "manifest.json", "schedule.json", "window_points.csv"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["seed_source"] == "flag"
    assert "started" not in manifest
    assert "best edp" in capsys.readouterr().out


def test_schedule_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _schedule(a, "--mode", "evolutionary") == 0
    assert _schedule(b, "--mode", "evolutionary") == 0
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_pareto_rederives_frontier(tmp_path, capsys):
    assert _schedule(tmp_path) == 0
    capsys.readouterr()
    assert main(["pareto", str(tmp_path)]) == 0
    assert capsys.readouterr().out == (tmp_path / "frontier.csv").read_text()
    out = tmp_path / "again.csv"
    assert main(["pareto", str(tmp_path), "--out", str(out)]) == 0
    assert out.read_bytes() == (tmp_path / "frontier.csv").read_bytes()


def test_evaluate_round_trip(tmp_path, capsys):
    assert _schedule(tmp_path) == 0
    capsys.readouterr()
    rc = main(["evaluate", *MOTIV, "--schedule", str(tmp_path / "schedule.json"), "--out-dir", str(tmp_path / "ev")])
    assert rc == 0
    got = json.loads(capsys.readouterr().out)
    want = json.loads((tmp_path / "cost.json").read_text())
    for k in ("latency_s", "energy_j", "edp_js", "per_window"):
        assert got[k] == want[k]


def test_evaluate_flags_violations(tmp_path, capsys):
    assert _schedule(tmp_path) == 0
    doc = json.loads((tmp_path / "schedule.json").read_text())
    pls = [p for w in doc["windows"] for p in w["placements"]]
    pls[0]["segments"][0][1] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["evaluate", *MOTIV, "--schedule", str(bad)]) == 3
    assert "segment-partition" in capsys.readouterr().err


def test_missing_inputs_exit_2(tmp_path, capsys):
    assert main(["schedule", "--workload", str(tmp_path / "nope.json"), "--hardware", "het-sides-3x3"]) == 2
    assert "workload file not found" in capsys.readouterr().err
    assert main(["evaluate", *MOTIV, "--schedule", str(tmp_path / "none.json")]) == 2
    assert main(["pareto", str(tmp_path)]) == 2
    assert main(["schedule", *MOTIV, "--cost-db", str(tmp_path / "db.csv")]) == 2
    assert "cost database not found" in capsys.readouterr().err


def test_cost_db_run(tmp_path):
    sc = corpus.scenario("motivational")
    mcm = corpus.hardware("motivational-2x2")
    db = tmp_path / "db.csv"
    db.write_text(dump_cost_db(tabulate_costs(sc, mcm)))
    a, b = tmp_path / "a", tmp_path / "b"
    assert _schedule(a) == 0
    assert _schedule(b, "--cost-db", str(db)) == 0
    assert (a / "cost.json").read_text() == (b / "cost.json").read_text()


def test_files_on_disk(tmp_path):
    paths = corpus.export(tmp_path)
    wl = tmp_path / "workloads" / "motivational.json"
    hw = tmp_path / "hardware" / "motivational-2x2.json"
    assert wl in paths and hw in paths
    a, b = tmp_path / "a", tmp_path / "b"
    assert _schedule(a) == 0
    assert main(["schedule", "--workload", str(wl), "--hardware", str(hw), "--n-splits", "1", "--seed", "5", "--out-dir", str(b)]) == 0
    assert (a / "cost.json").read_text() == (b / "cost.json").read_text()


def test_complexity_command(capsys):
    assert main(["complexity", "--layers", "1,1", "--chiplets", "2"]) == 0
    out = capsys.readouterr().out
    assert "0.903090" in out and "enumerable" in out
    assert main(["complexity", "--layers", "50,23", "--chiplets", "36"]) == 0
    out = capsys.readouterr().out
    assert "O(10^56)" in out and "too large" in out
    assert main(["complexity", "--workload", "sc4", "--hardware", "het-sides-3x3"]) == 0
    assert main(["complexity", "--layers", "3"]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert "mcmsched" in capsys.readouterr().out
