from __future__ import annotations

import pytest

from mcmsched import corpus
from mcmsched.costmodel import CostModel
from mcmsched.report import (
    breakdown_csv,
    fmt,
    frontier_csv,
    frontier_from_window_points,
    parse_window_points,
    schedule_from_dict,
    schedule_to_dict,
    window_points_csv,
)
from mcmsched.search import ParetoPoint, SearchConfig, search


@pytest.fixture(scope="module")
def result():
    sc = corpus.scenario("sc2")
    mcm = corpus.hardware("het-sides-3x3")
    return sc, mcm, search(sc, mcm, cfg=SearchConfig(mode="evolutionary", seed=2))


def test_schedule_document_round_trip(result):
    sc, mcm, res = result
    doc = schedule_to_dict(res.best, sc, CostModel(sc, mcm))
    back = schedule_from_dict(doc, sc)
    assert back.assignment == res.best.assignment
    assert back.windows == res.best.windows
    assert back.plan.boundaries == res.best.plan.boundaries


def test_schedule_document_errors(result):
    sc, _, res = result
    doc = schedule_to_dict(res.best, sc)
    with pytest.raises(ValueError, match="format"):
        schedule_from_dict({**doc, "format": "other"}, sc)
    doc["windows"][0]["placements"][0]["model"] = "ghost"
    with pytest.raises(ValueError, match="unknown model"):
        schedule_from_dict(doc, sc)


def test_window_points_round_trip(result):
    _, _, res = result
    text = window_points_csv(res.window_points())
    fronts = parse_window_points(text)
    assert frontier_csv(frontier_from_window_points(fronts)) == frontier_csv(res.frontier)
    with pytest.raises(ValueError):
        parse_window_points("a,b\n")


def test_frontier_csv_format():
    text = frontier_csv([ParetoPoint(0.1, 2.0, "0-1")])
    assert text == "latency_s,energy_j,edp_js,schedule_id\n0.1,2,0.2,0-1\n"
    assert fmt(1 / 3) == "0.333333333333"


def test_breakdown_table(result):
    sc, _, res = result
    rows = [r.split(",") for r in breakdown_csv(sc, res.best, res.report).splitlines()]
    n_w = res.best.assignment.n_windows
    assert rows[0] == ["model"] + [f"W{w}" for w in range(n_w)] + ["ideal", "tot", "layers"]
    assert [r[0] for r in rows[1:]] == [m.name for m in sc.models] + ["window", "layers"]
    assert rows[-1][-1] == str(sc.n_layers)
    assert float(rows[-2][-2]) == pytest.approx(res.report.latency, rel=1e-11)
