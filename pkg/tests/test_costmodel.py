from __future__ import annotations

import math
from dataclasses import dataclass, replace

import pytest

from mcmsched import corpus
from mcmsched.costmodel import (
    AnalyticalProvider,
    CommParams,
    CostError,
    CostModel,
    DatabaseProvider,
    LayerCost,
    ModelCost,
    Route,
    WindowCost,
    aggregate_windows,
    comm_energy,
    comm_latency,
    dump_cost_db,
    expected_layer_cost,
    layer_compute_cost,
    mini_batch,
    parse_cost_db,
    tabulate_costs,
)
from mcmsched.hardware import OS, WS, ChipletSpec, mesh_mcm
from mcmsched.schedule import Placement, WindowSchedule
from mcmsched.workload import LayerParams, Model, Scenario, macs


@pytest.fixture
def params():
    return CommParams.from_mcm(mesh_mcm(2, 2))


def test_same_chiplet_is_free(params):
    assert comm_latency(1e9, Route("same", 1, 1), params) == 0.0
    assert comm_energy(1e9, Route("same", 1, 1), params) == 0.0


def test_on_package_latency_by_hand(params):
    # 1 MB over 100 GB/s plus two 35 ns hops
    assert comm_latency(1e6, Route("nop", 0, 3, 2), params) == pytest.approx(1.007e-5, rel=1e-12)


def test_energy_per_bit(params):
    bit = 1 / 8
    assert comm_energy(bit, Route("nop", 0, 1, 1), params) == pytest.approx(2.04e-12, rel=1e-12)
    assert comm_energy(bit, Route("offchip", 0, 0, 0), params) == pytest.approx(14.8e-12, rel=1e-12)


def test_offchip_latency(params):
    lat = comm_latency(64e9, Route("offchip", 1, 0, 1), params)
    assert lat == pytest.approx(1.0 + 35e-9 + 200e-9)


@dataclass(frozen=True)
class _Blob:
    per_sample: int

    def working_set_per_sample(self) -> int:
        return self.per_sample


def test_mini_batch_examples():
    chip = ChipletSpec(0, WS, sz_mem=10e6)
    assert mini_batch([_Blob(1_000_000)], chip, 32) == 8
    assert mini_batch([_Blob(20_000_000)], chip, 32) == 1
    assert mini_batch([_Blob(1)], chip, 1) == 1
    assert mini_batch([_Blob(1_000_000), _Blob(3_000_000)], chip, 6) == 3


def test_dataflow_ordering_follows_parallelism():
    ws, os_ = ChipletSpec(0, WS), ChipletSpec(1, OS)
    sc = corpus.scenario("sc4")
    for model in sc.models:
        for l in model.layers:
            p_ws = l.c_out if l.kind in ("depthwise", "pool") else l.c_in * l.c_out
            p_os = l.out_h * l.out_w * l.batch_size
            c_ws = layer_compute_cost(l, ws).cycles
            c_os = layer_compute_cost(l, os_).cycles
            if min(p_os, 4096) > min(p_ws, 4096):
                assert c_os <= c_ws
            elif min(p_os, 4096) < min(p_ws, 4096):
                assert c_ws <= c_os
            else:
                assert c_ws == c_os


def test_layer_cost_by_hand():
    l = LayerParams("x", "conv", 1, 2, 4, 5, 5, 3)  # 72 * 9 MACs = 648, P_ws = 8
    c = layer_compute_cost(l, ChipletSpec(0, WS))
    assert c.cycles == math.ceil(macs(l) / 8) == 81
    assert c.compute_energy == pytest.approx(648e-12)


def _one_layer_scenario(batch=1):
    l = LayerParams("f", "fc", batch, 1000, 1000, 1, 1, 1)
    return Scenario("s", (Model("m", (l,)),))


def test_single_segment_model_cost_by_hand():
    sc = _one_layer_scenario()
    mcm = mesh_mcm(1, 2)  # both chiplets are portals
    cm = CostModel(sc, mcm)
    mc = cm.model_cost(0, ((0, 1),), (0,))
    cycles = math.ceil(1_000_000 / 4096)
    load = 1_000_000 + 1000
    store = 1000
    expect_lat = cycles / 500e6 + (load / 64e9 + 200e-9) + (store / 64e9 + 200e-9)
    expect_e = 1e6 * 1e-12 + 8 * (load + store) * 14.8e-12
    assert mc.latency == pytest.approx(expect_lat, rel=1e-12)
    assert mc.energy == pytest.approx(expect_e, rel=1e-12)
    assert mc.mini_batch == 1


def test_handoff_uses_on_package_term():
    l = LayerParams("f", "fc", 1, 100, 100, 1, 1, 1)
    sc = Scenario("s", (Model("m", (l, replace(l, name="g")), ((0, 1),)),))
    mcm = mesh_mcm(1, 3)
    cm = CostModel(sc, mcm)
    two = cm.model_cost(0, ((0, 1), (1, 2)), (0, 1))
    p = cm.params()
    handoff = comm_latency(100, Route.between(mcm, 0, 1), p)
    to_dram = comm_latency(100, Route.offchip(mcm, 0), p)
    c0 = layer_compute_cost(l, mcm.chiplets[0]).cycles / mcm.freq_hz
    weights_in = comm_latency(10_000 + 100, Route.offchip(mcm, 0), p)
    assert two.stage_latencies[0] == pytest.approx(c0 + weights_in + handoff, rel=1e-12)
    assert handoff < to_dram


def test_pipeline_aggregation_in_model_cost():
    sc = corpus.scenario("motivational")
    cm = CostModel(sc, corpus.hardware("motivational-2x2"))
    mc = cm.model_cost(0, ((0, 1), (1, 3)), (0, 1))
    b, bp = sc.models[0].batch, mc.mini_batch
    assert b % bp == 0
    assert mc.latency == pytest.approx(sum(mc.stage_latencies) + (b // bp - 1) * max(mc.stage_latencies), rel=1e-12)


def test_expected_cost_weighted_mean():
    class Fixed:
        def layer_cost(self, model, index, chiplet, batch):
            return LayerCost(100 if chiplet.dataflow == WS else 190, 0.0)

    mcm = mesh_mcm(3, 3, [WS] * 5 + [OS] * 4, freq_mhz=1.0)
    m = Model("m", (LayerParams("f", "fc", 1, 4, 4, 1, 1, 1),))
    assert expected_layer_cost(m, 0, mcm, "latency", Fixed()) * 1e6 == pytest.approx(140.0, rel=1e-12)
    homo = mesh_mcm(2, 2, freq_mhz=1.0)
    assert expected_layer_cost(m, 0, homo, "latency", Fixed()) * 1e6 == pytest.approx(100.0)


def test_database_provider_matches_analytical():
    sc = corpus.scenario("sc2")
    mcm = corpus.hardware("het-cb-3x3")
    db = parse_cost_db(dump_cost_db(tabulate_costs(sc, mcm)))
    a = CostModel(sc, mcm, AnalyticalProvider())
    d = CostModel(sc, mcm, DatabaseProvider(db))
    segs = ((0, 10), (10, 20))
    assert d.model_cost(0, segs, (0, 1)).latency == pytest.approx(a.model_cost(0, segs, (0, 1)).latency, rel=1e-12)


def test_database_errors():
    with pytest.raises(CostError, match="header"):
        parse_cost_db("a,b\n")
    with pytest.raises(CostError, match="duplicate"):
        parse_cost_db("model,layer,dataflow,cycles,energy_pj\nm,0,ws,1,1\nm,0,ws,2,2\n")
    sc = _one_layer_scenario()
    cm = CostModel(sc, mesh_mcm(1, 2), DatabaseProvider({}))
    with pytest.raises(CostError, match="no cost entry"):
        cm.model_cost(0, ((0, 1),), (0,))


def test_window_and_scenario_aggregation():
    report = aggregate_windows(
        _one_layer_scenario(),
        [WindowCost(0.78, 1.0, {}), WindowCost(0.0, 0.0, {}), WindowCost(0.21, 2.0, {})],
    )
    # windows without placements contribute nothing
    assert report.latency == 0.0
    sc = corpus.scenario("motivational")
    cm = CostModel(sc, corpus.hardware("motivational-2x2"))
    ws = WindowSchedule(0, (Placement(0, ((0, 3),), (0,)), Placement(1, ((0, 1),), (3,))))
    wc = cm.window_cost(ws)
    assert wc.latency == max(c.latency for c in wc.per_model.values())
    assert wc.energy == pytest.approx(sum(c.energy for c in wc.per_model.values()))


def test_two_window_sum():
    sc = corpus.scenario("motivational")
    names = [m.name for m in sc.models]
    w0 = WindowCost(0.78, 1.0, {0: _mc(0.78)})
    w1 = WindowCost(0.21, 0.5, {0: _mc(0.21), 1: _mc(0.1)})
    r = aggregate_windows(sc, [w0, w1])
    assert r.latency == pytest.approx(0.99, rel=1e-12)
    assert r.energy == 1.5
    assert r.per_model[names[0]] == pytest.approx(0.99)
    assert r.per_model[names[1]] == pytest.approx(0.88)
    assert r.per_model_busy[names[0]] == pytest.approx(0.99)


def _mc(lat):
    return ModelCost(lat, 0.0, 1, (lat,))
