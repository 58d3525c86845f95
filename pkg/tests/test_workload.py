from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from mcmsched import corpus
from mcmsched.workload import (
    CycleError,
    LayerParams,
    Model,
    Scenario,
    WorkloadError,
    dump_scenario,
    load_scenario,
    macs,
    parse_scenario,
    topo_sort,
)


def _layer(**kw):
    base = dict(name="l", kind="conv", batch_size=1, c_in=3, c_out=8, ip_h=8, ip_w=8, k_size=3)
    base.update(kw)
    return base


def test_conv_macs_by_hand():
    l = LayerParams("c", "conv", 2, 3, 8, 8, 8, 3)
    # out = 6x6, 2 * 8 * 3 * 9 * 36
    assert macs(l) == 2 * 8 * 3 * 9 * 36


def test_stride_and_fc_macs():
    assert LayerParams("s", "conv", 1, 4, 4, 9, 9, 3, stride=2).out_h == 4
    assert macs(LayerParams("f", "fc", 4, 100, 10, 1, 1, 1)) == 4000


def test_depthwise_and_pool_skip_input_channels():
    dw = LayerParams("d", "depthwise", 1, 16, 16, 10, 10, 3)
    assert macs(dw) == 16 * 9 * 64
    pool = LayerParams("p", "pool", 1, 16, 16, 10, 10, 2, stride=2)
    assert pool.weight_bytes() == 0
    assert macs(pool) == 16 * 4 * 25


@given(
    b=st.integers(1, 8),
    ci=st.integers(1, 64),
    co=st.integers(1, 64),
    ip=st.integers(1, 32),
    k=st.integers(1, 5),
)
def test_macs_linear_in_batch(b, ci, co, ip, k):
    if k > ip:
        return
    one = LayerParams("x", "conv", 1, ci, co, ip, ip, k)
    many = LayerParams("x", "conv", b, ci, co, ip, ip, k)
    assert macs(many) == b * macs(one)


def test_bad_layers_rejected():
    with pytest.raises(WorkloadError):
        LayerParams("x", "lstm", 1, 1, 1, 1, 1, 1)
    with pytest.raises(WorkloadError):
        LayerParams("x", "conv", 0, 1, 1, 1, 1, 1)
    with pytest.raises(WorkloadError):
        LayerParams("x", "fc", 1, 8, 8, 2, 2, 1)
    with pytest.raises(WorkloadError):
        LayerParams("x", "conv", 1, 1, 1, 4, 4, 5).out_h


def test_mixed_batch_rejected():
    l0 = LayerParams("a", "fc", 1, 4, 4, 1, 1, 1)
    l1 = LayerParams("b", "fc", 2, 4, 4, 1, 1, 1)
    with pytest.raises(WorkloadError):
        Model("m", (l0, l1))


def test_parse_defaults_to_chain_and_sorts():
    doc = {
        "name": "s",
        "models": [
            {
                "name": "m",
                "layers": [_layer(name="x"), _layer(name="y"), _layer(name="z")],
                "deps": [[2, 0], [0, 1]],
            }
        ],
    }
    sc = parse_scenario(json.dumps(doc))
    assert [l.name for l in sc.models[0].layers] == ["z", "x", "y"]
    assert sc.models[0].deps == ((0, 1), (1, 2))
    doc["models"][0].pop("deps")
    assert parse_scenario(json.dumps(doc)).models[0].deps == ((0, 1), (1, 2))


def test_cycle_detected():
    with pytest.raises(CycleError):
        topo_sort(3, [(0, 1), (1, 2), (2, 0)])


def test_topo_sort_prefers_low_index():
    assert topo_sort(4, [(3, 0)]) == [1, 2, 3, 0]


def test_round_trip_json_and_yaml(tmp_path):
    sc = corpus.scenario("sc2")
    assert parse_scenario(dump_scenario(sc)) == sc
    import yaml

    p = tmp_path / "sc.yaml"
    p.write_text(yaml.safe_dump(json.loads(dump_scenario(sc))))
    assert load_scenario(p) == sc


def test_missing_field_and_duplicate_names():
    with pytest.raises(WorkloadError, match="missing"):
        parse_scenario(json.dumps({"models": [{"name": "m", "layers": [{"name": "x", "kind": "conv"}]}]}))
    l = LayerParams("a", "fc", 1, 4, 4, 1, 1, 1)
    with pytest.raises(WorkloadError, match="duplicate"):
        Scenario("s", (Model("m", (l,)), Model("m", (l,))))


def test_scenario4_shape():
    sc = corpus.scenario("sc4")
    assert [m.name for m in sc.models] == ["GPT-L", "BERT-L", "U-Net", "ResNet-50"]
    assert [m.batch for m in sc.models] == [8, 24, 1, 32]
    assert sc.n_layers == 269
