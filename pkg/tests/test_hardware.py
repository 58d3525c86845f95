from __future__ import annotations

import itertools
import json
from collections import deque

import pytest
from hypothesis import given, strategies as st

from mcmsched import corpus
from mcmsched.hardware import (
    OS,
    WS,
    HardwareError,
    hardware_from_dict,
    hardware_to_dict,
    hop_count,
    homogenize,
    memory_portal,
    mesh_mcm,
    parse_hardware,
    route_links,
)


def _bfs(adj_matrix, s, t):
    n = len(adj_matrix)
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for v in range(n):
            if adj_matrix[u][v] and v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist[t]


def _matrix(g):
    return [[1 if g.adjacent(a, b) else 0 for b in range(g.n)] for a in range(g.n)]


def test_het_sides_pattern():
    mcm = corpus.hardware("het-sides-3x3")
    dfs = [c.dataflow for c in mcm.chiplets]
    assert mcm.n_chiplets == 9
    assert dfs == [WS, OS, WS] * 3


def test_het_cb_and_cross_patterns():
    cb = [c.dataflow for c in corpus.hardware("het-cb-3x3").chiplets]
    assert cb == [WS, OS, WS, OS, WS, OS, WS, OS, WS]
    cross = [c.dataflow for c in corpus.hardware("het-cross-3x3").chiplets]
    assert cross == [WS, OS, WS, OS, OS, OS, WS, OS, WS]
    big = corpus.hardware("het-cross-6x6")
    assert big.dataflow_counts() == {WS: 16, OS: 20}


def test_mesh_edge_count():
    g = corpus.hardware("het-cross-6x6").graph
    assert g.n == 36
    assert g.n_edges == 2 * 6 * 6 - 6 - 6 == 60


@pytest.mark.parametrize("name", ["het-sides-3x3", "het-t-2x3-tri", "het-cross-6x6", "motivational-2x2"])
def test_hops_match_bfs_oracle(name):
    g = corpus.hardware(name).graph
    mat = _matrix(g)
    for s, t in itertools.product(range(g.n), repeat=2):
        assert hop_count(g, s, t) == _bfs(mat, s, t)


def test_triangular_diagonals():
    g = corpus.hardware("het-t-2x3-tri").graph
    assert g.adjacent(0, 4) and g.adjacent(1, 5)
    assert not g.adjacent(2, 3)
    assert hop_count(g, 0, 5) == 2


@given(st.integers(0, 35), st.integers(0, 35))
def test_route_links_are_edges_of_shortest_length(s, t):
    g = corpus.hardware("het-cross-6x6").graph
    links = route_links(g, s, t)
    assert len(links) == hop_count(g, s, t)
    assert all(g.adjacent(a, b) for a, b in links)
    if links:
        assert links[0][0] == s and links[-1][1] == t


def test_portals_default_to_side_columns():
    mcm = corpus.hardware("het-sides-3x3")
    assert mcm.portals == (0, 2, 3, 5, 6, 8)
    assert memory_portal(mcm.graph, mcm, 4) == (3, 1)
    assert memory_portal(mcm.graph, mcm, 2) == (2, 0)


def test_round_trip_and_homogenize():
    mcm = corpus.hardware("het-t-2x3-tri")
    again = hardware_from_dict(json.loads(json.dumps(hardware_to_dict(mcm))))
    assert again.chiplets == mcm.chiplets and again.portals == mcm.portals
    assert again.graph.adjacency == mcm.graph.adjacency
    h = homogenize(mcm, "shidiannao")
    assert set(c.dataflow for c in h.chiplets) == {OS}


def test_package_defaults():
    mcm = mesh_mcm(2, 2)
    assert mcm.lat_hop == pytest.approx(35e-9)
    assert mcm.e_nop_bit == pytest.approx(2.04e-12)
    assert mcm.e_dram_bit == pytest.approx(14.8e-12)
    assert mcm.freq_hz == 500e6


def test_errors():
    with pytest.raises(HardwareError, match="disconnected"):
        hardware_from_dict({"topology": {"kind": "custom", "n_chiplets": 3, "edges": [[0, 1]]}, "pattern": ["ws"] * 3, "package": {"portals": [0]}})
    with pytest.raises(HardwareError, match="unknown dataflow"):
        hardware_from_dict({"topology": {"kind": "mesh", "rows": 1, "cols": 2}, "pattern": ["ws", "rs"]})
    with pytest.raises(HardwareError):
        parse_hardware("{not json")
    with pytest.raises(HardwareError, match="portal"):
        hardware_from_dict({"topology": {"kind": "mesh", "rows": 1, "cols": 2}, "package": {"portals": [5]}})


def test_custom_dataflow_registration():
    mcm = hardware_from_dict(
        {"dataflows": ["rs"], "topology": {"kind": "mesh", "rows": 1, "cols": 2}, "pattern": ["rs", "ws"]}
    )
    assert mcm.chiplets[0].dataflow == "rs"
