"""MCM package description: chiplets, network-on-package topology, memory portals.

Hardware document (JSON or YAML)::

    {"name": "het-sides-3x3",
     "topology": {"kind": "mesh", "rows": 3, "cols": 3},
     "pattern": "het-sides",                  # preset name or explicit list of tags
     "chiplet": {"n_pe": 4096, "sz_mem": 10e6, "bw_noc": 1e11, "bw_mem": 1e11},
     "package": {"bw_offchip": 64e9, "bw_nop": 100e9, "lat_hop_ns": 35,
                 "e_nop_pj_bit": 2.04, "lat_mem_ns": 200, "e_dram_pj_bit": 14.8,
                 "portals": [0, 3, 6, 2, 5, 8]}}

Topology kinds: ``mesh`` (rows x cols grid, XY routing), ``triangular``
(rows x cols grid plus one diagonal per cell, BFS routing, default 2x3) and
``custom`` (explicit ``n_chiplets`` and ``edges``, BFS routing).
Unspecified package parameters take the Simba-derived defaults below.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

WS = "ws"  # weight stationary, NVDLA-like
OS = "os"  # output stationary, Shidiannao-like

DATAFLOWS: set[str] = {WS, OS}
_DF_ALIASES = {
    "nvdla": WS,
    "nvd": WS,
    "weight-stationary": WS,
    "shidiannao": OS,
    "shi": OS,
    "output-stationary": OS,
}

# Package defaults (28 nm Simba-style numbers).
DEFAULT_PACKAGE = {
    "bw_offchip": 64e9,
    "bw_nop": 100e9,
    "lat_hop_ns": 35.0,
    "e_nop_pj_bit": 2.04,
    "lat_mem_ns": 200.0,
    "e_dram_pj_bit": 14.8,
    "freq_mhz": 500.0,
    "e_mac_pj": 1.0,
    "delta_ns": 0.0,
    "offchip_share": "none",
    "contention": False,
}
DEFAULT_CHIPLET = {"n_pe": 4096, "sz_mem": 10e6, "bw_noc": 1e11, "bw_mem": 1e11}

PRESETS = (
    "homogeneous-nvdla",
    "homogeneous-shidiannao",
    "standalone-nvdla",
    "standalone-shidiannao",
    "simba-nvdla",
    "simba-shidiannao",
    "het-cb",
    "het-sides",
    "het-cross",
    "het-t",
)


class HardwareError(ValueError):
    pass


def register_dataflow(tag: str) -> None:
    DATAFLOWS.add(tag)


def canonical_dataflow(tag: str) -> str:
    t = str(tag).strip().lower()
    t = _DF_ALIASES.get(t, t)
    if t not in DATAFLOWS:
        raise HardwareError(f"unknown dataflow {tag!r}; registered: {sorted(DATAFLOWS)}")
    return t


@dataclass(frozen=True)
class ChipletSpec:
    id: int
    dataflow: str
    n_pe: int = 4096
    bw_noc: float = 1e11
    bw_mem: float = 1e11
    sz_mem: float = 10e6

    def __post_init__(self) -> None:
        if self.n_pe < 1:
            raise HardwareError(f"chiplet {self.id}: n_pe must be >= 1")
        if self.bw_noc <= 0 or self.bw_mem <= 0:
            raise HardwareError(f"chiplet {self.id}: bandwidths must be > 0")
        if self.sz_mem <= 0:
            raise HardwareError(f"chiplet {self.id}: sz_mem must be > 0")


@dataclass(frozen=True)
class Topology:
    kind: str
    rows: int = 0
    cols: int = 0
    edges: tuple[tuple[int, int], ...] = ()
    n_nodes: int = 0

    def size(self) -> int:
        if self.kind in ("mesh", "triangular"):
            return self.rows * self.cols
        return self.n_nodes


@dataclass(frozen=True)
class McmSpec:
    chiplets: tuple[ChipletSpec, ...]
    topology: Topology
    portals: tuple[int, ...]
    bw_offchip: float = 64e9
    bw_nop: float = 100e9
    lat_hop: float = 35e-9
    e_nop_bit: float = 2.04e-12
    lat_mem: float = 200e-9
    e_dram_bit: float = 14.8e-12
    freq_hz: float = 500e6
    e_mac: float = 1e-12
    delta: float = 0.0
    offchip_share: str = "none"
    contention: bool = False
    name: str = "mcm"
    pattern: str = "explicit"

    def __post_init__(self) -> None:
        n = len(self.chiplets)
        if n == 0:
            raise HardwareError("MCM needs at least one chiplet")
        if [c.id for c in self.chiplets] != list(range(n)):
            raise HardwareError("chiplet ids must be dense 0..N-1 in order")
        if self.topology.size() != n:
            raise HardwareError(f"topology has {self.topology.size()} nodes but {n} chiplets were given")
        if not self.portals:
            raise HardwareError("at least one memory portal is required")
        for p in self.portals:
            if not 0 <= p < n:
                raise HardwareError(f"portal {p} is not a chiplet id")
        for f in ("bw_offchip", "bw_nop", "freq_hz"):
            if getattr(self, f) <= 0:
                raise HardwareError(f"{f} must be > 0")
        for f in ("lat_hop", "e_nop_bit", "lat_mem", "e_dram_bit", "e_mac", "delta"):
            if getattr(self, f) < 0:
                raise HardwareError(f"{f} must be >= 0")
        if self.offchip_share not in ("none", "fair"):
            raise HardwareError(f"offchip_share must be 'none' or 'fair', got {self.offchip_share!r}")

    @property
    def n_chiplets(self) -> int:
        return len(self.chiplets)

    def dataflow_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.chiplets:
            out[c.dataflow] = out.get(c.dataflow, 0) + 1
        return out

    @cached_property
    def graph(self) -> NopGraph:
        return build_topology(self)


def homogenize(mcm: McmSpec, dataflow: str) -> McmSpec:
    """Same package with every chiplet switched to one dataflow."""
    df = canonical_dataflow(dataflow)
    chips = tuple(replace(c, dataflow=df) for c in mcm.chiplets)
    return replace(mcm, chiplets=chips, name=f"{mcm.name}/homogeneous-{df}", pattern=f"homogeneous-{df}")


# ---------------------------------------------------------------------------
# Topology and routing


@dataclass(frozen=True)
class NopGraph:
    adjacency: tuple[tuple[int, ...], ...]
    coords: tuple[tuple[int, int], ...] | None = None
    mesh: bool = False
    _dist: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def neighbors(self, c: int) -> tuple[int, ...]:
        return self.adjacency[c]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    def max_degree(self) -> int:
        return max(len(a) for a in self.adjacency)


def _grid_edges(rows: int, cols: int, diagonal: bool) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
            if diagonal and r + 1 < rows and c + 1 < cols:
                edges.append((i, i + cols + 1))
    return edges


def _bfs_all(adj: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    n = len(adj)
    rows = []
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    q.append(v)
        rows.append(tuple(dist))
    return tuple(rows)


def graph_from_edges(n: int, edges, coords=None, mesh: bool = False) -> NopGraph:
    nb: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise HardwareError(f"bad NoP edge ({u}, {v})")
        nb[u].add(v)
        nb[v].add(u)
    adj = tuple(tuple(sorted(s)) for s in nb)
    return NopGraph(adjacency=adj, coords=coords, mesh=mesh, _dist=_bfs_all(adj))


def build_topology(spec: McmSpec | Topology) -> NopGraph:
    topo = spec.topology if isinstance(spec, McmSpec) else spec
    if topo.kind in ("mesh", "triangular"):
        coords = tuple((r, c) for r in range(topo.rows) for c in range(topo.cols))
        edges = _grid_edges(topo.rows, topo.cols, diagonal=topo.kind == "triangular")
        return graph_from_edges(topo.rows * topo.cols, edges, coords, mesh=topo.kind == "mesh")
    return graph_from_edges(topo.n_nodes, topo.edges)


def is_connected(g: NopGraph) -> bool:
    return all(d >= 0 for d in g._dist[0])


def hop_count(g: NopGraph, src: int, dst: int) -> int:
    """XY-route length on a mesh, BFS shortest path otherwise."""
    if g.mesh:
        (r0, c0), (r1, c1) = g.coords[src], g.coords[dst]
        return abs(r0 - r1) + abs(c0 - c1)
    d = g._dist[src][dst]
    if d < 0:
        raise HardwareError(f"chiplet {dst} unreachable from {src}")
    return d


def route_links(g: NopGraph, src: int, dst: int) -> list[tuple[int, int]]:
    """Directed links traversed by a transfer (XY on a mesh, lowest-id BFS path otherwise)."""
    if src == dst:
        return []
    if g.mesh:
        cols = max(c for _, c in g.coords) + 1
        (r, c), (r1, c1) = g.coords[src], g.coords[dst]
        nodes = [src]
        while c != c1:
            c += 1 if c1 > c else -1
            nodes.append(r * cols + c)
        while r != r1:
            r += 1 if r1 > r else -1
            nodes.append(r * cols + c)
    else:
        nodes = [src]
        cur = src
        while cur != dst:
            # step to the lowest-id neighbour that is one hop closer
            cur = next(v for v in g.adjacency[cur] if g._dist[v][dst] == g._dist[cur][dst] - 1)
            nodes.append(cur)
    return list(zip(nodes, nodes[1:]))


def memory_portal(g: NopGraph, spec: McmSpec, c: int) -> tuple[int, int]:
    """Nearest portal to chiplet ``c`` and its hop distance; ties go to the lowest id."""
    return min(((hop_count(g, c, p), p) for p in sorted(set(spec.portals))))[::-1]


# ---------------------------------------------------------------------------
# Pattern presets


def _pattern(preset: str, topo: Topology) -> list[str]:
    p = preset.lower()
    n = topo.size()
    if p in ("homogeneous-nvdla", "standalone-nvdla", "simba-nvdla"):
        return [WS] * n
    if p in ("homogeneous-shidiannao", "standalone-shidiannao", "simba-shidiannao"):
        return [OS] * n
    if p not in PRESETS:
        raise HardwareError(f"unknown pattern preset {preset!r}")
    if topo.kind not in ("mesh", "triangular"):
        raise HardwareError(f"preset {preset!r} needs a grid topology; give an explicit pattern list")
    rows, cols = topo.rows, topo.cols
    out = []
    for r in range(rows):
        for c in range(cols):
            if p == "het-cb":
                df = WS if (r + c) % 2 == 0 else OS
            elif p in ("het-sides", "het-t"):
                df = WS if c in (0, cols - 1) else OS
            else:  # het-cross
                mid_r = {(rows - 1) // 2, rows // 2}
                mid_c = {(cols - 1) // 2, cols // 2}
                df = OS if (r in mid_r or c in mid_c) else WS
            out.append(df)
    return out


# ---------------------------------------------------------------------------
# Parsing


def _topology_from_dict(d: dict[str, Any]) -> Topology:
    kind = d.get("kind", "mesh")
    if kind == "mesh":
        if "rows" not in d or "cols" not in d:
            raise HardwareError("mesh topology needs rows and cols")
        rows, cols = int(d["rows"]), int(d["cols"])
        if rows < 1 or cols < 1:
            raise HardwareError("mesh rows/cols must be >= 1")
        return Topology("mesh", rows, cols)
    if kind == "triangular":
        rows, cols = int(d.get("rows", 2)), int(d.get("cols", 3))
        if rows < 1 or cols < 1:
            raise HardwareError("triangular rows/cols must be >= 1")
        return Topology("triangular", rows, cols)
    if kind == "custom":
        if "edges" not in d:
            raise HardwareError("custom topology needs an edge list")
        edges = tuple((int(u), int(v)) for u, v in d["edges"])
        n = int(d.get("n_chiplets", 1 + max((max(e) for e in edges), default=0)))
        return Topology("custom", edges=edges, n_nodes=n)
    raise HardwareError(f"unknown topology kind {kind!r}")


def _default_portals(topo: Topology) -> tuple[int, ...]:
    if topo.kind in ("mesh", "triangular"):
        cols = topo.cols
        return tuple(sorted({r * cols for r in range(topo.rows)} | {r * cols + cols - 1 for r in range(topo.rows)}))
    raise HardwareError("custom topologies must list their memory portals")


def hardware_from_dict(d: dict[str, Any]) -> McmSpec:
    if not isinstance(d, dict) or "topology" not in d:
        raise HardwareError("hardware document needs a 'topology' section")
    for tag in d.get("dataflows", []):
        register_dataflow(str(tag).lower())
    topo = _topology_from_dict(d["topology"])
    n = topo.size()
    pattern = d.get("pattern", "homogeneous-nvdla")
    if isinstance(pattern, str):
        dfs = _pattern(pattern, topo)
        pattern_name = pattern.lower()
    else:
        if len(pattern) != n:
            raise HardwareError(f"explicit pattern has {len(pattern)} entries for {n} chiplets")
        dfs = [canonical_dataflow(t) for t in pattern]
        pattern_name = "explicit"
    cd = {**DEFAULT_CHIPLET, **d.get("chiplet", {})}
    unknown = set(cd) - set(DEFAULT_CHIPLET)
    if unknown:
        raise HardwareError(f"unknown chiplet field(s) {sorted(unknown)}")
    chips = tuple(
        ChipletSpec(i, df, int(cd["n_pe"]), float(cd["bw_noc"]), float(cd["bw_mem"]), float(cd["sz_mem"]))
        for i, df in enumerate(dfs)
    )
    pk = {**DEFAULT_PACKAGE, **d.get("package", {})}
    unknown = set(pk) - set(DEFAULT_PACKAGE) - {"portals"}
    if unknown:
        raise HardwareError(f"unknown package field(s) {sorted(unknown)}")
    portals = tuple(int(p) for p in pk["portals"]) if "portals" in pk else _default_portals(topo)
    spec = McmSpec(
        chiplets=chips,
        topology=topo,
        portals=tuple(sorted(set(portals))),
        bw_offchip=float(pk["bw_offchip"]),
        bw_nop=float(pk["bw_nop"]),
        lat_hop=float(pk["lat_hop_ns"]) * 1e-9,
        e_nop_bit=float(pk["e_nop_pj_bit"]) * 1e-12,
        lat_mem=float(pk["lat_mem_ns"]) * 1e-9,
        e_dram_bit=float(pk["e_dram_pj_bit"]) * 1e-12,
        freq_hz=float(pk["freq_mhz"]) * 1e6,
        e_mac=float(pk["e_mac_pj"]) * 1e-12,
        delta=float(pk["delta_ns"]) * 1e-9,
        offchip_share=str(pk["offchip_share"]),
        contention=bool(pk["contention"]),
        name=str(d.get("name", "mcm")),
        pattern=pattern_name,
    )
    if not is_connected(spec.graph):
        raise HardwareError("NoP topology is disconnected")
    return spec


def hardware_to_dict(spec: McmSpec) -> dict[str, Any]:
    t = spec.topology
    if t.kind == "custom":
        topo = {"kind": "custom", "n_chiplets": t.n_nodes, "edges": [list(e) for e in t.edges]}
    else:
        topo = {"kind": t.kind, "rows": t.rows, "cols": t.cols}
    c0 = spec.chiplets[0]
    return {
        "name": spec.name,
        "dataflows": sorted({c.dataflow for c in spec.chiplets} - {WS, OS}),
        "topology": topo,
        "pattern": [c.dataflow for c in spec.chiplets],
        "chiplet": {"n_pe": c0.n_pe, "sz_mem": c0.sz_mem, "bw_noc": c0.bw_noc, "bw_mem": c0.bw_mem},
        "package": {
            "bw_offchip": spec.bw_offchip,
            "bw_nop": spec.bw_nop,
            "lat_hop_ns": spec.lat_hop * 1e9,
            "e_nop_pj_bit": spec.e_nop_bit * 1e12,
            "lat_mem_ns": spec.lat_mem * 1e9,
            "e_dram_pj_bit": spec.e_dram_bit * 1e12,
            "freq_mhz": spec.freq_hz / 1e6,
            "e_mac_pj": spec.e_mac * 1e12,
            "delta_ns": spec.delta * 1e9,
            "offchip_share": spec.offchip_share,
            "contention": spec.contention,
            "portals": list(spec.portals),
        },
    }


def parse_hardware(text: str, fmt: str = "json") -> McmSpec:
    if fmt == "yaml":
        import yaml

        return hardware_from_dict(yaml.safe_load(text))
    try:
        return hardware_from_dict(json.loads(text))
    except json.JSONDecodeError as e:
        raise HardwareError(f"not valid JSON: {e}") from e


def load_hardware(path: str | Path) -> McmSpec:
    p = Path(path)
    return parse_hardware(p.read_text(), "yaml" if p.suffix.lower() in (".yaml", ".yml") else "json")


def mesh_mcm(rows: int, cols: int, pattern: str | Sequence[str] = "homogeneous-nvdla", **package: Any) -> McmSpec:
    """Build a mesh package in code; ``package`` keys follow the document schema."""
    chiplet = {k: package.pop(k) for k in list(package) if k in DEFAULT_CHIPLET}
    doc: dict[str, Any] = {
        "name": f"{pattern if isinstance(pattern, str) else 'explicit'}-{rows}x{cols}",
        "topology": {"kind": "mesh", "rows": rows, "cols": cols},
        "pattern": pattern if isinstance(pattern, str) else list(pattern),
        "chiplet": chiplet,
        "package": package,
    }
    return hardware_from_dict(doc)
