"""Latency/energy model for layers, segments, pipelines, windows and schedules.

Two per-layer cost providers share one interface: :class:`AnalyticalProvider`
(utilisation model below) and :class:`DatabaseProvider` (imported table, e.g.
produced offline by a detailed accelerator simulator).

Analytical utilisation: a chiplet keeps ``min(n_pe, P)`` PEs busy where the
exploitable parallelism ``P`` is ``c_in * c_out`` for weight-stationary and
``out_h * out_w * batch`` for output-stationary chiplets.

Communication inside a window:

* each segment loads its weights from DRAM through the nearest memory portal;
  the first segment of a model in the window also loads its input activations;
* a segment hands its output to the next segment's chiplet over the NoP, and
  the last segment in the window writes its output back to DRAM.

Every segment latency is evaluated at the model's mini-batch ``b'`` and the
model's layers in the window form a pipeline over ``b / b'`` mini-batches.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .hardware import OS, WS, ChipletSpec, McmSpec, hop_count, memory_portal, route_links
from .pipeline import pipeline_latency
from .schedule import FullSchedule, Placement, WindowSchedule
from .workload import LayerParams, Model, Scenario, macs

METRICS = ("latency", "energy", "edp")


class CostError(LookupError):
    pass


@dataclass(frozen=True)
class LayerCost:
    cycles: int
    compute_energy: float


# ---------------------------------------------------------------------------
# Communication


@dataclass(frozen=True)
class Route:
    kind: str  # "same" | "nop" | "offchip"
    src: int
    dst: int = -1  # destination chiplet, or the memory portal for offchip
    n_hops: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("same", "nop", "offchip"):
            raise ValueError(f"unknown route kind {self.kind!r}")
        if self.n_hops < 0 or (self.kind == "same" and self.n_hops):
            raise ValueError("bad hop count for route")

    @classmethod
    def between(cls, mcm: McmSpec, src: int, dst: int) -> Route:
        if src == dst:
            return cls("same", src, dst, 0)
        return cls("nop", src, dst, hop_count(mcm.graph, src, dst))

    @classmethod
    def offchip(cls, mcm: McmSpec, c: int) -> Route:
        portal, hops = memory_portal(mcm.graph, mcm, c)
        return cls("offchip", c, portal, hops)


@dataclass(frozen=True)
class CommParams:
    bw_nop: float
    bw_mem: float
    lat_hop: float
    lat_mem: float
    delta: float
    e_nop_bit: float
    e_dram_bit: float

    @classmethod
    def from_mcm(cls, mcm: McmSpec, share: int = 1) -> CommParams:
        bw_mem = mcm.bw_offchip / share if mcm.offchip_share == "fair" else mcm.bw_offchip
        return cls(mcm.bw_nop, bw_mem, mcm.lat_hop, mcm.lat_mem, mcm.delta, mcm.e_nop_bit, mcm.e_dram_bit)


def comm_latency(sz: float, route: Route, p: CommParams, slowdown: float = 1.0) -> float:
    """Transfer time; ``slowdown`` scales the serialisation term under link contention."""
    if route.kind == "same":
        return 0.0
    if route.kind == "nop":
        return slowdown * sz / p.bw_nop + route.n_hops * p.lat_hop + p.delta
    return sz / p.bw_mem + route.n_hops * p.lat_hop + p.lat_mem + p.delta


def comm_energy(sz: float, route: Route, p: CommParams) -> float:
    if route.kind == "same":
        return 0.0
    bits = 8 * sz
    nop = bits * p.e_nop_bit * route.n_hops
    if route.kind == "nop":
        return nop
    return bits * p.e_dram_bit + nop


# ---------------------------------------------------------------------------
# Per-layer providers


def parallelism(dataflow: str, layer: LayerParams) -> int:
    if dataflow == WS:
        if layer.kind in ("depthwise", "pool"):
            return layer.c_out
        return layer.c_in * layer.c_out
    if dataflow == OS:
        return layer.out_h * layer.out_w * layer.batch_size
    raise CostError(f"no analytical model for dataflow {dataflow!r}; use a cost database")


def layer_compute_cost(layer: LayerParams, chiplet: ChipletSpec, e_mac: float = 1e-12) -> LayerCost:
    n = macs(layer)
    busy = min(chiplet.n_pe, parallelism(chiplet.dataflow, layer))
    return LayerCost(cycles=max(1, -(-n // busy)), compute_energy=n * e_mac)


class CostProvider(Protocol):
    def layer_cost(self, model: Model, index: int, chiplet: ChipletSpec, batch: int) -> LayerCost: ...


@dataclass
class AnalyticalProvider:
    e_mac: float = 1e-12

    def layer_cost(self, model: Model, index: int, chiplet: ChipletSpec, batch: int) -> LayerCost:
        return layer_compute_cost(model.layers[index].with_batch(batch), chiplet, self.e_mac)


CostDb = dict[tuple[str, int, str], LayerCost]
DB_HEADER = ["model", "layer", "dataflow", "cycles", "energy_pj"]


def lookup_cost(db: Mapping[tuple[str, int, str], LayerCost], model: str, layer: int, df: str) -> LayerCost:
    try:
        return db[(model, layer, df)]
    except KeyError:
        raise CostError(f"no cost entry for (model={model!r}, layer={layer}, dataflow={df!r})") from None


def parse_cost_db(text: str) -> CostDb:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != DB_HEADER:
        raise CostError(f"cost database header must be {','.join(DB_HEADER)}")
    db: CostDb = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 5:
            raise CostError(f"line {lineno}: expected 5 fields, got {len(row)}")
        key = (row[0].strip(), int(row[1]), row[2].strip().lower())
        if key in db:
            raise CostError(f"line {lineno}: duplicate entry {key}")
        db[key] = LayerCost(int(row[3]), float(row[4]) * 1e-12)
    return db


def dump_cost_db(db: Mapping[tuple[str, int, str], LayerCost]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(DB_HEADER)
    for (m, l, df), c in sorted(db.items()):
        w.writerow([m, l, df, c.cycles, repr(c.compute_energy * 1e12)])
    return out.getvalue()


def load_cost_db(path: str | Path) -> CostDb:
    return parse_cost_db(Path(path).read_text())


def tabulate_costs(scenario: Scenario, mcm: McmSpec, provider: CostProvider | None = None) -> CostDb:
    """Costs of every layer on every dataflow class of ``mcm`` at full batch."""
    provider = provider or AnalyticalProvider(mcm.e_mac)
    reps = {}
    for c in mcm.chiplets:
        reps.setdefault(c.dataflow, c)
    return {
        (m.name, i, df): provider.layer_cost(m, i, chip, m.batch)
        for m in scenario.models
        for i in range(len(m))
        for df, chip in sorted(reps.items())
    }


@dataclass
class DatabaseProvider:
    """Looks costs up at the model's full batch; smaller mini-batches scale linearly."""

    db: Mapping[tuple[str, int, str], LayerCost]

    def layer_cost(self, model: Model, index: int, chiplet: ChipletSpec, batch: int) -> LayerCost:
        c = lookup_cost(self.db, model.name, index, chiplet.dataflow)
        if batch == model.batch:
            return c
        cycles = max(1, math.ceil(c.cycles * batch / model.batch))
        return LayerCost(cycles, c.compute_energy * batch / model.batch)


# ---------------------------------------------------------------------------
# Segments, pipelines, windows


def mini_batch(layers: Sequence[LayerParams], chiplet: ChipletSpec, batch: int) -> int:
    """Largest divisor of ``batch`` whose working set fits the chiplet memory (at least 1)."""
    ws = max(l.working_set_per_sample() for l in layers)
    best = 1
    for d in range(1, batch + 1):
        if batch % d == 0 and ws * d <= chiplet.sz_mem:
            best = d
    return best


def segment_latency(
    compute_lats: Sequence[float],
    transfers: Iterable[tuple[float, Route]],
    p: CommParams,
) -> float:
    """Sum of layer compute latencies plus every (bytes, route) transfer of the segment."""
    return sum(compute_lats) + sum(comm_latency(sz, r, p) for sz, r in transfers)


def window_latency(model_pipelines: Mapping[str, float]) -> float:
    if not model_pipelines:
        raise ValueError("window has no model pipelines")
    return max(model_pipelines.values())


def expected_layer_cost(
    model: Model,
    index: int,
    mcm: McmSpec,
    metric: str = "latency",
    provider: CostProvider | None = None,
) -> float:
    """Chiplet-population-weighted mean of a layer's metric over dataflow classes."""
    provider = provider or AnalyticalProvider(mcm.e_mac)
    counts: dict[tuple, int] = {}
    reps: dict[tuple, ChipletSpec] = {}
    for c in mcm.chiplets:
        key = (c.dataflow, c.n_pe)
        counts[key] = counts.get(key, 0) + 1
        reps.setdefault(key, c)
    total = 0.0
    for key in sorted(counts):
        lc = provider.layer_cost(model, index, reps[key], model.batch)
        if metric == "latency":
            v = lc.cycles / mcm.freq_hz
        elif metric == "energy":
            v = lc.compute_energy
        elif metric == "edp":
            v = lc.cycles / mcm.freq_hz * lc.compute_energy
        else:
            raise ValueError(f"unknown metric {metric!r}")
        total += counts[key] / mcm.n_chiplets * v
    return total


@dataclass(frozen=True)
class ModelCost:
    latency: float
    energy: float
    mini_batch: int
    stage_latencies: tuple[float, ...]


@dataclass(frozen=True)
class WindowCost:
    latency: float
    energy: float
    per_model: dict[int, ModelCost]


@dataclass(frozen=True)
class CostReport:
    latency: float
    energy: float
    edp: float
    per_window: tuple[tuple[float, float], ...]
    per_model: dict[str, float]  # completion time of each model
    per_model_busy: dict[str, float] = field(default_factory=dict)
    window_model_latency: tuple[dict[str, float], ...] = ()


class CostModel:
    """Caching evaluator bound to one scenario and one package."""

    def __init__(self, scenario: Scenario, mcm: McmSpec, provider: CostProvider | None = None):
        self.scenario = scenario
        self.mcm = mcm
        self.provider = provider or AnalyticalProvider(mcm.e_mac)
        self.offchip_routes = [Route.offchip(mcm, c) for c in range(mcm.n_chiplets)]
        self._params: dict[int, CommParams] = {}
        self._layer: dict[tuple, tuple[float, float]] = {}
        self._mb: dict[tuple, int] = {}
        self._routes: dict[tuple[int, int], Route] = {}
        self.memo: dict = {}  # scratch cache for callers (segment scores, model costs)

    def params(self, share: int = 1) -> CommParams:
        p = self._params.get(share)
        if p is None:
            p = self._params[share] = CommParams.from_mcm(self.mcm, share)
        return p

    def route(self, src: int, dst: int) -> Route:
        r = self._routes.get((src, dst))
        if r is None:
            r = self._routes[(src, dst)] = Route.between(self.mcm, src, dst)
        return r

    def layer(self, m: int, l: int, chip: ChipletSpec, batch: int) -> tuple[float, float]:
        """(compute latency in seconds, compute energy) of one layer."""
        key = (m, l, chip.dataflow, chip.n_pe, batch)
        v = self._layer.get(key)
        if v is None:
            lc = self.provider.layer_cost(self.scenario.models[m], l, chip, batch)
            v = self._layer[key] = (lc.cycles / self.mcm.freq_hz, lc.compute_energy)
        return v

    def segment_mini_batch(self, m: int, seg: tuple[int, int], chip: ChipletSpec) -> int:
        key = (m, seg, chip.sz_mem)
        v = self._mb.get(key)
        if v is None:
            model = self.scenario.models[m]
            v = self._mb[key] = mini_batch(model.layers[seg[0] : seg[1]], chip, model.batch)
        return v

    def segment_transfers(
        self, m: int, seg: tuple[int, int], c: int, bp: int, first: bool, next_chip: int | None
    ) -> tuple[tuple[float, Route], tuple[float, Route]]:
        """(input+weight load, output hand-off) transfers of one segment at mini-batch ``bp``."""
        layers = self.scenario.models[m].layers
        load = sum(l.weight_bytes() for l in layers[seg[0] : seg[1]])
        if first:
            load += layers[seg[0]].input_bytes(bp)
        out = layers[seg[1] - 1].output_bytes(bp)
        out_route = self.offchip_routes[c] if next_chip is None else self.route(c, next_chip)
        return (load, self.offchip_routes[c]), (out, out_route)

    def model_cost(
        self,
        m: int,
        segments: Sequence[tuple[int, int]],
        chiplets: Sequence[int],
        share: int = 1,
        link_load: Mapping[tuple[int, int], int] | None = None,
    ) -> ModelCost:
        if len(segments) != len(chiplets) or not segments:
            raise ValueError("each segment needs exactly one chiplet")
        chips = self.mcm.chiplets
        model = self.scenario.models[m]
        p = self.params(share)
        bp = min(self.segment_mini_batch(m, s, chips[c]) for s, c in zip(segments, chiplets))
        stage_lats = []
        stage_energy = 0.0
        last = len(segments) - 1
        for k, (seg, c) in enumerate(zip(segments, chiplets)):
            chip = chips[c]
            lat = 0.0
            for l in range(seg[0], seg[1]):
                cl, ce = self.layer(m, l, chip, bp)
                lat += cl
                stage_energy += ce
            nxt = chiplets[k + 1] if k < last else None
            (ld_sz, ld_r), (out_sz, out_r) = self.segment_transfers(m, seg, c, bp, k == 0, nxt)
            if ld_sz > 0:
                lat += comm_latency(ld_sz, ld_r, p)
                stage_energy += comm_energy(ld_sz, ld_r, p)
            slow = 1.0
            if link_load and out_r.kind == "nop":
                slow = float(max(link_load[e] for e in route_links(self.mcm.graph, c, nxt)))
            lat += comm_latency(out_sz, out_r, p, slow)
            stage_energy += comm_energy(out_sz, out_r, p)
            stage_lats.append(lat)
        n_mb = model.batch // bp
        return ModelCost(
            latency=pipeline_latency(stage_lats, model.batch, bp),
            energy=n_mb * stage_energy,
            mini_batch=bp,
            stage_latencies=tuple(stage_lats),
        )

    def link_loads(self, ws: WindowSchedule) -> dict[tuple[int, int], int]:
        load: dict[tuple[int, int], int] = {}
        for pl in ws.placements:
            for a, b in zip(pl.chiplets, pl.chiplets[1:]):
                for e in route_links(self.mcm.graph, a, b):
                    load[e] = load.get(e, 0) + 1
        return load

    def window_cost(self, ws: WindowSchedule) -> WindowCost:
        if not ws.placements:
            return WindowCost(0.0, 0.0, {})
        share = len(ws.placements)
        loads = self.link_loads(ws) if self.mcm.contention else None
        per = {
            pl.model: self.model_cost(pl.model, pl.segments, pl.chiplets, share, loads) for pl in ws.placements
        }
        lat = max(c.latency for c in per.values())
        energy = 0.0
        for pl in ws.placements:
            energy += per[pl.model].energy
        return WindowCost(lat, energy, per)

    def scenario_cost(self, fs: FullSchedule) -> CostReport:
        return aggregate_windows(self.scenario, [self.window_cost(ws) for ws in fs.windows])

    def expected(self, m: int, l: int, metric: str = "latency") -> float:
        key = ("E", m, l, metric)
        v = self._layer.get(key)
        if v is None:
            v = self._layer[key] = expected_layer_cost(self.scenario.models[m], l, self.mcm, metric, self.provider)
        return v


def aggregate_windows(scenario: Scenario, windows: Sequence[WindowCost]) -> CostReport:
    """Scenario totals from per-window costs; empty windows contribute nothing."""
    names = [m.name for m in scenario.models]
    latency = 0.0
    energy = 0.0
    per_window = []
    wml = []
    completion: dict[str, float] = {}
    busy = {n: 0.0 for n in names}
    for wc in windows:
        row = {names[m]: c.latency for m, c in sorted(wc.per_model.items())}
        wml.append(row)
        per_window.append((wc.latency, wc.energy))
        if not wc.per_model:
            continue
        for n, v in row.items():
            completion[n] = latency + v
            busy[n] += v
        latency += wc.latency
        energy += wc.energy
    return CostReport(
        latency=latency,
        energy=energy,
        edp=latency * energy,
        per_window=tuple(per_window),
        per_model={n: completion.get(n, 0.0) for n in names},
        per_model_busy=busy,
        window_model_latency=tuple(wml),
    )


def make_route(mcm: McmSpec, src: int, dst: int | None) -> Route:
    """Route from ``src`` to chiplet ``dst``, or to DRAM when ``dst`` is None."""
    return Route.offchip(mcm, src) if dst is None else Route.between(mcm, src, dst)


def placement_cost(cm: CostModel, pl: Placement, share: int = 1) -> ModelCost:
    return cm.model_cost(pl.model, pl.segments, pl.chiplets, share)
