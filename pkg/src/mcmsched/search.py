"""Hierarchical schedule search: windows, provisioning, segmentation, chiplet paths.

Windows are costed independently (every window reads its inputs from DRAM and
writes its outputs back), so a full schedule's latency and energy are sums of
per-window values. The search therefore keeps a Pareto set of the candidates
evaluated in each window; the scenario-level frontier is the Pareto-pruned
Minkowski sum of those sets, and the best schedule under any objective that is
monotone in (latency, energy) is the minimiser over that frontier.
"""
from __future__ import annotations

import os
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Any, Callable, Iterable, Sequence

from .costmodel import CostModel, CostProvider, CostReport
from .hardware import WS, McmSpec, homogenize
from .provisioner import Provision, ProvisionError, provision_exhaustive, provision_uniform
from .schedtree import bind_window, build_forest, decode_path_genes, enumerate_paths
from .schedule import FullSchedule, LayerAssignment, Placement, WindowPlan, WindowSchedule
from .segmentation import (
    apply_node_cap,
    count_segmentations,
    enumerate_segmentations,
    evolve,
    standalone_segment_score,
    topk_per_model,
    unrank_segmentation,
)
from .windowing import greedy_pack_values, horizon_of, make_windows, uniform_pack
from .workload import Scenario

OBJECTIVES = ("latency", "energy", "edp", "weighted")
MODES = ("exhaustive", "evolutionary", "random")
INF = float("inf")


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class Objective:
    tag: str = "edp"
    wl: float = 1.0
    we: float = 1.0
    ref_latency: float = 1.0
    ref_energy: float = 1.0

    def __post_init__(self) -> None:
        if self.tag not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.tag!r}; expected one of {OBJECTIVES}")
        if self.wl < 0 or self.we < 0 or (self.wl == 0 and self.we == 0):
            raise ValueError("objective weights must be >= 0 and not both zero")
        if self.ref_latency <= 0 or self.ref_energy <= 0:
            raise ValueError("normalisation references must be > 0")

    @classmethod
    def parse(cls, text: str) -> Objective:
        """``latency``, ``energy``, ``edp`` or ``weighted:WL,WE``."""
        if text.startswith("weighted"):
            _, _, w = text.partition(":")
            wl, we = (float(x) for x in w.split(",")) if w else (1.0, 1.0)
            return cls("weighted", wl, we)
        return cls(text)

    @property
    def metric(self) -> str:
        return self.tag if self.tag in ("latency", "energy") else "edp"

    def value(self, latency: float, energy: float) -> float:
        if self.tag == "latency":
            return latency
        if self.tag == "energy":
            return energy
        if self.tag == "edp":
            return latency * energy
        return self.wl * latency / self.ref_latency + self.we * energy / self.ref_energy

    def normalized(self, ref_latency: float, ref_energy: float) -> Objective:
        return replace(self, ref_latency=ref_latency, ref_energy=ref_energy)


def score(r: CostReport, obj: Objective) -> float:
    return obj.value(r.latency, r.energy)


@dataclass(frozen=True)
class SearchConfig:
    n_splits: int = 4
    packing: str = "greedy"
    prov: str = "uniform"
    top_k: int = 3
    node_cap: int | None = None
    cap_factor: float = 3.0
    mode: str = "exhaustive"
    pop: int = 10
    gens: int = 4
    seed: int = 0
    allow_idle: bool = False
    jobs: int = 1
    window_objective: str | None = None
    max_seg_candidates: int = 50_000
    seed_standalone: bool = True
    record_points: bool = False  # keep every evaluated window point (frontier audits)

    def __post_init__(self) -> None:
        if self.n_splits < 0:
            raise ValueError("n_splits must be >= 0")
        if self.packing not in ("greedy", "uniform"):
            raise ValueError(f"unknown packing {self.packing!r}")
        if self.prov not in ("uniform", "exhaustive"):
            raise ValueError(f"unknown provisioning {self.prov!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.top_k < 1 or self.pop < 1 or self.gens < 0 or self.jobs < 1:
            raise ValueError("top_k, pop and jobs must be >= 1 and gens >= 0")
        if self.node_cap is not None and self.node_cap < 1:
            raise ValueError("node_cap must be >= 1")


# ---------------------------------------------------------------------------
# Pareto utilities


@dataclass(frozen=True)
class ParetoPoint:
    latency: float
    energy: float
    schedule_id: str = ""

    @property
    def edp(self) -> float:
        return self.latency * self.energy


def _le(p) -> tuple[float, float]:
    if isinstance(p, tuple):
        return p[0], p[1]
    return p.latency, p.energy


def pareto(points: Iterable[Any]) -> list[Any]:
    """Non-dominated points under (latency, energy), sorted by latency then energy.

    Points are ``(latency, energy, ...)`` tuples or objects with ``latency`` and
    ``energy`` attributes. Among equal points the first inserted survives.
    """
    items = list(points)
    order = sorted(range(len(items)), key=lambda i: (*_le(items[i]), i))
    out = []
    best_e = INF
    for i in order:
        lat, e = _le(items[i])
        if e < best_e:
            out.append(items[i])
            best_e = e
    return out


def dominates(a, b) -> bool:
    (la, ea), (lb, eb) = _le(a), _le(b)
    return la <= lb and ea <= eb and (la < lb or ea < eb)


class StreamingFrontier:
    """Pareto set over a stream of (latency, energy, payload) with insertion ids."""

    def __init__(self) -> None:
        self._front: list[tuple[float, float, int, Any]] = []
        self._buf: list[tuple[float, float, int, Any]] = []
        self.n_added = 0

    def add(self, latency: float, energy: float, payload: Any) -> int:
        i = self.n_added
        self.n_added += 1
        self._buf.append((latency, energy, i, payload))
        if len(self._buf) > 4 * len(self._front) + 1024:
            self._compress()
        return i

    def _compress(self) -> None:
        self._front = pareto(self._front + self._buf)
        self._buf = []

    def points(self) -> list[tuple[float, float, int, Any]]:
        self._compress()
        return list(self._front)


def minkowski_frontier(fronts: Sequence[Sequence[tuple[float, float, int]]]) -> list[tuple[float, float, tuple[int, ...]]]:
    """Pareto set of sums choosing one point per window, windows added in order."""
    acc: list[tuple[float, float, tuple[int, ...]]] = [(0.0, 0.0, ())]
    for f in fronts:
        acc = pareto([(a[0] + p[0], a[1] + p[1], a[2] + (p[2],)) for a in acc for p in f])
    return acc


def schedule_id(ids: Sequence[int]) -> str:
    return "-".join(str(i) for i in ids)


# ---------------------------------------------------------------------------
# Windows and baselines


def plan_windows(sc: Scenario, cm: CostModel, cfg: SearchConfig) -> tuple[WindowPlan, LayerAssignment]:
    expected = [[cm.expected(m, l, "latency") for l in range(len(model))] for m, model in enumerate(sc.models)]
    plan = make_windows(horizon_of(expected), cfg.n_splits)
    if cfg.packing == "greedy":
        return plan, greedy_pack_values(expected, plan)
    return plan, uniform_pack(sc, plan)


def standalone_chiplets(cm: CostModel, obj: Objective) -> tuple[int, ...]:
    """One chiplet per model, chosen greedily in model order by the whole-model cost."""
    sc, n = cm.scenario, cm.mcm.n_chiplets
    if len(sc.models) > n:
        raise SearchError(f"standalone needs one chiplet per model: {len(sc.models)} models, {n} chiplets")
    free = list(range(n))
    out = []
    for m, model in enumerate(sc.models):
        seg = ((0, len(model)),)

        def cost(c: int) -> tuple[float, int]:
            mc = cm.model_cost(m, seg, (c,))
            return (obj.value(mc.latency, mc.energy), c)

        c = min(free, key=cost)
        free.remove(c)
        out.append(c)
    return tuple(out)


def standalone_window(w: int, asg: LayerAssignment, chiplets: Sequence[int]) -> WindowSchedule:
    return WindowSchedule(
        w, tuple(Placement(m, (asg.run(w, m),), (chiplets[m],)) for m in asg.active_models(w))
    )


def standalone_schedule(
    plan: WindowPlan, asg: LayerAssignment, chiplets: Sequence[int]
) -> FullSchedule:
    windows = tuple(standalone_window(w, asg, chiplets) for w in range(asg.n_windows))
    return FullSchedule(plan, asg, windows, (None,) * len(windows))


def sequential_schedule(sc: Scenario, chiplet: int) -> FullSchedule:
    """Every model alone on ``chiplet``, one window per model, in model order."""
    n = len(sc.models)
    runs = []
    for w in range(n):
        runs.append(tuple((0, 0) if m > w else ((0, len(sc.models[m])) if m == w else (len(sc.models[m]),) * 2) for m in range(n)))
    asg = LayerAssignment(tuple(runs))
    plan = WindowPlan(tuple(float(k) for k in range(1, n)))
    windows = tuple(
        WindowSchedule(w, (Placement(w, ((0, len(sc.models[w])),), (chiplet,)),)) for w in range(n)
    )
    return FullSchedule(plan, asg, windows, (None,) * n)


def baseline(
    sc: Scenario,
    mcm: McmSpec,
    kind: str,
    obj: Objective | None = None,
    cfg: SearchConfig | None = None,
    provider: CostProvider | None = None,
    dataflow: str = WS,
    chiplet: int = 0,
) -> FullSchedule:
    obj = obj or Objective()
    cfg = cfg or SearchConfig()
    cm = CostModel(sc, mcm, provider)
    if kind == "standalone":
        plan, asg = plan_windows(sc, cm, cfg)
        return standalone_schedule(plan, asg, standalone_chiplets(cm, obj))
    if kind == "simba-pipelined":
        return search(sc, homogenize(mcm, dataflow), obj, cfg, provider).best
    if kind == "sequential":
        return sequential_schedule(sc, chiplet)
    raise ValueError(f"unknown baseline {kind!r}")


# ---------------------------------------------------------------------------
# Per-window search


@dataclass
class WindowResult:
    index: int
    frontier: list[tuple[float, float, int, WindowSchedule, tuple[int, ...] | None]]
    evaluated: int
    history: list[list[float]] = field(default_factory=list)  # EA best-ever per generation, per provision
    samples: list[tuple[float, float]] = field(default_factory=list)  # random mode, in draw order
    points: list[tuple[float, float]] = field(default_factory=list)  # every candidate, when recorded


@dataclass(frozen=True)
class _Context:
    sc: Scenario
    mcm: McmSpec
    provider: Any
    cfg: SearchConfig
    wobj: Objective
    asg: LayerAssignment
    standalone: tuple[int, ...] | None


class _WindowSearch:
    def __init__(self, ctx: _Context, w: int, cm: CostModel):
        self.ctx, self.w, self.cm = ctx, w, cm
        self.active = ctx.asg.active_models(w)
        self.runs = [ctx.asg.run(w, m) for m in self.active]
        self.front = StreamingFrontier()
        self.evaluated = 0
        self.history: list[list[float]] = []
        self.samples: list[tuple[float, float]] = []
        self.points: list[tuple[float, float]] = []

    # costs
    def model_cost(self, m: int, segs, chips) -> tuple[float, float]:
        key = ("mc", len(self.active), m, segs, chips)
        v = self.cm.memo.get(key)
        if v is None:
            mc = self.cm.model_cost(m, segs, chips, share=len(self.active))
            v = self.cm.memo[key] = (mc.latency, mc.energy)
        return v

    def window_cost(self, paths, segs) -> tuple[float, float]:
        self.evaluated += 1
        if self.ctx.mcm.contention:
            wc = self.cm.window_cost(bind_window(self.w, self.active, paths, segs))
            return wc.latency, wc.energy
        lat, energy = 0.0, 0.0
        for m, p, s in zip(self.active, paths, segs):
            ml, me = self.model_cost(m, s, p[: len(s)])
            lat = max(lat, ml)
            energy += me
        return lat, energy

    def add(self, lat: float, energy: float, paths, segs, enc=None) -> None:
        if self.ctx.cfg.record_points:
            self.points.append((lat, energy))
        self.front.add(lat, energy, (tuple(paths), tuple(segs), enc))

    # provisions
    def provisions(self) -> list[Provision]:
        cfg, cm, n = self.ctx.cfg, self.cm, self.ctx.mcm.n_chiplets
        if len(self.active) > n:
            raise SearchError(f"window {self.w}: {len(self.active)} active models exceed {n} chiplets")
        if cfg.prov == "exhaustive":
            provs = list(provision_exhaustive(self.active, n, cfg.allow_idle))
        else:
            metric = "energy" if self.ctx.wobj.tag == "energy" else "latency"
            values = [sum(cm.expected(m, l, metric) for l in range(*r)) for m, r in zip(self.active, self.runs)]
            provs = [provision_uniform(self.active, values, n)]
        if cfg.node_cap is not None:
            lens = [e - s for s, e in self.runs]
            capped = []
            for p in provs:
                q = apply_node_cap(p, cfg.node_cap, lens, cfg.cap_factor)
                if q not in capped:
                    capped.append(q)
            provs = capped
        return provs

    def seg_nodes(self, n_layers: int, n: int) -> int:
        limit = self.ctx.cfg.max_seg_candidates
        while n > 1 and count_segmentations(n_layers, n) > limit:
            n -= 1
        return n

    def run(self) -> WindowResult:
        if not self.active:
            self.add(0.0, 0.0, (), ())
            return self.result()
        if self.ctx.standalone is not None and self.ctx.cfg.seed_standalone:
            paths = [(self.ctx.standalone[m],) for m in self.active]
            segs = [(r,) for r in self.runs]
            self.add(*self.window_cost(paths, segs), paths, segs)
        for p_idx, prov in enumerate(self.provisions()):
            if self.ctx.cfg.mode == "exhaustive":
                self.exhaustive(prov)
            else:
                self.stochastic(prov, p_idx)
        return self.result()

    def result(self) -> WindowResult:
        pts = []
        for lat, e, i, (paths, segs, enc) in self.front.points():
            pts.append((lat, e, i, bind_window(self.w, self.active, paths, segs), enc))
        return WindowResult(self.w, pts, self.evaluated, self.history, self.samples, self.points)

    def exhaustive(self, prov: Provision) -> None:
        wobj, cm, k = self.ctx.wobj, self.cm, self.ctx.cfg.top_k
        tops = []
        for m, run, n in zip(self.active, self.runs, prov.counts):
            cands = enumerate_segmentations(run, self.seg_nodes(run[1] - run[0], n))
            tops.append(topk_per_model(cands, k, lambda s, m=m: wobj.value(*standalone_segment_score(cm, m, s, wobj.metric))))
        g = self.ctx.mcm.graph
        contention = self.ctx.mcm.contention
        for tree in build_forest(self.ctx.mcm.n_chiplets, prov.counts):
            for paths in enumerate_paths(tree, g):
                if contention:
                    for segs in product(*tops):
                        self.add(*self.window_cost(paths, segs), paths, segs)
                    continue
                options = []
                for m, p, top in zip(self.active, paths, tops):
                    opts = [(self.model_cost(m, s, p[: len(s)]), s) for s in top]
                    options.append(pareto([(lat, e, s) for (lat, e), s in opts]))
                for combo in product(*options):
                    self.evaluated += 1
                    lat = max(o[0] for o in combo)
                    energy = 0.0
                    for o in combo:
                        energy += o[1]
                    self.add(lat, energy, paths, [o[2] for o in combo])

    def stochastic(self, prov: Provision, p_idx: int) -> None:
        ctx = self.ctx
        nodes = [self.seg_nodes(r[1] - r[0], n) for r, n in zip(self.runs, prov.counts)]
        domain = [count_segmentations(r[1] - r[0], n) for r, n in zip(self.runs, nodes)]
        domain += [ctx.mcm.n_chiplets] * len(self.active)
        n_m = len(self.active)
        g = ctx.mcm.graph
        last: list[tuple[float, float]] = []

        def fitness(x: tuple[int, ...]) -> float:
            segs = [unrank_segmentation(r, n, x[i]) for i, (r, n) in enumerate(zip(self.runs, nodes))]
            paths = decode_path_genes(g, [len(s) for s in segs], x[n_m:])
            if paths is None:
                last.append((INF, INF))
                return INF
            lat, e = self.window_cost(paths, segs)
            self.add(lat, e, paths, segs, tuple(x))
            last.append((lat, e))
            return ctx.wobj.value(lat, e)

        rng = random.Random(f"{ctx.cfg.seed}:{self.w}:{p_idx}")
        if ctx.cfg.mode == "evolutionary":
            res = evolve(domain, fitness, ctx.cfg.pop, ctx.cfg.gens, rng=rng)
            self.history.append(res.history)
        else:
            for _ in range(ctx.cfg.pop * (ctx.cfg.gens + 1)):
                fitness(tuple(rng.randrange(d) for d in domain))
                self.samples.append(last[-1])


def _run_window(args: tuple[_Context, int]) -> WindowResult:
    ctx, w = args
    return _WindowSearch(ctx, w, CostModel(ctx.sc, ctx.mcm, ctx.provider)).run()


# ---------------------------------------------------------------------------
# Top level


@dataclass
class SearchResult:
    best: FullSchedule
    report: CostReport
    score: float
    frontier: list[ParetoPoint]
    evaluated: int
    wall_time: float
    windows: list[WindowResult]
    objective: Objective
    config: SearchConfig
    best_id: str = ""

    def window_points(self) -> list[tuple[int, int, float, float]]:
        """(window, point id, latency, energy) of every per-window frontier point."""
        return [(wr.index, p[2], p[0], p[1]) for wr in self.windows for p in wr.frontier]


def search(
    sc: Scenario,
    mcm: McmSpec,
    obj: Objective | None = None,
    cfg: SearchConfig | None = None,
    provider: CostProvider | None = None,
    progress: Callable[[int, WindowResult], None] | None = None,
) -> SearchResult:
    t0 = time.perf_counter()
    obj = obj or Objective()
    cfg = cfg or SearchConfig()
    cm = CostModel(sc, mcm, provider)
    plan, asg = plan_windows(sc, cm, cfg)
    sa = standalone_chiplets(cm, obj) if len(sc.models) <= mcm.n_chiplets else None
    if obj.tag == "weighted":
        if sa is None:
            raise SearchError("weighted objectives are normalised by the standalone baseline, which needs #models <= #chiplets")
        ref = cm.scenario_cost(standalone_schedule(plan, asg, sa))
        obj = obj.normalized(ref.latency or 1.0, ref.energy or 1.0)
    wobj = Objective.parse(cfg.window_objective) if cfg.window_objective else obj
    if wobj.tag == "weighted" and obj.tag == "weighted":
        wobj = replace(wobj, ref_latency=obj.ref_latency, ref_energy=obj.ref_energy)
    ctx = _Context(sc, mcm, provider, cfg, wobj, asg, sa)
    tasks = [(ctx, w) for w in range(asg.n_windows)]
    jobs = min(cfg.jobs, len(tasks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_window, tasks))
    else:
        results = []
        for w in range(asg.n_windows):
            results.append(_WindowSearch(ctx, w, cm).run())
            if progress:
                progress(w, results[-1])

    combined = minkowski_frontier([[(p[0], p[1], p[2]) for p in wr.frontier] for wr in results])
    if not combined:
        raise SearchError("no feasible schedule found")
    lat, energy, ids = min(combined, key=lambda c: (obj.value(c[0], c[1]), c[0], c[1], c[2]))
    chosen = [next(p for p in wr.frontier if p[2] == i) for wr, i in zip(results, ids)]
    best = FullSchedule(plan, asg, tuple(p[3] for p in chosen), tuple(p[4] for p in chosen))
    report = cm.scenario_cost(best)
    return SearchResult(
        best=best,
        report=report,
        score=obj.value(report.latency, report.energy),
        frontier=[ParetoPoint(c[0], c[1], schedule_id(c[2])) for c in combined],
        evaluated=sum(wr.evaluated for wr in results),
        wall_time=time.perf_counter() - t0,
        windows=results,
        objective=obj,
        config=cfg,
        best_id=schedule_id(ids),
    )


def sample_scores(result: SearchResult, obj: Objective | None = None) -> list[float]:
    """Scenario scores of random-mode draws, pairing the j-th draw of every window."""
    obj = obj or result.objective
    n = max((len(wr.samples) for wr in result.windows), default=0)
    out = []
    for j in range(n):
        lat = energy = 0.0
        for wr in result.windows:
            if wr.samples:
                l, e = wr.samples[j]
            else:
                l, e = wr.frontier[0][0], wr.frontier[0][1]
            lat += l
            energy += e
        out.append(obj.value(lat, energy))
    return out


def median_sample_score(result: SearchResult, obj: Objective | None = None) -> float:
    return statistics.median(sample_scores(result, obj))


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
