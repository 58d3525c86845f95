"""Layer segmentation of a model's window run, pruning heuristics and the EA.

A segmentation of a run of ``L`` layers into at most ``n`` segments is a set of
split positions drawn from the ``L - 1`` gaps between layers. Candidates are
ordered by split count, then lexicographically, which gives every candidate a
stable rank (``unrank_segmentation`` inverts it without enumerating).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from .costmodel import CostModel, comm_energy, comm_latency, Route
from .pipeline import pipeline_latency
from .provisioner import Provision, ProvisionError

T = TypeVar("T")
Segments = tuple[tuple[int, int], ...]


def segments_from_splits(run: tuple[int, int], splits: Sequence[int]) -> Segments:
    """``splits`` are gap offsets within the run: offset p cuts after local layer p."""
    s, e = run
    cuts = [s] + [s + p + 1 for p in splits] + [e]
    return tuple(zip(cuts, cuts[1:]))


def count_segmentations(n_layers: int, n_nodes: int) -> int:
    return sum(math.comb(n_layers - 1, k) for k in range(min(n_nodes, n_layers)))


def enumerate_segmentations(run: tuple[int, int], n_nodes: int) -> Iterator[Segments]:
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    s, e = run
    if e <= s:
        raise ValueError("segmentation needs a non-empty run")
    gaps = range(e - s - 1)
    for k in range(min(n_nodes, e - s)):
        for splits in combinations(gaps, k):
            yield segments_from_splits(run, splits)


def _unrank_combination(n: int, k: int, r: int) -> list[int]:
    out, x = [], 0
    for i in range(k):
        while True:
            c = math.comb(n - x - 1, k - i - 1)
            if r < c:
                break
            r -= c
            x += 1
        out.append(x)
        x += 1
    return out


def unrank_segmentation(run: tuple[int, int], n_nodes: int, rank: int) -> Segments:
    n_gaps = run[1] - run[0] - 1
    for k in range(min(n_nodes, n_gaps + 1)):
        c = math.comb(n_gaps, k)
        if rank < c:
            return segments_from_splits(run, _unrank_combination(n_gaps, k, rank))
        rank -= c
    raise IndexError("segmentation rank out of range")


def is_partition(run: tuple[int, int], segments: Segments) -> bool:
    if not segments:
        return run[0] == run[1]
    if segments[0][0] != run[0] or segments[-1][1] != run[1]:
        return False
    return all(a < b for a, b in segments) and all(x[1] == y[0] for x, y in zip(segments, segments[1:]))


# ---------------------------------------------------------------------------
# Heuristic pruning


def topk_per_model(cands: Iterable[T], k: int, score: Callable[[T], float]) -> list[T]:
    """The ``k`` lowest-scoring candidates; equal scores keep enumeration order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = [(score(c), i, c) for i, c in enumerate(cands)]
    scored.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in scored[:k]]


def apply_node_cap(
    prov: Provision,
    cap: int,
    layer_counts: Sequence[int],
    factor: float = 3.0,
    strict: bool = False,
) -> Provision:
    """Clamp models with disproportionately many layers to ``cap`` nodes.

    A model is disproportionate when its window layer count exceeds ``factor``
    times the mean layer count of the other active models. Freed nodes go to
    uncapped models in proportion to their current allocation (largest
    remainder, ties to the lower index); if every model is capped they idle,
    or ``strict`` raises.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    n = len(prov.counts)
    counts = list(prov.counts)
    capped = []
    for i in range(n):
        others = [layer_counts[j] for j in range(n) if j != i]
        if others and layer_counts[i] > factor * (sum(others) / len(others)) and counts[i] > cap:
            capped.append(i)
    if not capped:
        return prov
    freed = sum(counts[i] - cap for i in capped)
    for i in capped:
        counts[i] = cap
    free_models = [i for i in range(n) if i not in capped]
    if not free_models:
        if strict:
            raise ProvisionError("node cap leaves no model to take the freed nodes")
        return Provision(prov.models, tuple(counts), prov.total)
    base = sum(counts[i] for i in free_models)
    exact = [(counts[i] * freed, i) for i in free_models]  # share numerators over ``base``
    add = {i: num // base for num, i in exact}
    left = freed - sum(add.values())
    for _, i in sorted(((-(num % base), i) for num, i in exact))[:left]:
        add[i] += 1
    for i, a in add.items():
        counts[i] += a
    return Provision(prov.models, tuple(counts), prov.total)


def standalone_segment_score(
    cm: CostModel, m: int, segments: Segments, metric: str = "edp"
) -> tuple[float, float]:
    """Placement-agnostic (latency, energy) of one model's segmentation.

    Each segment runs on its best chiplet class, loads from and stores to DRAM
    at a portal (no NoP hops), and the pipeline uses the mini-batch that fits
    the smallest chiplet memory.
    """
    key = ("seg-score", m, segments, metric)
    hit = cm.memo.get(key)
    if hit is not None:
        return hit
    chips = _classes(cm)
    small = min(chips, key=lambda c: (c.sz_mem, c.id))
    model = cm.scenario.models[m]
    bp = min(cm.segment_mini_batch(m, s, small) for s in segments)
    p = cm.params()
    dram = Route("offchip", 0, 0, 0)
    lats, energy = [], 0.0
    for k, seg in enumerate(segments):
        best = None
        for chip in chips:
            lat = en = 0.0
            for l in range(*seg):
                cl, ce = cm.layer(m, l, chip, bp)
                lat += cl
                en += ce
            layers = model.layers
            load = sum(x.weight_bytes() for x in layers[seg[0] : seg[1]])
            if k == 0:
                load += layers[seg[0]].input_bytes(bp)
            out = layers[seg[1] - 1].output_bytes(bp)
            for sz in (load, out):
                if sz > 0:
                    lat += comm_latency(sz, dram, p)
                    en += comm_energy(sz, dram, p)
            val = {"latency": lat, "energy": en}.get(metric, lat * en)
            if best is None or val < best[0]:
                best = (val, lat, en)
        lats.append(best[1])
        energy += best[2]
    out = (pipeline_latency(lats, model.batch, bp), energy * (model.batch // bp))
    cm.memo[key] = out
    return out


def _classes(cm: CostModel):
    seen = {}
    for c in cm.mcm.chiplets:
        seen.setdefault((c.dataflow, c.n_pe, c.sz_mem), c)
    return list(seen.values())


# ---------------------------------------------------------------------------
# Evolutionary search over integer encodings


@dataclass
class EvolveResult:
    best: tuple[int, ...]
    fitness: float
    history: list[float] = field(default_factory=list)  # best-ever fitness after each generation
    n_evals: int = 0


def evolve(
    domain: Sequence[int],
    fitness: Callable[[tuple[int, ...]], float],
    pop: int = 10,
    gens: int = 4,
    seed: int | str = 0,
    rng: random.Random | None = None,
) -> EvolveResult:
    """Generational EA over tuples with ``0 <= x[i] < domain[i]``.

    Size-2 tournaments, one-point crossover, per-gene resampling with
    probability ``1/len(domain)`` and one elite. Fitness values are memoised,
    so at most ``pop * (gens + 1)`` distinct encodings are evaluated.
    """
    if not domain or any(d < 1 for d in domain):
        raise ValueError("evolve needs a non-empty domain with every gene size >= 1")
    if pop < 1 or gens < 0:
        raise ValueError("pop must be >= 1 and gens >= 0")
    rng = rng or random.Random(seed)
    n = len(domain)
    memo: dict[tuple[int, ...], float] = {}

    def fit(x: tuple[int, ...]) -> float:
        v = memo.get(x)
        if v is None:
            v = memo[x] = fitness(x)
        return v

    def key(x: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
        return (fit(x), x)

    population = [tuple(rng.randrange(d) for d in domain) for _ in range(pop)]
    best = min(population, key=key)
    history = [fit(best)]
    p_mut = 1.0 / n
    for _ in range(gens):
        elite = min(population, key=key)
        children = [elite]
        while len(children) < pop:
            a = _tournament(population, key, rng)
            b = _tournament(population, key, rng)
            if n > 1:
                cut = rng.randrange(1, n)
                child = list(a[:cut] + b[cut:])
            else:
                child = list(a)
            for i in range(n):
                if rng.random() < p_mut:
                    child[i] = rng.randrange(domain[i])
            children.append(tuple(child))
        population = children
        cand = min(population, key=key)
        if key(cand) < key(best):
            best = cand
        history.append(fit(best))
    return EvolveResult(best, fit(best), history, len(memo))


def _tournament(population, key, rng: random.Random):
    a, b = rng.choice(population), rng.choice(population)
    return min(a, b, key=key)
