"""Scheduling trees: map each model's segments onto a chain of adjacent chiplets.

A forest is the set of ordered root selections (one distinct starting chiplet
per model). From each root a depth-first search walks NoP-adjacent chiplets
not yet taken by this window, to the model's provisioned depth; later models
also avoid every path chosen before them. Paths are therefore self-avoiding
walks and chiplets are exclusive to one model per window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterator, Sequence

from .hardware import McmSpec, NopGraph
from .schedule import FullSchedule, Placement, WindowSchedule
from .workload import Scenario

Path = tuple[int, ...]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleTree:
    roots: tuple[int, ...]
    depths: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.roots)) != len(self.roots):
            raise ScheduleError(f"subtree roots must be distinct: {self.roots}")
        if len(self.roots) != len(self.depths) or any(d < 1 for d in self.depths):
            raise ScheduleError("every subtree needs a depth >= 1")


def build_forest(n_chiplets: int, depths: Sequence[int]) -> Iterator[ScheduleTree]:
    if sum(depths) > n_chiplets:
        raise ScheduleError(f"provision {tuple(depths)} exceeds {n_chiplets} chiplets")
    for roots in permutations(range(n_chiplets), len(depths)):
        yield ScheduleTree(roots, tuple(depths))


def walks_from(g: NopGraph, start: int, depth: int, blocked: set[int] | frozenset[int]) -> Iterator[Path]:
    """Self-avoiding walks of ``depth`` nodes from ``start`` avoiding ``blocked`` (ascending neighbours)."""
    if start in blocked:
        return
    path = [start]
    on = {start}

    def dfs() -> Iterator[Path]:
        if len(path) == depth:
            yield tuple(path)
            return
        for v in g.adjacency[path[-1]]:
            if v not in on and v not in blocked:
                path.append(v)
                on.add(v)
                yield from dfs()
                on.discard(v)
                path.pop()

    yield from dfs()


def enumerate_paths(tree: ScheduleTree, g: NopGraph) -> Iterator[tuple[Path, ...]]:
    """Every complete multi-model path set of a tree, models in index order."""
    roots = set(tree.roots)

    def rec(i: int, used: frozenset[int], acc: tuple[Path, ...]) -> Iterator[tuple[Path, ...]]:
        if i == len(tree.roots):
            yield acc
            return
        blocked = used | (roots - {tree.roots[i]})
        for p in walks_from(g, tree.roots[i], tree.depths[i], blocked):
            yield from rec(i + 1, used | frozenset(p), acc + (p,))

    yield from rec(0, frozenset(), ())


def bind(model: int, path: Path, segments: Sequence[tuple[int, int]]) -> Placement:
    """Segment ``k`` runs on ``path[k]``; chiplets past the last segment are released."""
    if len(segments) > len(path):
        raise ScheduleError(f"model {model}: {len(segments)} segments for a path of {len(path)} chiplets")
    return Placement(model, tuple(segments), tuple(path[: len(segments)]), tuple(path))


def bind_window(index: int, models: Sequence[int], paths: Sequence[Path], segs) -> WindowSchedule:
    return WindowSchedule(index, tuple(bind(m, p, s) for m, p, s in zip(models, paths, segs)))


def decode_path_genes(g: NopGraph, lengths: Sequence[int], genes: Sequence[int]) -> tuple[Path, ...] | None:
    """Deterministic path choice for an integer gene per model.

    Model ``i`` tries start chiplets in the order ``genes[i], genes[i]+1, ...``
    (mod |C|) and, from each, depth-first neighbour orders rotated by the same
    gene; the first self-avoiding walk of ``lengths[i]`` free chiplets is taken.
    Returns None when some model cannot be placed.
    """
    n = g.n
    used: set[int] = set()
    out = []
    for length, gene in zip(lengths, genes):
        found = None
        for k in range(n):
            start = (gene + k) % n
            if start in used:
                continue
            found = _rotated_walk(g, start, length, used, gene)
            if found:
                break
        if not found:
            return None
        used.update(found)
        out.append(found)
    return tuple(out)


def _rotated_walk(g: NopGraph, start: int, depth: int, blocked: set[int], rot: int) -> Path | None:
    path = [start]

    def dfs() -> bool:
        if len(path) == depth:
            return True
        nb = g.adjacency[path[-1]]
        r = rot % len(nb) if nb else 0
        for v in nb[r:] + nb[:r]:
            if v not in blocked and v not in path:
                path.append(v)
                if dfs():
                    return True
                path.pop()
        return False

    return tuple(path) if dfs() else None


# ---------------------------------------------------------------------------
# Validation


def violations(fs: FullSchedule, sc: Scenario, mcm: McmSpec) -> list[str]:
    """All rule violations of a schedule, each naming its window/model/layer coordinates."""
    out: list[str] = []
    g = mcm.graph
    n_models = len(sc.models)
    asg = fs.assignment
    if asg.n_windows != fs.plan.n_windows:
        out.append(f"assignment has {asg.n_windows} windows, plan has {fs.plan.n_windows}")
    if len(fs.windows) != asg.n_windows:
        out.append(f"{len(fs.windows)} window schedules for {asg.n_windows} windows")
    for w, row in enumerate(asg.runs):
        if len(row) != n_models:
            out.append(f"window {w}: runs for {len(row)} models, scenario has {n_models}")
    if out:
        return out

    # window partition of every model's layers
    for m, model in enumerate(sc.models):
        pos = 0
        for w in range(asg.n_windows):
            s, e = asg.run(w, m)
            if e < s:
                out.append(f"window-partition: window {w} model {m}: run ({s}, {e}) is reversed")
            elif e > s and s != pos:
                out.append(f"window-partition: window {w} model {m}: run starts at layer {s}, expected {pos}")
            if e > s:
                pos = e
        if pos != len(model):
            out.append(f"window-partition: model {m}: layers {pos}..{len(model) - 1} are not in any window")

    layer_slot: dict[tuple[int, int], tuple[int, int]] = {}
    for w, ws in enumerate(fs.windows):
        if ws.index != w:
            out.append(f"window {w}: schedule carries index {ws.index}")
        seen_models: set[int] = set()
        owner: dict[int, int] = {}
        for pl in ws.placements:
            m = pl.model
            where = f"window {w} model {m}"
            if not 0 <= m < n_models:
                out.append(f"{where}: no such model")
                continue
            if m in seen_models:
                out.append(f"{where}: placed twice")
            seen_models.add(m)
            run = asg.run(w, m)
            if run[1] <= run[0]:
                out.append(f"{where}: placement for a model with no layers in the window")
            # segment partition of the window run
            covered: list[int] = []
            for k, (s, e) in enumerate(pl.segments):
                if e <= s:
                    out.append(f"segment-partition: {where} segment {k}: empty or reversed range ({s}, {e})")
                covered.extend(range(s, e))
                for l in range(s, e):
                    if (m, l) in layer_slot:
                        out.append(f"segment-partition: {where} layer {l} mapped more than once")
                    layer_slot[(m, l)] = (w, k)
            if sorted(covered) != list(range(run[0], run[1])) or len(covered) != len(set(covered)):
                missing = sorted(set(range(*run)) - set(covered))
                extra = sorted(set(covered) - set(range(*run)))
                dup = sorted({l for l in covered if covered.count(l) > 1})
                out.append(
                    f"segment-partition: {where}: segments {list(pl.segments)} do not partition run {run}"
                    f" (missing {missing}, outside {extra}, duplicated {dup})"
                )
            elif any(a[1] != b[0] for a, b in zip(pl.segments, pl.segments[1:])):
                out.append(f"segment-partition: {where}: segments are out of order")
            # chiplets and path
            if len(pl.chiplets) != len(pl.segments):
                out.append(f"{where}: {len(pl.segments)} segments but {len(pl.chiplets)} chiplets")
            if tuple(pl.path[: len(pl.chiplets)]) != tuple(pl.chiplets):
                out.append(f"{where}: chiplets {list(pl.chiplets)} are not a prefix of path {list(pl.path)}")
            bad = [c for c in pl.path if not 0 <= c < mcm.n_chiplets]
            if bad:
                out.append(f"{where}: unknown chiplet id(s) {bad}")
                continue
            if len(set(pl.path)) != len(pl.path):
                out.append(f"path: {where}: path {list(pl.path)} revisits a chiplet")
            for a, b in zip(pl.path, pl.path[1:]):
                if not g.adjacent(a, b):
                    out.append(f"path: {where}: chiplets {a} and {b} are not NoP-adjacent")
            for c in set(pl.path):
                if c in owner and owner[c] != m:
                    out.append(f"exclusivity: window {w}: chiplet {c} used by models {owner[c]} and {m}")
                owner.setdefault(c, m)
        for m in range(n_models):
            s, e = asg.run(w, m)
            if e > s and m not in seen_models:
                out.append(f"segment-partition: window {w} model {m}: layers {s}..{e - 1} have no placement")

    # dependency order
    for m, model in enumerate(sc.models):
        for u, v in model.deps:
            a, b = layer_slot.get((m, u)), layer_slot.get((m, v))
            if a is not None and b is not None and a > b:
                out.append(f"dependency: model {m}: layer {u} (window/segment {a}) runs after layer {v} {b}")
    return out


def validate_schedule(fs: FullSchedule, sc: Scenario, mcm: McmSpec) -> bool:
    errs = violations(fs, sc, mcm)
    if errs:
        raise ScheduleError("; ".join(errs))
    return True


# ---------------------------------------------------------------------------
# Search-space size


def complexity_estimate(layer_counts: Sequence[int], n_chiplets: int) -> float:
    """log10 of C^L * L! / prod(L_i!): per-layer chiplet choice times model interleavings."""
    L = sum(layer_counts)
    lg = math.lgamma(L + 1) - sum(math.lgamma(x + 1) for x in layer_counts)
    return (L * math.log(n_chiplets) + lg) / math.log(10)


def sched_search_bound(n_models: int, n_trees: int, degree: int, n_max: int) -> int:
    return n_models * n_trees * degree**n_max
