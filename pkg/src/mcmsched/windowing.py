"""Time-window plans and layer-to-window packing.

Windows are periodic slices of a time horizon measured in expected layer
latency. ``greedy_pack`` walks each model's layers first-fit: a layer joins the
current window while its expected latency fits the remaining slack; otherwise
the window is closed, the running clock jumps to the window boundary and the
layer is retried in the next window. The final window is unbounded.
"""
from __future__ import annotations

from typing import Sequence

from .costmodel import CostModel, CostProvider
from .hardware import McmSpec
from .schedule import LayerAssignment, WindowPlan
from .workload import Scenario


def expected_latencies(
    sc: Scenario, mcm: McmSpec, provider: CostProvider | None = None, cm: CostModel | None = None
) -> list[list[float]]:
    cm = cm or CostModel(sc, mcm, provider)
    return [[cm.expected(m, l, "latency") for l in range(len(model))] for m, model in enumerate(sc.models)]


def time_horizon(
    sc: Scenario, mcm: McmSpec, provider: CostProvider | None = None, cm: CostModel | None = None
) -> float:
    return horizon_of(expected_latencies(sc, mcm, provider, cm))


def horizon_of(expected: Sequence[Sequence[float]]) -> float:
    return max(sum(e) for e in expected)


def make_windows(horizon: float, n_splits: int) -> WindowPlan:
    if n_splits < 0:
        raise ValueError("n_splits must be >= 0")
    if n_splits and horizon <= 0:
        raise ValueError("horizon must be > 0 to place window boundaries")
    return WindowPlan(tuple(k * horizon / (n_splits + 1) for k in range(1, n_splits + 1)))


def greedy_pack_values(expected: Sequence[Sequence[float]], plan: WindowPlan) -> LayerAssignment:
    """First-fit packing from per-model expected layer latencies."""
    rho = plan.boundaries
    n_win = plan.n_windows
    runs = [[(0, 0)] * len(expected) for _ in range(n_win)]
    for m, lats in enumerate(expected):
        win, used, start = 0, 0, 0
        for l, e in enumerate(lats):
            while True:
                slack = None if win == len(rho) else rho[win] - used
                if slack is None or e <= slack:
                    used += e
                    break
                runs[win][m] = (start, l)
                used = rho[win]
                start = l
                win += 1
        runs[win][m] = (start, len(lats))
        # windows skipped past this model's last layer keep an empty run at its end
        for w in range(win + 1, n_win):
            runs[w][m] = (len(lats), len(lats))
    return LayerAssignment(tuple(tuple(r) for r in runs))


def greedy_pack(
    sc: Scenario,
    plan: WindowPlan,
    mcm: McmSpec,
    provider: CostProvider | None = None,
    cm: CostModel | None = None,
) -> LayerAssignment:
    return greedy_pack_values(expected_latencies(sc, mcm, provider, cm), plan)


def uniform_counts(n_layers: int, n_windows: int) -> list[int]:
    q, r = divmod(n_layers, n_windows)
    return [q + (1 if w < r else 0) for w in range(n_windows)]


def uniform_pack(sc: Scenario, plan: WindowPlan) -> LayerAssignment:
    """Near-equal contiguous runs per model; earlier windows take the remainder."""
    n_win = plan.n_windows
    runs = [[(0, 0)] * len(sc.models) for _ in range(n_win)]
    for m, model in enumerate(sc.models):
        s = 0
        for w, k in enumerate(uniform_counts(len(model), n_win)):
            runs[w][m] = (s, s + k)
            s += k
    return LayerAssignment(tuple(tuple(r) for r in runs))


def window_loads(expected: Sequence[Sequence[float]], asg: LayerAssignment) -> list[list[float]]:
    """Expected latency packed into each window, per model (``loads[w][m]``)."""
    return [[sum(expected[m][s:e]) for m, (s, e) in enumerate(row)] for row in asg.runs]
