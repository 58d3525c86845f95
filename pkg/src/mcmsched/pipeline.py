"""Inter-chiplet pipeline latency: closed form and a discrete-event reference.

Both functions only add and multiply stage latencies, so they work on ints
and :class:`fractions.Fraction` as well as floats (exact comparisons in tests).
"""
from __future__ import annotations

import heapq
from collections import deque
from typing import Sequence, TypeVar

T = TypeVar("T")


def _check(stage_lats: Sequence, b: int, bp: int) -> int:
    if not stage_lats:
        raise ValueError("pipeline needs at least one stage")
    if bp < 1 or b < 1 or b % bp:
        raise ValueError(f"mini-batch {bp} does not divide batch {b}")
    return b // bp


def pipeline_latency(stage_lats: Sequence[T], b: int, bp: int) -> T:
    """Fill time plus ``b/bp - 1`` further mini-batches at the bottleneck stage."""
    n_mb = _check(stage_lats, b, bp)
    total = sum(stage_lats[1:], stage_lats[0])
    return total + (n_mb - 1) * max(stage_lats)


def simulate_pipeline_oracle(stage_lats: Sequence[T], b: int, bp: int) -> T:
    """Event-driven run of ``b/bp`` mini-batches through in-order stages.

    A stage serves one mini-batch at a time, FIFO; it may start mini-batch m
    once it has finished m-1 and the previous stage has delivered m.
    Returns the completion time of the last mini-batch at the last stage.
    """
    n_mb = _check(stage_lats, b, bp)
    n_st = len(stage_lats)
    zero = stage_lats[0] - stage_lats[0]
    queues: list[deque[int]] = [deque() for _ in range(n_st)]
    queues[0].extend(range(n_mb))
    busy = [False] * n_st
    events: list = []
    seq = 0

    def try_start(k: int, now) -> None:
        nonlocal seq
        if not busy[k] and queues[k]:
            m = queues[k].popleft()
            busy[k] = True
            heapq.heappush(events, (now + stage_lats[k], seq, k, m))
            seq += 1

    try_start(0, zero)
    finish = zero
    while events:
        now, _, k, m = heapq.heappop(events)
        busy[k] = False
        if k + 1 < n_st:
            queues[k + 1].append(m)
            try_start(k + 1, now)
        elif m == n_mb - 1:
            finish = now
        try_start(k, now)
    return finish
