"""Per-window node provisioning: how many chiplets each active model receives."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

_GRID = 10**9  # proportional shares are snapped to 1e-9 nodes before rounding


class ProvisionError(ValueError):
    pass


@dataclass(frozen=True)
class Provision:
    """``counts[i]`` nodes for model ``models[i]``; ``total`` is the package size."""

    models: tuple[int, ...]
    counts: tuple[int, ...]
    total: int

    def __post_init__(self) -> None:
        if len(self.models) != len(self.counts):
            raise ProvisionError("models and counts differ in length")
        if any(n < 1 for n in self.counts):
            raise ProvisionError(f"every active model needs at least one node: {self.counts}")
        if sum(self.counts) > self.total:
            raise ProvisionError(f"provision {self.counts} exceeds {self.total} chiplets")

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.models, self.counts))

    def count(self, m: int) -> int:
        return self.as_dict().get(m, 0)


def _check(n_models: int, n_chiplets: int) -> None:
    if n_models < 1:
        raise ProvisionError("no active models to provision")
    if n_models > n_chiplets:
        raise ProvisionError(f"{n_models} models cannot each get a node on {n_chiplets} chiplets")


def proportional_counts(values: Sequence[float], n_chiplets: int) -> list[int]:
    """Round each model's proportional share, then repair to exactly ``n_chiplets``.

    Zero allocations are raised to one; the sum is then reconciled by largest
    remainder (adding to the models furthest below their share, removing from
    those furthest above it, never below one). Ties go to the lower index.
    """
    _check(len(values), n_chiplets)
    if any(v < 0 for v in values):
        raise ProvisionError("expected metric values must be >= 0")
    total = sum(values)
    if total > 0:
        shares = [round(v / total * n_chiplets * _GRID) for v in values]
    else:
        shares = [round(n_chiplets * _GRID / len(values))] * len(values)
    counts = [max(1, (q + _GRID // 2) // _GRID) for q in shares]
    order = range(len(values))
    while sum(counts) < n_chiplets:
        i = max(order, key=lambda i: (shares[i] - counts[i] * _GRID, -i))
        counts[i] += 1
    while sum(counts) > n_chiplets:
        i = max((i for i in order if counts[i] > 1), key=lambda i: (counts[i] * _GRID - shares[i], -i))
        counts[i] -= 1
    return counts


def provision_uniform(models: Sequence[int], values: Sequence[float], n_chiplets: int) -> Provision:
    """Rule-based provision from each active model's expected metric in the window."""
    return Provision(tuple(models), tuple(proportional_counts(values, n_chiplets)), n_chiplets)


def compositions(n_models: int, n_chiplets: int, allow_idle: bool = False) -> Iterator[tuple[int, ...]]:
    """All (N_1..N_M) with N_i >= 1 summing to ``n_chiplets`` (or at most, with idle), lexicographic."""
    _check(n_models, n_chiplets)
    if not allow_idle:
        for cuts in combinations(range(1, n_chiplets), n_models - 1):
            bounds = (0, *cuts, n_chiplets)
            yield tuple(b - a for a, b in zip(bounds, bounds[1:]))
        return

    def rec(prefix: tuple[int, ...], left: int) -> Iterator[tuple[int, ...]]:
        rest = n_models - len(prefix)
        if rest == 0:
            yield prefix
            return
        for n in range(1, left - (rest - 1) + 1):
            yield from rec(prefix + (n,), left - n)

    yield from rec((), n_chiplets)


def provision_exhaustive(models: Sequence[int], n_chiplets: int, allow_idle: bool = False) -> Iterator[Provision]:
    for counts in compositions(len(models), n_chiplets, allow_idle):
        yield Provision(tuple(models), counts, n_chiplets)
