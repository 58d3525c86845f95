"""Schedule data types shared by the engines.

Layer ranges are half-open ``(start, stop)`` pairs over a model's
topologically ordered layer list. A window run with ``start == stop`` is empty.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class WindowPlan:
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        b = self.boundaries
        if any(not y > x for x, y in zip(b, b[1:])):
            raise ValueError(f"window boundaries must be strictly ascending: {b}")

    @property
    def n_splits(self) -> int:
        return len(self.boundaries)

    @property
    def n_windows(self) -> int:
        return len(self.boundaries) + 1

    def width(self, w: int) -> float | None:
        """Width of window ``w``; ``None`` for the final unbounded window."""
        if w >= len(self.boundaries):
            return None
        return self.boundaries[w] - (self.boundaries[w - 1] if w else 0.0)


@dataclass(frozen=True)
class LayerAssignment:
    """``runs[w][m]`` is the layer range of model ``m`` packed into window ``w``."""

    runs: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def n_windows(self) -> int:
        return len(self.runs)

    def run(self, w: int, m: int) -> tuple[int, int]:
        return self.runs[w][m]

    def active_models(self, w: int) -> list[int]:
        return [m for m, (s, e) in enumerate(self.runs[w]) if e > s]

    def n_layers(self, w: int) -> int:
        return sum(e - s for s, e in self.runs[w])

    @classmethod
    def from_lists(cls, per_window: list[list[list[int]]], n_models: int) -> LayerAssignment:
        """Build from explicit layer-index lists, ``per_window[w][m]``; lists must be contiguous."""
        starts = [0] * n_models
        runs = []
        for w, lists in enumerate(per_window):
            row = []
            for m in range(n_models):
                idx = list(lists[m]) if m < len(lists) else []
                if idx and idx != list(range(idx[0], idx[0] + len(idx))):
                    raise ValueError(f"window {w} model {m}: run {idx} is not contiguous")
                s = idx[0] if idx else starts[m]
                row.append((s, s + len(idx)))
                if idx:
                    starts[m] = s + len(idx)
            runs.append(tuple(row))
        return cls(tuple(runs))


@dataclass(frozen=True)
class Placement:
    """One model's segments within a window and the chiplet running each segment.

    ``path`` is the full scheduling-tree path; chiplets past ``len(segments)``
    were released (left idle) for the window.
    """

    model: int
    segments: tuple[tuple[int, int], ...]
    chiplets: tuple[int, ...]
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.path:
            object.__setattr__(self, "path", tuple(self.chiplets))

    @property
    def run(self) -> tuple[int, int]:
        return (self.segments[0][0], self.segments[-1][1])


@dataclass(frozen=True)
class WindowSchedule:
    index: int
    placements: tuple[Placement, ...] = ()

    def placement(self, m: int) -> Placement | None:
        for p in self.placements:
            if p.model == m:
                return p
        return None

    def used_chiplets(self) -> list[int]:
        return [c for p in self.placements for c in p.chiplets]


@dataclass(frozen=True)
class FullSchedule:
    plan: WindowPlan
    assignment: LayerAssignment
    windows: tuple[WindowSchedule, ...]
    provenance: tuple[tuple[int, ...] | None, ...] = field(default=())
