"""Multi-model workload scenarios: layer shapes, models, dependency ordering.

A scenario document is JSON (or YAML when the file ends in .yaml/.yml)::

    {"name": "sc", "models": [
        {"name": "A",
         "layers": [{"name": "l0", "kind": "conv", "batch_size": 1, "c_in": 3,
                     "c_out": 64, "ip_h": 224, "ip_w": 224, "k_size": 7,
                     "stride": 2, "bytes_per_element": 1}, ...],
         "deps": [[0, 1], ...]}]}

Operators other than conv/fc are described by an equivalent conv/fc shape:

* ``attention-proj`` is a projection over ``ip_h * ip_w`` tokens (k_size 1);
  it is costed exactly like a 1x1 conv.
* ``depthwise`` and ``pool`` are per-channel sliding windows (``c_in == c_out``),
  so their MAC count drops the ``c_in`` reduction factor. ``pool`` has no weights.

When ``deps`` is omitted the layers form a linear chain. Layers are stored in
topological order; a document listing them otherwise is reordered on parse.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

LAYER_KINDS = ("conv", "fc", "depthwise", "pool", "attention-proj")
_DIM_FIELDS = ("batch_size", "c_in", "c_out", "ip_h", "ip_w", "k_size", "stride", "bytes_per_element")


class WorkloadError(ValueError):
    """Raised for malformed scenario documents or invalid layer shapes."""


class CycleError(WorkloadError):
    pass


@dataclass(frozen=True)
class LayerParams:
    name: str
    kind: str
    batch_size: int
    c_in: int
    c_out: int
    ip_h: int
    ip_w: int
    k_size: int
    stride: int = 1
    bytes_per_element: int = 1

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise WorkloadError(f"layer {self.name!r}: unknown kind {self.kind!r}")
        for f in _DIM_FIELDS:
            v = getattr(self, f)
            if isinstance(v, bool) or not isinstance(v, int):
                raise WorkloadError(f"layer {self.name!r}: {f} must be an integer, got {v!r}")
            if v < 1:
                raise WorkloadError(f"layer {self.name!r}: {f} must be >= 1, got {v}")
        if self.kind == "fc" and (self.k_size != 1 or self.ip_h != 1 or self.ip_w != 1):
            raise WorkloadError(f"layer {self.name!r}: fc layers need k_size = ip_h = ip_w = 1")
        if self.kind in ("depthwise", "pool") and self.c_in != self.c_out:
            raise WorkloadError(f"layer {self.name!r}: {self.kind} layers need c_in == c_out")

    @property
    def out_h(self) -> int:
        return _out_extent(self.ip_h, self.k_size, self.stride, self.name)

    @property
    def out_w(self) -> int:
        return _out_extent(self.ip_w, self.k_size, self.stride, self.name)

    def with_batch(self, batch: int) -> LayerParams:
        if batch == self.batch_size:
            return self
        return LayerParams(**{**asdict(self), "batch_size": batch})

    # Byte footprints used by the communication model.
    def input_bytes(self, batch: int | None = None) -> int:
        b = self.batch_size if batch is None else batch
        return b * self.c_in * self.ip_h * self.ip_w * self.bytes_per_element

    def output_bytes(self, batch: int | None = None) -> int:
        b = self.batch_size if batch is None else batch
        return b * self.c_out * self.out_h * self.out_w * self.bytes_per_element

    def weight_bytes(self) -> int:
        if self.kind == "pool":
            return 0
        k2 = self.k_size * self.k_size
        if self.kind == "depthwise":
            return self.c_out * k2 * self.bytes_per_element
        return self.c_out * self.c_in * k2 * self.bytes_per_element

    def working_set_per_sample(self) -> int:
        return self.input_bytes(1) + self.weight_bytes() + self.output_bytes(1)


def _out_extent(ip: int, k: int, stride: int, name: str) -> int:
    if k > ip:
        raise WorkloadError(f"layer {name!r}: kernel {k} larger than input extent {ip}")
    return (ip - k) // stride + 1


def macs(layer: LayerParams) -> int:
    """Multiply-accumulate count of one layer at its own batch size (zero padding)."""
    k2 = layer.k_size * layer.k_size
    if layer.kind == "fc":
        return layer.batch_size * layer.c_out * layer.c_in
    spatial = layer.out_h * layer.out_w
    if layer.kind in ("depthwise", "pool"):
        return layer.batch_size * layer.c_out * k2 * spatial
    return layer.batch_size * layer.c_out * layer.c_in * k2 * spatial


@dataclass(frozen=True)
class Model:
    name: str
    layers: tuple[LayerParams, ...]
    deps: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.layers:
            raise WorkloadError(f"model {self.name!r} has no layers")
        n = len(self.layers)
        for u, v in self.deps:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise WorkloadError(f"model {self.name!r}: bad dependency edge ({u}, {v})")
        for u, v in self.deps:
            if u >= v:
                raise WorkloadError(
                    f"model {self.name!r}: stored layer order violates dependency ({u}, {v})"
                )
        batches = {l.batch_size for l in self.layers}
        if len(batches) != 1:
            raise WorkloadError(f"model {self.name!r}: layers disagree on batch size {sorted(batches)}")

    @property
    def batch(self) -> int:
        return self.layers[0].batch_size

    def __len__(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class Scenario:
    name: str
    models: tuple[Model, ...]

    def __post_init__(self) -> None:
        if not self.models:
            raise WorkloadError("scenario needs at least one model")
        names = [m.name for m in self.models]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise WorkloadError(f"duplicate model name(s): {sorted(dup)}")

    @property
    def n_layers(self) -> int:
        return sum(len(m) for m in self.models)

    def model_index(self, name: str) -> int:
        for i, m in enumerate(self.models):
            if m.name == name:
                return i
        raise KeyError(name)


def topo_sort(model: Model | int, deps: Iterable[tuple[int, int]] | None = None) -> list[int]:
    """Kahn's algorithm; among ready layers the lowest original index goes first.

    Accepts a :class:`Model` or a layer count plus an edge list.
    """
    if isinstance(model, Model):
        n, deps = len(model), model.deps
    else:
        n, deps = model, deps or ()
    succ: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in deps:
        succ[u].append(v)
        indeg[v] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != n:
        stuck = sorted(i for i in range(n) if indeg[i] > 0)
        raise CycleError(f"cyclic dependency among layers {stuck}")
    return order


def _layer_from_dict(d: dict[str, Any], where: str) -> LayerParams:
    missing = [f for f in ("name", "kind", "batch_size", "c_in", "c_out", "ip_h", "ip_w", "k_size") if f not in d]
    if missing:
        raise WorkloadError(f"{where}: missing field(s) {missing}")
    unknown = set(d) - {"name", "kind", *_DIM_FIELDS}
    if unknown:
        raise WorkloadError(f"{where}: unknown field(s) {sorted(unknown)}")
    return LayerParams(
        name=str(d["name"]),
        kind=d["kind"],
        batch_size=d["batch_size"],
        c_in=d["c_in"],
        c_out=d["c_out"],
        ip_h=d["ip_h"],
        ip_w=d["ip_w"],
        k_size=d["k_size"],
        stride=d.get("stride", 1),
        bytes_per_element=d.get("bytes_per_element", 1),
    )


def model_from_dict(d: dict[str, Any]) -> Model:
    if "name" not in d or "layers" not in d:
        raise WorkloadError("model entry needs 'name' and 'layers'")
    name = str(d["name"])
    raw = d["layers"]
    if not isinstance(raw, list) or not raw:
        raise WorkloadError(f"model {name!r}: 'layers' must be a non-empty list")
    layers = [_layer_from_dict(ld, f"model {name!r} layer {i}") for i, ld in enumerate(raw)]
    n = len(layers)
    if d.get("deps") is None:
        deps = [(i, i + 1) for i in range(n - 1)]
    else:
        deps = []
        for e in d["deps"]:
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise WorkloadError(f"model {name!r}: dependency {e!r} is not a pair")
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise WorkloadError(f"model {name!r}: bad dependency edge ({u}, {v})")
            deps.append((u, v))
    order = topo_sort(n, deps)
    where = {old: new for new, old in enumerate(order)}
    new_deps = sorted({(where[u], where[v]) for u, v in deps})
    return Model(name=name, layers=tuple(layers[i] for i in order), deps=tuple(new_deps))


def scenario_from_dict(d: dict[str, Any]) -> Scenario:
    if not isinstance(d, dict) or "models" not in d:
        raise WorkloadError("scenario document needs a 'models' list")
    models = d["models"]
    if not isinstance(models, list) or not models:
        raise WorkloadError("scenario needs at least one model")
    return Scenario(name=str(d.get("name", "scenario")), models=tuple(model_from_dict(m) for m in models))


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    return {
        "name": sc.name,
        "models": [
            {
                "name": m.name,
                "layers": [asdict(l) for l in m.layers],
                "deps": [list(e) for e in m.deps],
            }
            for m in sc.models
        ],
    }


def parse_scenario(text: str, fmt: str = "json") -> Scenario:
    return scenario_from_dict(_load_text(text, fmt))


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1)


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), _fmt_for(p))


def _fmt_for(p: Path) -> str:
    return "yaml" if p.suffix.lower() in (".yaml", ".yml") else "json"


def _load_text(text: str, fmt: str) -> Any:
    if fmt == "yaml":
        import yaml

        return yaml.safe_load(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise WorkloadError(f"not valid JSON: {e}") from e


def chain(name: str, layers: Sequence[LayerParams]) -> Model:
    """Convenience constructor for a linear-chain model."""
    return Model(name, tuple(layers), tuple((i, i + 1) for i in range(len(layers) - 1)))
