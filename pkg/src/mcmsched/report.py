"""Schedule documents and delimited-text tables written by the command line."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from .costmodel import CostModel, CostReport
from .schedule import FullSchedule, LayerAssignment, Placement, WindowPlan, WindowSchedule
from .search import ParetoPoint, minkowski_frontier, schedule_id
from .workload import Scenario

SCHEDULE_FORMAT = "mcmsched-schedule/1"
FRONTIER_HEADER = ["latency_s", "energy_j", "edp_js", "schedule_id"]
POINTS_HEADER = ["window", "point_id", "latency_s", "energy_j"]


def fmt(x: float) -> str:
    """Fixed 12-significant-digit rendering used in every table and report."""
    return f"{x:.12g}"


def num(x: float) -> float:
    return float(fmt(x))


# ---------------------------------------------------------------------------
# Schedule document


def schedule_to_dict(
    fs: FullSchedule,
    sc: Scenario,
    cm: CostModel | None = None,
    meta: dict[str, Any] | None = None,
) -> dict[str, Any]:
    names = [m.name for m in sc.models]
    windows = []
    for w, ws in enumerate(fs.windows):
        wc = cm.window_cost(ws) if cm else None
        entry: dict[str, Any] = {
            "index": w,
            "runs": {names[m]: list(fs.assignment.run(w, m)) for m in range(len(names))},
            "placements": [],
        }
        if wc is not None:
            entry["latency_s"] = num(wc.latency)
            entry["energy_j"] = num(wc.energy)
        for pl in ws.placements:
            p: dict[str, Any] = {
                "model": names[pl.model],
                "segments": [list(s) for s in pl.segments],
                "chiplets": list(pl.chiplets),
                "path": list(pl.path),
            }
            if wc is not None:
                mc = wc.per_model[pl.model]
                p["latency_s"] = num(mc.latency)
                p["energy_j"] = num(mc.energy)
                p["mini_batch"] = mc.mini_batch
                p["stage_latency_s"] = [num(x) for x in mc.stage_latencies]
            entry["placements"].append(p)
        enc = fs.provenance[w] if w < len(fs.provenance) else None
        entry["encoding"] = list(enc) if enc is not None else None
        windows.append(entry)
    doc: dict[str, Any] = {
        "format": SCHEDULE_FORMAT,
        "scenario": sc.name,
        "boundaries": list(fs.plan.boundaries),
        "windows": windows,
    }
    if cm is not None:
        doc["cost"] = report_to_dict(cm.scenario_cost(fs))
    if meta:
        doc.update(meta)
    return doc


def schedule_from_dict(d: dict[str, Any], sc: Scenario) -> FullSchedule:
    if d.get("format") != SCHEDULE_FORMAT:
        raise ValueError(f"not a schedule document (format {d.get('format')!r})")
    names = [m.name for m in sc.models]
    plan = WindowPlan(tuple(float(b) for b in d["boundaries"]))
    runs, windows, prov = [], [], []
    for w, entry in enumerate(d["windows"]):
        r = entry["runs"]
        unknown = set(r) - set(names)
        if unknown:
            raise ValueError(f"window {w}: unknown model(s) {sorted(unknown)}")
        runs.append(tuple(tuple(r.get(n, (0, 0))) for n in names))
        pls = []
        for p in entry["placements"]:
            if p["model"] not in names:
                raise ValueError(f"window {w}: unknown model {p['model']!r}")
            pls.append(
                Placement(
                    names.index(p["model"]),
                    tuple(tuple(s) for s in p["segments"]),
                    tuple(p["chiplets"]),
                    tuple(p.get("path") or p["chiplets"]),
                )
            )
        windows.append(WindowSchedule(int(entry.get("index", w)), tuple(pls)))
        enc = entry.get("encoding")
        prov.append(tuple(enc) if enc is not None else None)
    return FullSchedule(plan, LayerAssignment(tuple(runs)), tuple(windows), tuple(prov))


def report_to_dict(r: CostReport) -> dict[str, Any]:
    return {
        "latency_s": num(r.latency),
        "energy_j": num(r.energy),
        "edp_js": num(r.edp),
        "per_window": [{"latency_s": num(l), "energy_j": num(e)} for l, e in r.per_window],
        "per_model_completion_s": {k: num(v) for k, v in r.per_model.items()},
        "per_model_busy_s": {k: num(v) for k, v in r.per_model_busy.items()},
    }


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Tables


def _csv(rows: Iterable[Sequence[Any]]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    for row in rows:
        w.writerow(row)
    return out.getvalue()


def frontier_csv(points: Sequence[ParetoPoint]) -> str:
    return _csv([FRONTIER_HEADER] + [[fmt(p.latency), fmt(p.energy), fmt(p.edp), p.schedule_id] for p in points])


def window_points_csv(points: Iterable[tuple[int, int, float, float]]) -> str:
    """Per-window frontier points at full precision (re-derivation input)."""
    return _csv([POINTS_HEADER] + [[w, i, repr(l), repr(e)] for w, i, l, e in points])


def parse_window_points(text: str) -> list[list[tuple[float, float, int]]]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != POINTS_HEADER:
        raise ValueError(f"window points header must be {','.join(POINTS_HEADER)}")
    per: dict[int, list[tuple[float, float, int]]] = {}
    for row in rows:
        if not row:
            continue
        w, i, l, e = int(row[0]), int(row[1]), float(row[2]), float(row[3])
        per.setdefault(w, []).append((l, e, i))
    if sorted(per) != list(range(len(per))):
        raise ValueError("window points must cover windows 0..n-1")
    return [per[w] for w in range(len(per))]


def frontier_from_window_points(fronts: Sequence[Sequence[tuple[float, float, int]]]) -> list[ParetoPoint]:
    return [ParetoPoint(l, e, schedule_id(ids)) for l, e, ids in minkowski_frontier(fronts)]


def breakdown_csv(sc: Scenario, fs: FullSchedule, r: CostReport) -> str:
    """Rows per model: latency in each window, ideal (own busy time), completion time, layer count."""
    n_w = len(fs.windows)
    header = ["model"] + [f"W{w}" for w in range(n_w)] + ["ideal", "tot", "layers"]
    rows = [header]
    for m, model in enumerate(sc.models):
        lats = [r.window_model_latency[w].get(model.name) for w in range(n_w)]
        rows.append(
            [model.name]
            + [fmt(x) if x is not None else "" for x in lats]
            + [fmt(r.per_model_busy[model.name]), fmt(r.per_model[model.name]), len(model)]
        )
    rows.append(
        ["window"] + [fmt(l) for l, _ in r.per_window] + ["", fmt(r.latency), sc.n_layers]
    )
    rows.append(
        ["layers"] + [fs.assignment.n_layers(w) for w in range(n_w)] + ["", "", sc.n_layers]
    )
    return _csv(rows)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
