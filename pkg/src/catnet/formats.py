"""On-disk artifact formats.

Every CSV starts with a ``# <format> v<version> key=value ...`` line, then a
header row. Loaders refuse files whose format name or version differ.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

from .engine import Event, Snapshot
from .metrics import DESCRIPTORS, TREND_SYMBOLS, DescriptorSeries, EnsembleSummary

VERSION = 1

EVENTS = "catnet-events"
SNAPSHOTS = "catnet-snapshots"
SPECIES = "catnet-species"
DESCRIPTOR_FMT = "catnet-descriptors"
ENSEMBLE = "catnet-ensemble"
TRENDS = "catnet-trends"

EVENT_COLUMNS = ["time", "kind", "schema", "catalyst", "products", "new_species"]
SNAPSHOT_COLUMNS = ["window", "time", "species_id", "count", "energized_count"]


class FormatError(ValueError):
    pass


def _header(fmt: str, meta: dict | None) -> str:
    extra = "".join(f" {k}={v}" for k, v in sorted((meta or {}).items()))
    return f"# {fmt} v{VERSION}{extra}\n"


def read_header(path, fmt: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    parts = first.split()
    if len(parts) < 3 or parts[0] != "#" or parts[1] != fmt:
        raise FormatError(f"{path}: not a {fmt} file")
    if parts[2] != f"v{VERSION}":
        raise FormatError(f"{path}: {fmt} version {parts[2]} unsupported (want v{VERSION})")
    meta = {}
    for item in parts[3:]:
        k, _, v = item.partition("=")
        meta[k] = v
    return meta


def _rows(path, fmt: str):
    read_header(path, fmt)
    with open(path, encoding="utf-8", newline="") as fh:
        fh.readline()
        yield from csv.DictReader(fh)


def _writer(path, fmt: str, columns: list[str], meta: dict | None):
    fh = open(path, "w", encoding="utf-8", newline="")
    fh.write(_header(fmt, meta))
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    return fh, w


def write_events(path, events: Iterable[Event], meta: dict | None = None) -> None:
    fh, w = _writer(path, EVENTS, EVENT_COLUMNS, meta)
    with fh:
        for ev in events:
            w.writerow((repr(ev.time), ev.kind, ev.schema, ev.catalyst,
                        ";".join(map(str, ev.products)), int(ev.new_species)))


def read_events(path) -> list[Event]:
    out = []
    for row in _rows(path, EVENTS):
        prods = tuple(int(p) for p in row["products"].split(";")) if row["products"] else ()
        out.append(Event(float(row["time"]), row["kind"], row["schema"], int(row["catalyst"]),
                         prods, row["new_species"] == "1"))
    return out


def write_snapshots(path, snapshots: Iterable[Snapshot], meta: dict | None = None) -> None:
    fh, w = _writer(path, SNAPSHOTS, SNAPSHOT_COLUMNS, meta)
    with fh:
        for snap in snapshots:
            for sid in sorted(snap.counts):
                w.writerow((snap.window, repr(snap.time), sid, snap.counts[sid], snap.energized.get(sid, 0)))


def read_snapshots(path, n_windows: int | None = None) -> list[Snapshot]:
    by_window: dict[int, Snapshot] = {}
    for row in _rows(path, SNAPSHOTS):
        w = int(row["window"])
        snap = by_window.get(w)
        if snap is None:
            snap = by_window[w] = Snapshot(w, float(row["time"]), {}, {})
        sid = int(row["species_id"])
        snap.counts[sid] = int(row["count"])
        if int(row["energized_count"]):
            snap.energized[sid] = int(row["energized_count"])
    if n_windows is not None:
        for w in range(n_windows):
            # an empty reactor leaves no rows for its window
            by_window.setdefault(w, Snapshot(w, math.nan, {}, {}))
    return [by_window[w] for w in sorted(by_window)]


def write_species(path, result) -> None:
    fh, w = _writer(path, SPECIES, ["id", "sequence", "length", "origin"], None)
    with fh:
        for sp in result.chemistry.species:
            w.writerow((sp.id, sp.sequence, sp.length, result.origin(sp.id)))


def read_species(path) -> list[dict]:
    return [{"id": int(r["id"]), "sequence": r["sequence"], "length": int(r["length"]),
             "origin": r["origin"]} for r in _rows(path, SPECIES)]


def write_descriptors(path, series: DescriptorSeries, meta: dict | None = None) -> None:
    fh, w = _writer(path, DESCRIPTOR_FMT, ["window", *DESCRIPTORS], meta)
    with fh:
        for row in series.rows():
            w.writerow(row)


def read_descriptors(path) -> DescriptorSeries:
    series = DescriptorSeries()
    for row in _rows(path, DESCRIPTOR_FMT):
        for d in DESCRIPTORS:
            getattr(series, d).append(int(row[d]))
    return series


def write_ensemble(path, summaries: Iterable[EnsembleSummary], meta: dict | None = None) -> None:
    fh, w = _writer(path, ENSEMBLE, ["parameter", "window", "descriptor", "mean", "se", "n"], meta)
    with fh:
        for s in summaries:
            for win in range(s.n_windows):
                for d in DESCRIPTORS:
                    w.writerow((repr(s.parameter), win, d, repr(float(s.mean[d][win])),
                                repr(float(s.se[d][win])), s.n_runs))
                for name, series in (("p_acs", s.p_acs), ("p_acs_window", s.p_acs_window)):
                    p = float(series[win])
                    se = math.sqrt(p * (1 - p) / s.n_runs) if s.n_runs > 1 else math.nan
                    w.writerow((repr(s.parameter), win, name, repr(p), repr(se), s.n_runs))


def read_ensemble(path) -> dict[float, dict[str, list[float]]]:
    """``{parameter: {descriptor: per-window means}}``."""
    out: dict[float, dict[str, list[float]]] = {}
    for row in _rows(path, ENSEMBLE):
        p = float(row["parameter"])
        out.setdefault(p, {}).setdefault(row["descriptor"], []).append(float(row["mean"]))
    return out


def write_trends(path, rows: Iterable[tuple[str, str, str, str]], meta: dict | None = None) -> None:
    fh, w = _writer(path, TRENDS, ["family", "parameter", "descriptor", "trend", "symbol"], meta)
    with fh:
        for family, param, descriptor, trend in rows:
            w.writerow((family, param, descriptor, trend, TREND_SYMBOLS[trend]))


def read_trends(path) -> list[dict]:
    return list(_rows(path, TRENDS))


def run_dir_files(out: Path) -> dict[str, Path]:
    out = Path(out)
    return {
        "events": out / "events.csv",
        "snapshots": out / "snapshots.csv",
        "species": out / "species.csv",
        "descriptors": out / "descriptors.csv",
        "acs": out / "acs_reports.json",
        "chemistry": out / "chemistry_final.json",
        "meta": out / "run.json",
    }
