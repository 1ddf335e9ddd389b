"""Single runs and parameter sweeps over chemistries and dynamics realizations."""
from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import formats
from .chem_core import Chemistry, generate_valid_chemistry
from .config import RunConfig, family, with_parameter
from .engine import RunResult, run
from .metrics import (DESCRIPTORS, DescriptorSeries, EnsembleSummary, MetricsError, compute_descriptors,
                      ensemble_average, run_descriptors, trend_classify)

log = logging.getLogger(__name__)

TREND_DESCRIPTORS = DESCRIPTORS + ("p_acs",)


def make_chemistry(cfg: RunConfig, seed: int | None = None, *, backend: str | None = None) -> Chemistry:
    species, influx = cfg.species_sets()
    c = cfg.chemistry
    seed = c.seed if seed is None else seed
    chem = generate_valid_chemistry(species, influx, c.r, seed, c.min_catalyst_length, c.alpha,
                                    c.max_attempts, backend=backend)
    if chem.meta.get("attempts", 1) > 1:
        log.info("chemistry seed %d held an influx ACS; used seed %d after %d attempts",
                 seed, chem.seed, chem.meta["attempts"])
    return chem


def simulate(cfg: RunConfig, chemistry: Chemistry | None = None, dynamics_seed: int | None = None,
             *, backend: str | None = None) -> tuple[RunResult, DescriptorSeries]:
    chem = chemistry if chemistry is not None else make_chemistry(cfg, backend=backend)
    seed = cfg.dynamics_seed if dynamics_seed is None else dynamics_seed
    result = run(chem, cfg.reactor, cfg.kinetics, seed, backend=backend)
    if result.aborted:
        # descriptors for the windows that completed
        series = _partial_descriptors(result)
    else:
        series = run_descriptors(result)
    return result, series


def _partial_descriptors(result: RunResult) -> DescriptorSeries:
    return compute_descriptors(result.events, result.snapshots, result.config.window,
                               len(result.snapshots), result.initial_ids | result.influx_ids)


def chemistry_seed(cfg: RunConfig, m: int) -> int:
    # retries walk seed, seed+1, ...; spacing by max_attempts keeps chemistries disjoint
    return cfg.chemistry.seed + m * cfg.chemistry.max_attempts


def dynamics_seed(cfg: RunConfig, m: int, s: int) -> int:
    return cfg.dynamics_seed + m * cfg.sweep.realizations + s


@dataclass(frozen=True)
class Task:
    index: int
    value: float
    chem_index: int
    realization: int
    chem_seed: int
    dyn_seed: int

    @property
    def name(self) -> str:
        return f"v{self.index:03d}_c{self.chem_index:03d}_r{self.realization:03d}"


@dataclass
class Outcome:
    task: Task
    series: DescriptorSeries | None
    error: str | None = None
    chemistry_seed_used: int | None = None
    steps: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepResult:
    parameter: str
    outcomes: list[Outcome]
    summaries: list[EnsembleSummary]
    trends: list[tuple[str, str, str, str]] = field(default_factory=list)

    @property
    def failures(self) -> list[Outcome]:
        return [o for o in self.outcomes if not o.ok]

    @property
    def failure_fraction(self) -> float:
        return len(self.failures) / len(self.outcomes) if self.outcomes else 0.0


def sweep_tasks(cfg: RunConfig) -> list[Task]:
    sw = cfg.sweep
    if sw is None:
        raise ValueError("configuration has no sweep section")
    tasks = []
    for i, value in enumerate(sw.values):
        for m in range(sw.chemistries):
            for s in range(sw.realizations):
                tasks.append(Task(i, value, m, s, chemistry_seed(cfg, m), dynamics_seed(cfg, m, s)))
    return tasks


def execute(cfg: RunConfig, task: Task, backend: str | None = None) -> Outcome:
    t0 = time.perf_counter()
    try:
        point = with_parameter(cfg, cfg.sweep.parameter, task.value)
        chem = make_chemistry(point, task.chem_seed, backend=backend)
        result, series = simulate(point, chem, task.dyn_seed, backend=backend)
        series.reports = []
        error = f"aborted: {result.aborted}" if result.aborted else None
        return Outcome(task, series, error, chem.seed, result.steps, time.perf_counter() - t0)
    except Exception as exc:  # recorded, the sweep carries on
        log.warning("%s failed: %s", task.name, exc)
        return Outcome(task, None, f"{type(exc).__name__}: {exc}", None, 0, time.perf_counter() - t0)


def _execute_packed(args):
    return execute(*args)


def summarize(cfg: RunConfig, outcomes: list[Outcome]) -> tuple[list[EnsembleSummary], list[tuple]]:
    sw = cfg.sweep
    summaries = []
    for i, value in enumerate(sw.values):
        runs = [o.series for o in outcomes if o.task.index == i and o.ok]
        if runs:
            summaries.append(ensemble_average(runs, value))
    trends = []
    ordered = sorted(summaries, key=lambda s: s.parameter)
    if len(ordered) >= 3 and all(s.n_windows for s in ordered):
        xs = [s.parameter for s in ordered]
        for d in TREND_DESCRIPTORS:
            ys = [s.end_value(d) for s in ordered]
            try:
                trends.append((family(sw.parameter), sw.parameter, d, trend_classify(xs, ys, sw.eps)))
            except MetricsError as exc:
                log.warning("no trend for %s: %s", d, exc)
    return summaries, trends


def run_sweep(cfg: RunConfig, parallelism: int | None = None, *, backend: str | None = None) -> SweepResult:
    tasks = sweep_tasks(cfg)
    workers = parallelism or cfg.parallelism
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves submission order, so the merge is deterministic
            outcomes = list(pool.map(_execute_packed, [(cfg, t, backend) for t in tasks]))
    else:
        outcomes = [execute(cfg, t, backend) for t in tasks]
    summaries, trends = summarize(cfg, outcomes)
    return SweepResult(cfg.sweep.parameter, outcomes, summaries, trends)


def write_sweep(result: SweepResult, cfg: RunConfig, out) -> Path:
    out = Path(out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    for o in result.outcomes:
        if o.series is not None:
            t = o.task
            formats.write_descriptors(out / "runs" / f"{t.name}.csv", o.series, {
                "parameter": cfg.sweep.parameter, "value": repr(t.value),
                "chem_seed": o.chemistry_seed_used, "dyn_seed": t.dyn_seed})
    meta = {"parameter": cfg.sweep.parameter, "chem_seed": cfg.chemistry.seed, "dyn_seed": cfg.dynamics_seed}
    formats.write_ensemble(out / "ensemble.csv", result.summaries, meta)
    formats.write_trends(out / "trends.csv", result.trends, meta)
    doc = {
        "format": "catnet-sweep",
        "version": formats.VERSION,
        "config": cfg.to_dict(),
        "chem_seed": cfg.chemistry.seed,
        "dyn_seed": cfg.dynamics_seed,
        "runs": [{
            "name": o.task.name, "value": o.task.value, "chemistry": o.task.chem_index,
            "realization": o.task.realization, "chem_seed": o.task.chem_seed,
            "chem_seed_used": o.chemistry_seed_used, "dyn_seed": o.task.dyn_seed,
            "ok": o.ok, "error": o.error, "steps": o.steps,
        } for o in result.outcomes],
        "points": [_point(cfg, v) for v in cfg.sweep.values],
        "failure_fraction": result.failure_fraction,
    }
    with open(out / "sweep.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=True)
        fh.write("\n")
    return out


def _point(cfg: RunConfig, value) -> dict:
    point = with_parameter(cfg, cfg.sweep.parameter, value)
    return {"value": value, "k_out": point.kinetics.k_out, "influx_rate": point.kinetics.influx_rate,
            "influx_species": point.reactor.influx_sequences(point.chemistry.alpha),
            "initial_total_molecules": point.reactor.initial_total_molecules}


def trends_from_ensemble(path, parameter: str, eps: float = 0.05) -> list[tuple[str, str, str, str]]:
    """Trend rows recomputed from an ensemble CSV."""
    table = formats.read_ensemble(path)
    xs = sorted(table)
    rows = []
    if len(xs) < 3:
        return rows
    for d in TREND_DESCRIPTORS:
        ys = [table[x][d][-1] if table[x].get(d) else math.nan for x in xs]
        if any(math.isnan(y) for y in ys):
            continue
        rows.append((family(parameter), parameter, d, trend_classify(xs, ys, eps)))
    return rows
