"""Per-window dynamics descriptors, ensemble averages and trend calls."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import acs

DESCRIPTORS = ("n_acs", "species_in_acs", "molecules_in_acs", "new_species_count", "new_molecules_count")
TREND_SYMBOLS = {"flat": "~", "up": "↑", "down": "↓", "peak": "↗↘"}


class MetricsError(ValueError):
    pass


@dataclass
class DescriptorSeries:
    n_acs: list[int] = field(default_factory=list)
    species_in_acs: list[int] = field(default_factory=list)
    molecules_in_acs: list[int] = field(default_factory=list)
    new_species_count: list[int] = field(default_factory=list)
    new_molecules_count: list[int] = field(default_factory=list)
    reports: list[list[acs.AcsReport]] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.n_acs)

    def rows(self):
        for w in range(len(self)):
            yield (w,) + tuple(getattr(self, d)[w] for d in DESCRIPTORS)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, d) for d in DESCRIPTORS], dtype=np.float64).reshape(len(DESCRIPTORS), -1)


def compute_descriptors(event_log: Sequence, snapshots: Sequence, window: float, n_windows: int,
                        old_species: Iterable[int]) -> DescriptorSeries:
    """Descriptors for each window of one run.

    ``old_species`` are the ids of the initial set and the influx; every
    other species is new. Molecule counts come from the snapshot taken at
    each window's end.
    """
    by_window = {s.window: s for s in snapshots}
    missing = [w for w in range(n_windows) if w not in by_window]
    if missing:
        raise MetricsError(f"snapshots missing for windows {missing[:5]}")
    old = set(old_species)
    out = DescriptorSeries()
    for w in range(n_windows):
        snap = by_window[w]
        reports = acs.find_acs(acs.build_graph(event_log, w * window, window), snap.counts)
        members = set().union(*(r.members for r in reports)) if reports else set()
        new = [n for sid, n in snap.counts.items() if sid not in old and n > 0]
        out.n_acs.append(len(reports))
        out.species_in_acs.append(len(members))
        out.molecules_in_acs.append(sum(snap.counts.get(m, 0) for m in members))
        out.new_species_count.append(len(new))
        out.new_molecules_count.append(sum(new))
        out.reports.append(reports)
    return out


def run_descriptors(result) -> DescriptorSeries:
    cfg = result.config
    return compute_descriptors(result.events, result.snapshots, cfg.window, cfg.n_windows,
                               result.initial_ids | result.influx_ids)


@dataclass
class EnsembleSummary:
    parameter: float | None
    n_runs: int
    mean: dict[str, np.ndarray]
    se: dict[str, np.ndarray]
    p_acs: np.ndarray  # fraction of runs with an ACS in any window up to w
    p_acs_window: np.ndarray  # fraction of runs with an ACS in window w

    @property
    def n_windows(self) -> int:
        return len(self.p_acs)

    def end_value(self, descriptor: str) -> float:
        if descriptor == "p_acs":
            return float(self.p_acs[-1])
        return float(self.mean[descriptor][-1])


def ensemble_average(runs: Sequence[DescriptorSeries], parameter: float | None = None) -> EnsembleSummary:
    """Mean and standard error over runs; SE is NaN for a single run."""
    if not runs:
        raise MetricsError("need at least one run")
    lengths = {len(r) for r in runs}
    if len(lengths) != 1:
        raise MetricsError(f"runs have different window grids: {sorted(lengths)}")
    data = np.stack([r.as_array() for r in runs])  # run x descriptor x window
    n = data.shape[0]
    mean = data.mean(axis=0)
    if n > 1:
        se = data.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        se = np.full_like(mean, np.nan)
    present = data[:, DESCRIPTORS.index("n_acs"), :] > 0
    p_cum = np.maximum.accumulate(present, axis=1).mean(axis=0)
    return EnsembleSummary(
        parameter, n,
        {d: mean[i] for i, d in enumerate(DESCRIPTORS)},
        {d: se[i] for i, d in enumerate(DESCRIPTORS)},
        p_cum, present.mean(axis=0),
    )


def trend_classify(param_values: Sequence[float], end_means: Sequence[float],
                   eps: float = 0.05, scale: float | None = None) -> str:
    """Call a response ``flat``, ``up``, ``down`` or ``peak``.

    Differences smaller than ``eps * scale`` are noise; ``scale`` defaults
    to the largest magnitude among ``end_means``. A response with an
    interior maximum clearing both endpoints is a peak; otherwise the net
    change decides.
    """
    x = np.asarray(param_values, dtype=np.float64)
    y = np.asarray(end_means, dtype=np.float64)
    if x.size < 3 or x.size != y.size:
        raise MetricsError("trend classification needs >= 3 matching points")
    if np.any(np.diff(x) <= 0):
        raise MetricsError("parameter values must be strictly increasing")
    if scale is None:
        scale = float(np.max(np.abs(y)))
    tol = eps * scale
    if y.max() - y.min() < tol:
        return "flat"
    k = int(np.argmax(y))
    if 0 < k < y.size - 1 and y[k] - y[0] > tol and y[k] - y[-1] > tol:
        return "peak"
    net = y[-1] - y[0]
    if net > tol:
        return "up"
    if net < -tol:
        return "down"
    return "flat"


def concentration_departure(report: acs.AcsReport, snapshot_counts: Mapping[int, int],
                            new_species: Iterable[int]) -> float:
    """Mean member count over mean count of the new species outside the ACS.

    Returns NaN when no non-member new species is present.
    """
    if not report.members:
        raise MetricsError("empty autocatalytic set")
    members = [snapshot_counts.get(m, 0) for m in report.members]
    others = [snapshot_counts[s] for s in new_species
              if s not in report.members and snapshot_counts.get(s, 0) > 0]
    if not others:
        return float("nan")
    return float(np.mean(members) / np.mean(others))


def balanced_influx(target_total_molecules: float, k_out: float) -> float:
    """Influx that holds the flows-only fixed point ``influx / k_out`` at the target."""
    if k_out <= 0:
        raise MetricsError("k_out must be > 0 for a balanced influx")
    return target_total_molecules * k_out
