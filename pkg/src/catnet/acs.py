"""Catalysis graphs built from event logs, and autocatalytic set detection.

An edge ``c -> p`` means catalyst ``c`` produced ``p`` at least once in the
window. Autocatalytic sets are the strongly connected components with at
least one internal edge: components of two or more species, plus single
species that catalyse their own production.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sps

CLEAVAGE_EVENT = "cleavage"
CONDENSATION_EVENT = "condensation"


@dataclass
class CatalysisGraph:
    nodes: set[int] = field(default_factory=set)
    edges: dict[tuple[int, int], int] = field(default_factory=dict)

    def add(self, catalyst: int, product: int, weight: int = 1) -> None:
        self.nodes.add(catalyst)
        self.nodes.add(product)
        self.edges[(catalyst, product)] = self.edges.get((catalyst, product), 0) + weight

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges):
            adj[a].append(b)
        return adj

    def __len__(self):
        return len(self.nodes)


@dataclass
class AcsReport:
    members: frozenset[int]
    internal_edges: list[tuple[int, int, int]]
    min_edge_count: int
    member_molecule_count: int = 0

    @property
    def singleton(self) -> bool:
        return len(self.members) == 1

    def to_dict(self, window: int | None = None, sequences: Sequence[str] | None = None,
                threshold: int = 1) -> dict:
        bottleneck, _ = fragility(self, threshold)
        name = (lambda i: sequences[i]) if sequences is not None else (lambda i: i)
        doc = {
            "members": [name(i) for i in sorted(self.members)],
            "member_ids": sorted(self.members),
            "internal_edges": [[name(a), name(b), w] for a, b, w in self.internal_edges],
            "min_edge_count": self.min_edge_count,
            "bottleneck": bottleneck,
            "singleton": self.singleton,
            "member_molecule_count": self.member_molecule_count,
        }
        if window is not None:
            doc = {"window": window, **doc}
        return doc


def strongly_connected_components(vertices: Iterable[int], adj: Mapping[int, Iterable[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative so deep graphs do not hit the recursion limit.

    Components come out in reverse topological order.
    """
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(adj.get(root, ())))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def build_graph(event_log: Sequence, window_start: float, window_length: float) -> CatalysisGraph:
    """Graph of catalysed productions among events with ``start <= time < start + length``.

    ``event_log`` is time-ordered; only cleavage and completed condensation
    events contribute.
    """
    times = [ev.time for ev in event_log] if not hasattr(event_log, "times") else event_log.times
    lo = bisect.bisect_left(times, window_start)
    hi = bisect.bisect_left(times, window_start + window_length)
    g = CatalysisGraph()
    for ev in event_log[lo:hi]:
        if ev.kind == CLEAVAGE_EVENT or ev.kind == CONDENSATION_EVENT:
            for p in set(ev.products):
                g.add(ev.catalyst, p)
    return g


def find_acs(graph: CatalysisGraph, counts: Mapping[int, int] | None = None) -> list[AcsReport]:
    adj = graph.adjacency()
    reports = []
    for comp in strongly_connected_components(sorted(graph.nodes), adj):
        members = frozenset(comp)
        internal = sorted((a, b, w) for (a, b), w in graph.edges.items() if a in members and b in members)
        if not internal:
            continue
        molecules = sum(counts.get(m, 0) for m in members) if counts else 0
        reports.append(AcsReport(members, internal, min(w for _, _, w in internal), molecules))
    reports.sort(key=lambda rep: min(rep.members))
    return reports


def leading_eigenvalue(graph: CatalysisGraph, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest real eigenvalue (the Perron root) of the unweighted adjacency matrix.

    The root of a non-negative matrix is the largest root among its
    irreducible diagonal blocks, i.e. the strongly connected components.
    Components without an internal edge contribute 0, so an acyclic graph
    gives exactly 0. Each remaining block ``C`` is handled by power iteration
    on ``C + I``, which is primitive; the Collatz-Wielandt ratios
    ``min (Bx)_i / x_i <= rho <= max (Bx)_i / x_i`` bracket the root and the
    iteration stops once the bracket is narrower than ``tol``.
    """
    if not graph.nodes:
        raise ValueError("leading eigenvalue of an empty graph is undefined")
    adj = graph.adjacency()
    best = 0.0
    for comp in strongly_connected_components(sorted(graph.nodes), adj):
        members = set(comp)
        block = [(a, b) for (a, b) in graph.edges if a in members and b in members]
        if not block:
            continue
        best = max(best, _perron_root(comp, block, tol, max_iter))
    return best


def _perron_root(comp: list[int], edges: list[tuple[int, int]], tol: float, max_iter: int) -> float:
    n = len(comp)
    pos = {v: i for i, v in enumerate(sorted(comp))}
    rows = [pos[a] for a, _ in edges]
    cols = [pos[b] for _, b in edges]
    B = sps.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)) + sps.identity(n, format="csr")
    x = np.ones(n)
    lower, upper = 0.0, np.inf
    for _ in range(max_iter):
        y = B @ x
        ratios = y / x
        lower, upper = float(ratios.min()), float(ratios.max())
        if upper - lower < tol:
            break
        x = y / y.max()
    return 0.5 * (lower + upper) - 1.0


def fragility(report: AcsReport, threshold: int = 1) -> tuple[bool, int]:
    """``(bottleneck, min_edge_count)``; an ACS is bottlenecked when its rarest
    internal catalysis happened at most ``threshold`` times."""
    return report.min_edge_count <= threshold, report.min_edge_count


def write_reports(path, per_window: Iterable[tuple[int, list[AcsReport]]],
                  sequences: Sequence[str] | None = None, threshold: int = 1) -> None:
    doc = {
        "format": "catnet-acs",
        "version": 1,
        "bottleneck_threshold": threshold,
        "reports": [rep.to_dict(w, sequences, threshold) for w, reps in per_window for rep in reps],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
