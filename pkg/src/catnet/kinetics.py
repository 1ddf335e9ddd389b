"""Kinetic constants, molar-to-stochastic rate conversion and reaction channels.

The functions here form the object-level reference model. The engine keeps
its own array layout for speed, and its propensities are checked against
``channel_set`` + ``propensity`` in the test suite.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Hashable

from .chem_core import Chemistry

AVOGADRO = 6.02214076e23


@dataclass
class KineticParams:
    """Rate constants. Second-order constants are in M^-1 s^-1, first-order in s^-1."""

    k_cleav: float = 25.0
    k_comp: float = 50.0
    k_cond: float = 50.0
    k_decomp: float = 1e-6
    k_nrg: float = 50.0
    k_out: float = 0.01
    influx_rate: float = 10.0  # molecules / s
    ec_influx_rate: float = 0.0  # energy carriers / s
    ec_decay_rate: float = 1e-3
    deenergize_rate: float = 1e-3
    volume: float = 1e-15  # litres
    avogadro: float = AVOGADRO

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v < 0:
                raise ValueError(f"{f.name} must be >= 0, got {v}")
        if self.volume <= 0:
            raise ValueError("volume must be > 0")

    @property
    def residence_time(self) -> float:
        return float("inf") if self.k_out == 0 else 1.0 / self.k_out

    def to_dict(self) -> dict:
        return asdict(self)


def stochastic_rate(k_det: float, order: int, params: KineticParams) -> float:
    if order == 1:
        return float(k_det)
    if order == 2:
        return k_det / (params.avogadro * params.volume)
    raise ValueError(f"unsupported reaction order {order}")


# channel kinds
CLEAVAGE = "cleavage"
FORMATION = "formation"
DISSOCIATION = "dissociation"
CONDENSATION = "condensation"
ENERGIZATION = "energization"


@dataclass(frozen=True)
class ReactionChannel:
    """One stochastic channel.

    ``participants`` holds species ids: (substrate, catalyst) for cleavage,
    (left, catalyst) for complex formation and dissociation, (left, catalyst,
    right) for the final condensation step, and (species,) for energization.
    """

    kind: str
    order: int
    rate: float
    participants: tuple[int, ...]
    schema: Hashable = None
    gated: bool = False

    def __post_init__(self):
        expected = 1 if self.kind == DISSOCIATION else 2
        if self.order != expected:
            raise ValueError(f"{self.kind} channels are order {expected}, got {self.order}")


def propensity(channel: ReactionChannel, state) -> float:
    """Events per second for ``channel`` in a ``SimState``-like object."""
    n = state.counts
    e = state.energized_counts
    cx = state.complex_counts
    c = channel.rate
    p = channel.participants
    kind = channel.kind
    if kind in (CLEAVAGE, FORMATION):
        a, b = p
        if a == b:
            na = n.get(a, 0)
            return c * na * max(na - 1, 0)
        return c * n.get(a, 0) * n.get(b, 0)
    if kind == DISSOCIATION:
        left, cat = p
        return c * (cx.get((left, cat, False), 0) + cx.get((left, cat, True), 0))
    if kind == CONDENSATION:
        left, cat, right = p
        plain = cx.get((left, cat, False), 0)
        if not channel.gated:
            return c * plain * n.get(right, 0)
        charged = cx.get((left, cat, True), 0)
        return c * (charged * n.get(right, 0) + plain * e.get(right, 0))
    if kind == ENERGIZATION:
        (s,) = p
        return c * (n.get(s, 0) - e.get(s, 0)) * state.ec_count
    raise ValueError(f"unknown channel kind {kind!r}")


def channel_set(chemistry: Chemistry, state, energy_enabled: bool,
                params: KineticParams | None = None) -> list[ReactionChannel]:
    """All channels implied by the chemistry.

    Complex formation and dissociation are shared by every condensation with
    the same (left, catalyst) pair, since they create the same complex.
    """
    params = params or KineticParams()
    c_cleav = stochastic_rate(params.k_cleav, 2, params)
    c_comp = stochastic_rate(params.k_comp, 2, params)
    c_cond = stochastic_rate(params.k_cond, 2, params)
    c_decomp = stochastic_rate(params.k_decomp, 1, params)
    c_nrg = stochastic_rate(params.k_nrg, 2, params)
    out: list[ReactionChannel] = []
    pairs: set[tuple[int, int]] = set()
    for rx in chemistry.reactions:
        for sp in (rx.catalyst, *rx.substrates):
            if chemistry.species.get(sp.sequence) != sp:
                raise RuntimeError(f"schema {rx.label()} references an un-interned species")
        if rx.kind == "cleavage":
            out.append(ReactionChannel(CLEAVAGE, 2, c_cleav, (rx.substrate.id, rx.catalyst.id), rx))
            continue
        pair = (rx.left.id, rx.catalyst.id)
        if pair not in pairs:
            pairs.add(pair)
            out.append(ReactionChannel(FORMATION, 2, c_comp, pair))
            out.append(ReactionChannel(DISSOCIATION, 1, c_decomp, pair))
        out.append(ReactionChannel(CONDENSATION, 2, c_cond, pair + (rx.right.id,), rx, gated=energy_enabled))
    if energy_enabled:
        for s, count in sorted(state.counts.items()):
            if count > 0:
                out.append(ReactionChannel(ENERGIZATION, 2, c_nrg, (s,)))
    return out
