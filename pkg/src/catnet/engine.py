"""Hybrid stochastic simulation of the open-flow reactor.

Reactions are sampled with Gillespie's direct method. In- and out-flux,
energy-carrier influx and decay, and de-energization are treated as
continuous processes integrated over each inter-event interval, with the
affected molecules drawn in proportion to their abundance. New species
produced by a reaction are interned on the spot and the chemistry is expanded
to cover them before the next step.

Internally every countable quantity (free copies of a species, energized
copies, substrate-catalyst complexes, the energy-carrier pool) occupies one
slot of an integer vector. Each channel's propensity is a small closed form
over at most four slots, so after an event only channels touching the
changed slots are recomputed.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from . import kinetics as kin
from .chem_core import Alphabet, Chemistry, Cleavage, Condensation, Species
from .kinetics import KineticParams, ReactionChannel

log = logging.getLogger(__name__)

# slot kinds
_SP, _EN, _CX, _EC = 0, 1, 2, 3
# channel kinds
_K_CLEAV, _K_FORM, _K_DISS, _K_COND, _K_NRG = range(5)
_KIND_NAMES = (kin.CLEAVAGE, kin.FORMATION, kin.DISSOCIATION, kin.CONDENSATION, kin.ENERGIZATION)


class SimulationError(RuntimeError):
    pass


class SpeciesOverflow(SimulationError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class ReactorConfig:
    initial_max_length: int = 4
    initial_total_molecules: int = 1000
    influx_max_length: int = 2
    influx_species: list[str] | None = None  # default: every sequence up to influx_max_length
    influx_weights: list[float] | None = None  # default: uniform
    t_end: float = 1000.0
    window: float = 10.0
    energy_enabled: bool = False
    initial_ec: int = 0
    equilibrium_molecules: int | None = None  # target for balanced residence-time sweeps
    max_species: int = 1_000_000
    allow_sparse_initial: bool = False
    flow_stride: float | None = None  # default min(window, 1 s)
    check_invariants: bool = False
    log_flows: bool = False

    def __post_init__(self):
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.window <= 0:
            raise ConfigError("window must be > 0")
        if self.initial_total_molecules < 0 or self.initial_ec < 0:
            raise ConfigError("initial populations must be >= 0")
        if self.influx_species is not None:
            too_long = [s for s in self.influx_species if len(s) > self.influx_max_length]
            if too_long:
                raise ConfigError(f"influx species longer than influx_max_length: {too_long}")
        if self.influx_weights is not None:
            n = len(self.influx_species) if self.influx_species is not None else None
            if n is not None and len(self.influx_weights) != n:
                raise ConfigError("influx_weights must match influx_species")
            if any(w < 0 for w in self.influx_weights) or sum(self.influx_weights) <= 0:
                raise ConfigError("influx_weights must be non-negative and not all zero")
        if self.flow_stride is not None and self.flow_stride <= 0:
            raise ConfigError("flow_stride must be > 0")

    def initial_sequences(self, alphabet: Alphabet) -> list[str]:
        return alphabet.sequences(self.initial_max_length)

    def influx_sequences(self, alphabet: Alphabet) -> list[str]:
        if self.influx_species is not None:
            return list(self.influx_species)
        return alphabet.sequences(self.influx_max_length)

    @property
    def n_windows(self) -> int:
        if self.t_end <= 0:
            return 0
        return max(1, math.ceil(self.t_end / self.window - 1e-9))


@dataclass
class SimState:
    time: float = 0.0
    counts: dict[int, int] = field(default_factory=dict)
    energized_counts: dict[int, int] = field(default_factory=dict)
    complex_counts: dict[tuple[int, int, bool], int] = field(default_factory=dict)
    ec_count: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)

    def total_molecules(self) -> int:
        return sum(self.counts.values()) + sum(self.complex_counts.values()) + self.ec_count


class Event(NamedTuple):
    time: float
    kind: str
    schema: str
    catalyst: int
    products: tuple[int, ...]
    new_species: bool


@dataclass
class Snapshot:
    window: int
    time: float
    counts: dict[int, int]
    energized: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class RunResult:
    events: list[Event]
    snapshots: list[Snapshot]
    chemistry: Chemistry
    state: SimState
    config: ReactorConfig
    params: KineticParams
    dynamics_seed: int | None
    initial_ids: frozenset[int]
    influx_ids: frozenset[int]
    aborted: str | None = None
    steps: int = 0
    invariant_violations: list[str] = field(default_factory=list)

    @property
    def chemistry_seed(self) -> int:
        return self.chemistry.seed

    def origin(self, species_id: int) -> str:
        if species_id in self.initial_ids:
            return "initial"
        if species_id in self.influx_ids:
            return "influx"
        return "new"


class Simulation:
    """A single realisation. Owns a private copy of the chemistry it extends."""

    def __init__(self, chemistry: Chemistry, config: ReactorConfig, params: KineticParams,
                 dynamics_seed: int | None = 0, *, state: SimState | None = None,
                 backend: str | None = None, copy_chemistry: bool = True):
        self.config = config
        self.params = params
        self.energy = bool(config.energy_enabled)
        self.kern = kernels.get_backend(backend)
        self.chem = chemistry.copy() if copy_chemistry else chemistry
        self.dynamics_seed = dynamics_seed
        if state is not None:
            # a supplied state carries its own generator; dynamics_seed is then unused
            self.rng = state.rng
        else:
            self.rng = np.random.default_rng(dynamics_seed)
        self._ubuf: list[float] = []
        self._upos = 0

        p = params
        self._c = {
            _K_CLEAV: kin.stochastic_rate(p.k_cleav, 2, p),
            _K_FORM: kin.stochastic_rate(p.k_comp, 2, p),
            _K_DISS: kin.stochastic_rate(p.k_decomp, 1, p),
            _K_COND: kin.stochastic_rate(p.k_cond, 2, p),
            _K_NRG: kin.stochastic_rate(p.k_nrg, 2, p),
        }

        cap = 256
        self._x = np.zeros(cap, dtype=np.int64)
        self._letters = np.zeros(cap, dtype=np.int64)
        self._skind: list[int] = []
        self._skey: list = []
        self._dep: list[list[int]] = []
        self._dep_arr: dict[int, np.ndarray] = {}
        self._sp_slot: list[int] = []
        self._en_slot: list[int] = []
        self._cx_slot: dict[tuple[int, int, bool], int] = {}
        self._mol = self.kern.SumTree(cap)
        self._nrg = self.kern.SumTree(cap)

        ccap = 1024
        self._rate = np.zeros(ccap, dtype=np.float64)
        self._mode = np.zeros(ccap, dtype=np.int8)
        self._ia = np.full(ccap, -1, dtype=np.int64)
        self._ib = np.full(ccap, -1, dtype=np.int64)
        self._id = np.full(ccap, -1, dtype=np.int64)
        self._ie = np.full(ccap, -1, dtype=np.int64)
        self._ckind: list[int] = []
        self._cref: list = []
        self._formation: dict[tuple[int, int], int] = {}
        self._prop = self.kern.SumTree(ccap)
        self._dirty: list[int] = []
        self._pending: list[int] = []

        self.time = 0.0
        self.events: list[Event] = []
        self.snapshots: list[Snapshot] = []
        self.steps = 0
        self.violations: list[str] = []

        self._ec = self._new_slot(_EC, 0, ("ec",))
        for sp in self.chem.species:
            self._add_species(sp)
        for rx in self.chem.reactions:
            self._add_schema(rx)

        influx = config.influx_sequences(self.chem.alphabet)
        missing = [s for s in influx if s not in self.chem.species]
        if missing:
            self._expand(missing)
        self._influx_ids = [self.chem.species.get(s).id for s in influx]
        weights = config.influx_weights or [1.0] * len(influx)
        self._influx_cum = list(np.cumsum(weights, dtype=np.float64))

        if state is not None:
            self._load_state(state)
        self._flush()

    # --- random numbers ---------------------------------------------------

    def _u(self) -> float:
        if self._upos >= len(self._ubuf):
            self._ubuf = self.rng.random(1024).tolist()
            self._upos = 0
        u = self._ubuf[self._upos]
        self._upos += 1
        return u

    def _round(self, mean: float) -> int:
        k = int(mean)
        if self._u() < mean - k:
            k += 1
        return k

    # --- slots and channels ----------------------------------------------

    def _new_slot(self, kind: int, letters: int, key) -> int:
        s = len(self._skind)
        if s >= self._x.size:
            n = 2 * self._x.size
            self._x = np.concatenate([self._x, np.zeros(n - self._x.size, dtype=np.int64)])
            self._letters = np.concatenate([self._letters, np.zeros(n - self._letters.size, dtype=np.int64)])
            self._mol.grow(n)
            self._nrg.grow(n)
        self._letters[s] = letters
        self._skind.append(kind)
        self._skey.append(key)
        self._dep.append([])
        return s

    def _add_channel(self, kind: int, mode: int, a: int, b: int = -1, d: int = -1, e: int = -1, ref=None) -> int:
        j = len(self._ckind)
        if j >= self._rate.size:
            n = 2 * self._rate.size
            self._rate = np.resize(self._rate, n)
            self._mode = np.resize(self._mode, n)
            for name in ("_ia", "_ib", "_id", "_ie"):
                old = getattr(self, name)
                setattr(self, name, np.concatenate([old, np.full(n - old.size, -1, dtype=np.int64)]))
            self._prop.grow(n)
        self._rate[j] = self._c[kind]
        self._mode[j] = mode
        self._ia[j], self._ib[j], self._id[j], self._ie[j] = a, b, d, e
        self._ckind.append(kind)
        self._cref.append(ref)
        for s in {a, b, d, e}:
            if s >= 0:
                self._dep[s].append(j)
                self._dep_arr.pop(s, None)
        self._pending.append(j)
        return j

    def _add_species(self, sp: Species) -> None:
        s = self._new_slot(_SP, sp.length, ("n", sp.id))
        self._sp_slot.append(s)
        if self.energy:
            e = self._new_slot(_EN, 0, ("e", sp.id))
            self._en_slot.append(e)
            self._add_channel(_K_NRG, 3, s, self._ec, e, ref=sp.id)
        else:
            self._en_slot.append(-1)

    def _complex(self, left: int, cat: int, flag: bool) -> int:
        key = (left, cat, flag)
        slot = self._cx_slot.get(key)
        if slot is None:
            letters = self.chem.species[left].length + self.chem.species[cat].length
            slot = self._new_slot(_CX, letters, key)
            self._cx_slot[key] = slot
        return slot

    def _add_schema(self, rx) -> None:
        sp = self._sp_slot
        if isinstance(rx, Cleavage):
            s, c = rx.substrate.id, rx.catalyst.id
            if s == c:
                self._add_channel(_K_CLEAV, 2, sp[s], ref=rx)
            else:
                self._add_channel(_K_CLEAV, 1, sp[s], sp[c], ref=rx)
            return
        left, c, right = rx.left.id, rx.catalyst.id, rx.right.id
        plain = self._complex(left, c, False)
        charged = self._complex(left, c, True) if self.energy else -1
        if (left, c) not in self._formation:
            if left == c:
                j = self._add_channel(_K_FORM, 2, sp[left], ref=(left, c))
            else:
                j = self._add_channel(_K_FORM, 1, sp[left], sp[c], ref=(left, c))
            self._formation[(left, c)] = j
            if self.energy:
                self._add_channel(_K_DISS, 5, plain, d=charged, ref=(left, c))
            else:
                self._add_channel(_K_DISS, 0, plain, ref=(left, c))
        if self.energy:
            self._add_channel(_K_COND, 4, charged, sp[right], plain, self._en_slot[right], ref=rx)
        else:
            self._add_channel(_K_COND, 1, plain, sp[right], ref=rx)

    def _expand(self, sequences: Sequence[str]) -> None:
        for seq in sequences:
            if seq in self.chem.species:
                continue
            if len(self.chem.species) >= self.config.max_species:
                raise SpeciesOverflow(f"species table reached max_species={self.config.max_species}")
            created = self.chem.expand([seq])
            self._add_species(self.chem.species.get(seq))
            for rx in created:
                self._add_schema(rx)

    def _intern(self, seq: str) -> tuple[int, bool]:
        sp = self.chem.species.get(seq)
        if sp is not None:
            return sp.id, False
        self._expand([seq])
        return self.chem.species.get(seq).id, True

    def _deps(self, slot: int) -> np.ndarray:
        arr = self._dep_arr.get(slot)
        if arr is None:
            arr = np.array(self._dep[slot], dtype=np.int64)
            self._dep_arr[slot] = arr
        return arr

    def _touch(self, slot: int) -> None:
        v = float(self._x[slot])
        if self._skind[slot] == _EN:
            self._nrg.set1(slot, v)
        else:
            self._mol.set1(slot, v)
        self._dirty.append(slot)

    def _flush(self) -> None:
        parts = []
        if self._dirty:
            for s in set(self._dirty):
                if self._dep[s]:
                    parts.append(self._deps(s))
            self._dirty.clear()
        if self._pending:
            parts.append(np.array(self._pending, dtype=np.int64))
            self._pending.clear()
        if not parts:
            return
        idx = parts[0] if len(parts) == 1 else np.concatenate(parts)
        self.kern.refresh(self._prop, idx, self._rate, self._mode, self._ia, self._ib,
                          self._id, self._ie, self._x)

    def _load_state(self, state: SimState) -> None:
        x = self._x
        for sid, n in state.counts.items():
            x[self._sp_slot[sid]] = n
            self._touch(self._sp_slot[sid])
        for sid, n in state.energized_counts.items():
            if n and not self.energy:
                raise ConfigError("energized counts given but energy is disabled")
            if n:
                x[self._en_slot[sid]] = n
                self._touch(self._en_slot[sid])
        for key, n in state.complex_counts.items():
            left, cat, flag = key
            if flag and not self.energy:
                raise ConfigError("energized complexes given but energy is disabled")
            slot = self._complex(left, cat, bool(flag))
            self._x[slot] = n
            self._touch(slot)
        self._x[self._ec] = state.ec_count
        self._touch(self._ec)
        self.time = state.time

    # --- state changes ----------------------------------------------------

    def _take(self, sid: int, prefer_plain: bool = False) -> bool:
        """Remove one free copy of ``sid``; return whether it was energized."""
        x = self._x
        slot = self._sp_slot[sid]
        energized = False
        if self.energy:
            eslot = self._en_slot[sid]
            e = x[eslot]
            if e > 0:
                if prefer_plain:
                    energized = e == x[slot]
                else:
                    energized = self._u() * x[slot] < e
                if energized:
                    x[eslot] -= 1
                    self._touch(eslot)
        x[slot] -= 1
        self._touch(slot)
        return bool(energized)

    def _put(self, sid: int, energized: bool = False) -> None:
        slot = self._sp_slot[sid]
        self._x[slot] += 1
        self._touch(slot)
        if energized:
            eslot = self._en_slot[sid]
            self._x[eslot] += 1
            self._touch(eslot)

    def _log(self, kind: str, label: str, catalyst: int, products: tuple, new: bool) -> None:
        self.events.append(Event(self.time, kind, label, catalyst, products, new))

    def _fire(self, j: int) -> list[int]:
        """Apply channel ``j``; return ids of species discovered by it."""
        kind = self._ckind[j]
        ref = self._cref[j]
        x = self._x
        new_ids: list[int] = []
        if kind == _K_CLEAV:
            self._take(ref.substrate.id)
            prods = []
            for seq in ref.products:
                pid, new = self._intern(seq)
                if new:
                    new_ids.append(pid)
                self._put(pid)
                prods.append(pid)
            self._log(kin.CLEAVAGE, ref.label(), ref.catalyst.id, tuple(prods), bool(new_ids))
        elif kind == _K_FORM:
            left, cat = ref
            self._take(cat, prefer_plain=True)
            flag = self._take(left)
            slot = self._complex(left, cat, flag)
            self._x[slot] += 1
            self._touch(slot)
            self._log(kin.FORMATION, self._pair_label("form", left, cat), cat, (), False)
        elif kind == _K_DISS:
            left, cat = ref
            plain = self._cx_slot[(left, cat, False)]
            charged = self._cx_slot.get((left, cat, True), -1)
            n_plain = x[plain]
            n_charged = x[charged] if charged >= 0 else 0
            flag = n_charged > 0 and self._u() * (n_plain + n_charged) >= n_plain
            slot = charged if flag else plain
            x[slot] -= 1
            self._touch(slot)
            self._put(left, energized=flag)
            self._put(cat)
            self._log(kin.DISSOCIATION, self._pair_label("diss", left, cat), cat, (), False)
        elif kind == _K_COND:
            left, cat, right = ref.left.id, ref.catalyst.id, ref.right.id
            plain = self._cx_slot[(left, cat, False)]
            charged_product = False
            if not self.energy:
                x[plain] -= 1
                self._touch(plain)
                self._take(right)
            else:
                charged = self._cx_slot[(left, cat, True)]
                w_charged = int(x[charged]) * int(x[self._sp_slot[right]])
                w_plain = int(x[plain]) * int(x[self._en_slot[right]])
                if self._u() * (w_charged + w_plain) < w_charged:
                    # the complex's energization is spent; an energized right
                    # copy passes its own charge on to the product
                    x[charged] -= 1
                    self._touch(charged)
                    charged_product = self._take(right)
                else:
                    x[plain] -= 1
                    self._touch(plain)
                    eslot = self._en_slot[right]
                    x[eslot] -= 1
                    self._touch(eslot)
                    x[self._sp_slot[right]] -= 1
                    self._touch(self._sp_slot[right])
            pid, new = self._intern(ref.product)
            if new:
                new_ids.append(pid)
            self._put(pid, energized=charged_product)
            self._put(cat)
            self._log(kin.CONDENSATION, ref.label(), cat, (pid,), new)
        elif kind == _K_NRG:
            sid = ref
            eslot = self._en_slot[sid]
            x[eslot] += 1
            self._touch(eslot)
            x[self._ec] -= 1
            self._touch(self._ec)
            self._log(kin.ENERGIZATION, "", -1, (sid,), False)
        else:  # pragma: no cover
            raise SimulationError(f"unknown channel kind {kind}")
        return new_ids

    def _pair_label(self, prefix: str, left: int, cat: int) -> str:
        sp = self.chem.species
        return f"{prefix}:{sp[left].sequence}|{sp[cat].sequence}"

    def _remove_slot_copy(self, slot: int) -> int:
        kind = self._skind[slot]
        if kind == _SP:
            sid = self._skey[slot][1]
            self._take(sid)
            return sid
        self._x[slot] -= 1
        self._touch(slot)
        return -1

    def _flows(self, dt: float) -> None:
        if dt <= 0:
            return
        if self._dirty or self._pending:
            self._flush()
        p = self.params
        x = self._x
        removed: list[int] = []
        added: list[int] = []
        if p.k_out > 0:
            total = self._mol.total
            k = self._round(total * -math.expm1(-p.k_out * dt))
            for _ in range(k):
                total = self._mol.total
                if total <= 0:
                    break
                sid = self._remove_slot_copy(self._mol.select(self._u() * total))
                if sid >= 0:
                    removed.append(sid)
        if self.energy:
            ec = int(x[self._ec])
            if ec and p.ec_decay_rate > 0:
                k = self._round(ec * -math.expm1(-p.ec_decay_rate * dt))
                if k:
                    x[self._ec] -= k
                    self._touch(self._ec)
            if p.deenergize_rate > 0 and self._nrg.total > 0:
                k = self._round(self._nrg.total * -math.expm1(-p.deenergize_rate * dt))
                for _ in range(k):
                    total = self._nrg.total
                    if total <= 0:
                        break
                    slot = self._nrg.select(self._u() * total)
                    x[slot] -= 1
                    self._touch(slot)
            if p.ec_influx_rate > 0:
                k = self._round(p.ec_influx_rate * dt)
                if k:
                    x[self._ec] += k
                    self._touch(self._ec)
        if p.influx_rate > 0 and self._influx_ids:
            k = self._round(p.influx_rate * dt)
            cum = self._influx_cum
            for _ in range(k):
                i = bisect.bisect_right(cum, self._u() * cum[-1])
                sid = self._influx_ids[min(i, len(cum) - 1)]
                self._put(sid)
                added.append(sid)
        if self.config.log_flows:
            if removed:
                self._log("outflux", "", -1, tuple(removed), False)
            if added:
                self._log("influx", "", -1, tuple(added), False)

    # --- observation ------------------------------------------------------

    def letters(self) -> int:
        n = len(self._skind)
        return int(self._x[:n] @ self._letters[:n])

    def _check(self, before: int, what: str) -> None:
        after = self.letters()
        if after != before:
            self.violations.append(f"t={self.time!r} {what}: letters {before} -> {after}")
        n = len(self._skind)
        if (self._x[:n] < 0).any():
            self.violations.append(f"t={self.time!r} {what}: negative count")
        if self.energy:
            sp = np.array(self._sp_slot)
            en = np.array(self._en_slot)
            if (self._x[en] > self._x[sp]).any():
                self.violations.append(f"t={self.time!r} {what}: energized copies exceed counts")

    def propensities(self) -> np.ndarray:
        """Current propensity of every channel, as stored in the sum tree."""
        return self._prop.leaves(len(self._ckind))

    def total_propensity(self) -> float:
        return self._prop.total

    def channel_key(self, j: int) -> tuple:
        kind = self._ckind[j]
        ref = self._cref[j]
        if kind in (_K_CLEAV, _K_COND):
            ids = ((ref.substrate.id, ref.catalyst.id) if kind == _K_CLEAV
                   else (ref.left.id, ref.catalyst.id, ref.right.id))
        elif kind == _K_NRG:
            ids = (ref,)
        else:
            ids = tuple(ref)
        return (_KIND_NAMES[kind], ids)

    def state(self) -> SimState:
        x = self._x
        counts, energized, complexes = {}, {}, {}
        for sid, slot in enumerate(self._sp_slot):
            if x[slot]:
                counts[sid] = int(x[slot])
            e = self._en_slot[sid]
            if e >= 0 and x[e]:
                energized[sid] = int(x[e])
        for key, slot in self._cx_slot.items():
            if x[slot]:
                complexes[key] = int(x[slot])
        return SimState(self.time, counts, energized, complexes, int(x[self._ec]), self.rng)

    def _snapshot(self, window: int) -> None:
        x = self._x
        sp = np.asarray(self._sp_slot, dtype=np.int64)
        counts = x[sp]
        nz = np.flatnonzero(counts)
        snap_counts = dict(zip(nz.tolist(), counts[nz].tolist()))
        energized = {}
        if self.energy:
            en = x[np.asarray(self._en_slot, dtype=np.int64)]
            nz = np.flatnonzero(en)
            energized = dict(zip(nz.tolist(), en[nz].tolist()))
        self.snapshots.append(Snapshot(window, self.time, snap_counts, energized))

    # --- main loop --------------------------------------------------------

    def step(self, horizon: float):
        """Advance to the next reaction or to ``horizon``, whichever is first.

        Returns the fired channel index, or ``None`` if no reaction occurred.
        Truncating at the horizon is exact because waiting times are
        memoryless.
        """
        a0 = self._prop.total
        tau = math.inf
        if a0 > 0:
            tau = -math.log(1.0 - self._u()) / a0
        if self.time + tau < horizon:
            j = self._prop.select(self._u() * a0)
            self.time += tau
            if self.config.check_invariants:
                before = self.letters()
                self._fire(j)
                self._check(before, _KIND_NAMES[self._ckind[j]])
            else:
                self._fire(j)
            self._flush()
            self._flows(tau)
            self._flush()
            self.steps += 1
            return j
        dt = horizon - self.time
        self.time = horizon
        self._flows(dt)
        self._flush()
        return None

    def run(self) -> None:
        cfg = self.config
        stride = cfg.flow_stride or min(cfg.window, 1.0)
        n_windows = cfg.n_windows
        w = len(self.snapshots)
        boundary = min((w + 1) * cfg.window, cfg.t_end)
        while w < n_windows:
            self.step(min(self.time + stride, boundary))
            if self.time >= boundary:
                self._snapshot(w)
                w += 1
                boundary = min((w + 1) * cfg.window, cfg.t_end)


# --- module-level operations -------------------------------------------------

def build_initial_state(config: ReactorConfig, chemistry: Chemistry,
                        rng: np.random.Generator | int | None = None) -> SimState:
    """Uniform initial population over every sequence up to ``initial_max_length``.

    Missing initial species are added to ``chemistry`` in place.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    seqs = config.initial_sequences(chemistry.alphabet)
    chemistry.expand([s for s in seqs if s not in chemistry.species])
    total = config.initial_total_molecules
    state = SimState(0.0, {}, {}, {}, config.initial_ec, rng)
    if total == 0 or not seqs:
        return state
    if total < len(seqs) and not config.allow_sparse_initial:
        raise ConfigError(f"{total} initial molecules cannot cover {len(seqs)} species")
    share, rem = divmod(total, len(seqs))
    extra = set(rng.choice(len(seqs), size=rem, replace=False).tolist()) if rem else set()
    for i, seq in enumerate(seqs):
        n = share + (1 if i in extra else 0)
        if n:
            state.counts[chemistry.species.get(seq).id] = n
    return state


def ssa_step(state: SimState, channels: Sequence[ReactionChannel]):
    """One direct-method draw: ``(dt, channel)``, or ``None`` when quiescent."""
    props = np.array([kin.propensity(ch, state) for ch in channels], dtype=np.float64)
    a0 = float(props.sum()) if props.size else 0.0
    if a0 <= 0:
        return None
    dt = -math.log(1.0 - state.rng.random()) / a0
    cum = np.cumsum(props)
    j = int(np.searchsorted(cum, state.rng.random() * a0, side="right"))
    j = min(j, len(channels) - 1)
    while props[j] <= 0:
        j -= 1
    return dt, channels[j]


def energization_gate(channel: ReactionChannel, state: SimState) -> bool:
    """Whether an endoergonic step may fire: the complexed substrate or the
    free right substrate must carry energy. Only final condensations are gated."""
    if not channel.gated or channel.kind != kin.CONDENSATION:
        return True
    left, cat, right = channel.participants
    return state.complex_counts.get((left, cat, True), 0) > 0 or state.energized_counts.get(right, 0) > 0


def _sim_from_state(state, chemistry, config, params, backend=None) -> Simulation:
    return Simulation(chemistry, config, params, state=replace(state, counts=dict(state.counts),
                      energized_counts=dict(state.energized_counts),
                      complex_counts=dict(state.complex_counts)),
                      backend=backend)


def fire(state: SimState, channel: ReactionChannel, chemistry: Chemistry,
         config: ReactorConfig | None = None, params: KineticParams | None = None):
    """Apply one reaction; returns ``(new_state, newly discovered species)``.

    ``chemistry`` is left untouched; the returned species carry ids in its
    expanded copy, which continues the same id sequence.
    """
    config = config or ReactorConfig(energy_enabled=channel.gated, influx_species=[])
    if config.influx_species is None:
        config = replace(config, influx_species=[])
    params = params or KineticParams()
    sim = _sim_from_state(state, chemistry, config, params)
    want = (channel.kind, tuple(channel.participants))
    for j in range(len(sim._ckind)):
        if sim.channel_key(j) == want:
            break
    else:
        raise SimulationError(f"channel {want} not present in the chemistry")
    if sim.propensities()[j] <= 0:
        raise SimulationError(f"channel {want} fired with a zero-count participant")
    sim.time = state.time
    new_ids = sim._fire(j)
    return sim.state(), [sim.chem.species[i] for i in new_ids]


def apply_flows(state: SimState, dt: float, config: ReactorConfig, params: KineticParams,
                chemistry: Chemistry) -> SimState:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    sim = _sim_from_state(state, chemistry, config, params)
    sim._flows(dt)
    return sim.state()


def run(chemistry: Chemistry, config: ReactorConfig, params: KineticParams,
        dynamics_seed: int, *, backend: str | None = None) -> RunResult:
    chem = chemistry.copy()
    influx = config.influx_sequences(chem.alphabet)
    chem.expand([s for s in influx if s not in chem.species])
    rng = np.random.default_rng(dynamics_seed)
    state = build_initial_state(config, chem, rng)
    initial_ids = frozenset(chem.species.get(s).id for s in config.initial_sequences(chem.alphabet))
    influx_ids = frozenset(chem.species.get(s).id for s in influx)
    sim = Simulation(chem, config, params, dynamics_seed, state=state, backend=backend, copy_chemistry=False)
    aborted = None
    try:
        sim.run()
    except SpeciesOverflow as exc:
        aborted = "species-overflow"
        log.warning("run aborted at t=%.6g: %s", sim.time, exc)
    return RunResult(sim.events, sim.snapshots, sim.chem, sim.state(), config, params, dynamics_seed,
                     initial_ids, influx_ids, aborted, sim.steps, sim.violations)
