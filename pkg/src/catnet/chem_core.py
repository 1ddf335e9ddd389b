"""Species interning and the random-but-reproducible reaction network.

A chemistry assigns catalysts to conceivable reactions. Over a species set
of size N the conceivable reactions are every (substrate, cut point)
cleavage plus every ordered pair condensation, ``sum(L_i - 1) + N**2`` in
all. Each (template, eligible catalyst) pair is included independently with
probability ``r``; the Bernoulli draw is a keyed hash of the pair's
canonical sequence key and the chemistry seed. Because no sequential RNG
stream is involved, expanding the network as new species appear gives the
same result whatever the order of discovery.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

FORMAT_NAME = "catnet-chemistry"
FORMAT_VERSION = 1

_TAG_CLEAV = 0x636C6561765F5F31
_TAG_COND = 0x636F6E645F5F5F32
_TAG_SEED = 0x736565645F5F5F33
_MASK64 = (1 << 64) - 1


class InvalidSequenceError(ValueError):
    pass


class ChemistryError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    letters: tuple[str, ...] = ("A", "B")

    def __post_init__(self):
        letters = tuple(self.letters)
        object.__setattr__(self, "letters", letters)
        if len(letters) < 2:
            raise ValueError("an alphabet needs at least 2 letters")
        if len(set(letters)) != len(letters):
            raise ValueError(f"duplicate letters in alphabet {letters}")
        if any(len(c) != 1 for c in letters):
            raise ValueError("alphabet letters must be single characters")

    def sequences(self, max_length: int, min_length: int = 1) -> list[str]:
        """All sequences with lengths in ``[min_length, max_length]``, shortest first."""
        out = []
        for n in range(max(min_length, 1), max_length + 1):
            out.extend("".join(p) for p in itertools.product(self.letters, repeat=n))
        return out


@dataclass(frozen=True)
class Species:
    id: int
    sequence: str

    @property
    def length(self) -> int:
        return len(self.sequence)

    def __str__(self):
        return self.sequence


def sequence_hash(sequence: str) -> int:
    return int.from_bytes(hashlib.blake2b(sequence.encode(), digest_size=8).digest(), "little")


class SpeciesTable:
    """Injective map between sequences and integer ids; ids are never reused."""

    def __init__(self, alphabet: Alphabet | None = None):
        self.alphabet = alphabet or Alphabet()
        self._letters = frozenset(self.alphabet.letters)
        self._by_seq: dict[str, Species] = {}
        self._species: list[Species] = []
        self._hashes: list[int] = []

    def __len__(self):
        return len(self._species)

    def __iter__(self):
        return iter(self._species)

    def __contains__(self, sequence: str) -> bool:
        return sequence in self._by_seq

    def __getitem__(self, species_id: int) -> Species:
        return self._species[species_id]

    def get(self, sequence: str) -> Species | None:
        return self._by_seq.get(sequence)

    def intern(self, sequence: str) -> Species:
        sp = self._by_seq.get(sequence)
        if sp is not None:
            return sp
        if not sequence or not set(sequence) <= self._letters:
            raise InvalidSequenceError(
                f"sequence {sequence!r} is empty or uses letters outside {self.alphabet.letters}")
        sp = Species(len(self._species), sequence)
        self._species.append(sp)
        self._by_seq[sequence] = sp
        self._hashes.append(sequence_hash(sequence))
        return sp

    def hashes(self, ids: Sequence[int]) -> np.ndarray:
        return np.array([self._hashes[i] for i in ids], dtype=np.uint64)

    def copy(self) -> "SpeciesTable":
        other = SpeciesTable(self.alphabet)
        other._by_seq = dict(self._by_seq)
        other._species = list(self._species)
        other._hashes = list(self._hashes)
        return other


@dataclass(frozen=True)
class Cleavage:
    substrate: Species
    cut_point: int
    catalyst: Species

    kind = "cleavage"

    @property
    def products(self) -> tuple[str, str]:
        s = self.substrate.sequence
        return s[:self.cut_point], s[self.cut_point:]

    @property
    def substrates(self) -> tuple[Species]:
        return (self.substrate,)

    def template_key(self) -> tuple:
        return ("cleavage", self.substrate.sequence, self.cut_point)

    def key(self) -> tuple:
        return self.template_key() + (self.catalyst.sequence,)

    def label(self) -> str:
        return f"cleav:{self.substrate.sequence}|{self.cut_point}|{self.catalyst.sequence}"


@dataclass(frozen=True)
class Condensation:
    left: Species
    right: Species
    catalyst: Species

    kind = "condensation"

    @property
    def product(self) -> str:
        return self.left.sequence + self.right.sequence

    @property
    def products(self) -> tuple[str]:
        return (self.product,)

    @property
    def substrates(self) -> tuple[Species, Species]:
        return (self.left, self.right)

    def template_key(self) -> tuple:
        return ("condensation", self.left.sequence, self.right.sequence)

    def key(self) -> tuple:
        return self.template_key() + (self.catalyst.sequence,)

    def label(self) -> str:
        return f"cond:{self.left.sequence}|{self.right.sequence}|{self.catalyst.sequence}"


ReactionSchema = Union[Cleavage, Condensation]


def _u64(v) -> np.ndarray:
    return np.asarray(v, dtype=np.uint64)


def _cleavage_hashes(species_hashes: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    mix = kernels._pykernels.splitmix64
    return mix(species_hashes ^ mix(_u64(cuts) ^ np.uint64(_TAG_CLEAV)))


def _condensation_hashes(left_hashes: np.ndarray, right_hashes: np.ndarray) -> np.ndarray:
    mix = kernels._pykernels.splitmix64
    return mix(left_hashes ^ mix(right_hashes ^ np.uint64(_TAG_COND)))


def _seed_key(seed: int) -> int:
    return int(kernels._pykernels.splitmix64(np.array([(seed ^ _TAG_SEED) & _MASK64], dtype=np.uint64))[0])


def _threshold(r: float) -> int:
    return int(r * float(1 << 53))


class Chemistry:
    """The catalysis assignment over a growing set of known species.

    ``reactions`` only ever grows; every schema draws its fate from a pure
    function of ``(seed, template, catalyst)``.
    """

    def __init__(self, r: float, seed: int, min_catalyst_length: int = 3,
                 alphabet: Alphabet | None = None, *, backend: str | None = None):
        if not 0.0 <= r <= 1.0:
            raise ChemistryError(f"catalysis probability r={r} outside [0, 1]")
        if min_catalyst_length < 1:
            raise ChemistryError("min_catalyst_length must be >= 1")
        self.r = float(r)
        self.seed = int(seed)
        self.min_catalyst_length = int(min_catalyst_length)
        self.species = SpeciesTable(alphabet)
        self.reactions: list[ReactionSchema] = []
        self.meta: dict = {}
        self._backend = backend
        self._seed_key = _seed_key(self.seed)
        self._thr = _threshold(self.r)

    @property
    def alphabet(self) -> Alphabet:
        return self.species.alphabet

    @property
    def known_species(self) -> list[Species]:
        return list(self.species)

    def is_catalyst(self, sp: Species) -> bool:
        return sp.length >= self.min_catalyst_length

    def copy(self) -> "Chemistry":
        other = Chemistry.__new__(Chemistry)
        other.__dict__.update(self.__dict__)
        other.species = self.species.copy()
        other.reactions = list(self.reactions)
        other.meta = dict(self.meta)
        return other

    def reaction_keys(self) -> frozenset:
        return frozenset(rx.key() for rx in self.reactions)

    def same_network(self, other: "Chemistry") -> bool:
        """Equality by sequences, independent of id assignment order."""
        return (
            {s.sequence for s in self.species} == {s.sequence for s in other.species}
            and self.reaction_keys() == other.reaction_keys()
            and (self.r, self.seed, self.min_catalyst_length) == (other.r, other.seed, other.min_catalyst_length)
        )

    # --- assignment -------------------------------------------------------

    def _draw(self, template_hashes: np.ndarray, catalyst_hashes: np.ndarray):
        kern = kernels.get_backend(self._backend)
        return kern.draw_pairs(template_hashes, catalyst_hashes, self._seed_key, self._thr)

    def _templates(self, ids: list[int], hashes: np.ndarray):
        """Cleavage (species, cut) and condensation (left, right) templates over ``ids``."""
        lengths = np.array([self.species[i].length for i in ids], dtype=np.int64)
        reps = np.maximum(lengths - 1, 0)
        cl_pos = np.repeat(np.arange(len(ids)), reps)
        cl_cut = np.concatenate([np.arange(1, n + 1) for n in reps]) if len(ids) else np.empty(0, np.int64)
        cl_cut = cl_cut.astype(np.int64)
        th_cl = _cleavage_hashes(hashes[cl_pos], cl_cut)
        return cl_pos, cl_cut, th_cl

    def _add_pairs_cleavage(self, subs: list[Species], cuts, cats: list[Species], th, ch) -> list[ReactionSchema]:
        ti, ci = self._draw(th, ch)
        return [Cleavage(subs[t], int(cuts[t]), cats[c]) for t, c in zip(ti.tolist(), ci.tolist())]

    def _add_pairs_condensation(self, lefts, rights, cats, th, ch) -> list[ReactionSchema]:
        ti, ci = self._draw(th, ch)
        return [Condensation(lefts[t], rights[t], cats[c]) for t, c in zip(ti.tolist(), ci.tolist())]

    def _assign_all(self, ids: list[int]) -> list[ReactionSchema]:
        """Draw every (template, catalyst) pair over ``ids`` from scratch."""
        sp = [self.species[i] for i in ids]
        h = self.species.hashes(ids)
        cats = [s for s in sp if self.is_catalyst(s)]
        ch = self.species.hashes([s.id for s in cats])
        new: list[ReactionSchema] = []
        cl_pos, cl_cut, th_cl = self._templates(ids, h)
        new += self._add_pairs_cleavage([sp[p] for p in cl_pos], cl_cut, cats, th_cl, ch)
        n = len(ids)
        if n:
            li, ri = np.divmod(np.arange(n * n), n)
            th = _condensation_hashes(h[li], h[ri])
            new += self._add_pairs_condensation([sp[i] for i in li], [sp[j] for j in ri], cats, th, ch)
        return new

    def _assign_new(self, s: Species, old_ids: list[int]) -> list[ReactionSchema]:
        """Pairs that become drawable when ``s`` joins ``old_ids``."""
        old = [self.species[i] for i in old_ids]
        h_old = self.species.hashes(old_ids)
        h_s = self.species.hashes([s.id])
        all_sp = old + [s]
        cats = [x for x in all_sp if self.is_catalyst(x)]
        ch = self.species.hashes([x.id for x in cats])
        new: list[ReactionSchema] = []
        # templates involving s, against every catalyst
        cuts = np.arange(1, s.length, dtype=np.int64)
        th = _cleavage_hashes(np.repeat(h_s, cuts.size), cuts)
        new += self._add_pairs_cleavage([s] * cuts.size, cuts, cats, th, ch)
        h_all = np.concatenate([h_old, h_s])
        lefts = [s] * len(all_sp) + old
        rights = all_sp + [s] * len(old)
        th = _condensation_hashes(
            np.concatenate([np.repeat(h_s, len(all_sp)), h_old]),
            np.concatenate([h_all, np.repeat(h_s, len(old))]),
        )
        new += self._add_pairs_condensation(lefts, rights, cats, th, ch)
        # old templates, against s as catalyst
        if self.is_catalyst(s) and old:
            cl_pos, cl_cut, th_cl = self._templates(old_ids, h_old)
            new += self._add_pairs_cleavage([old[p] for p in cl_pos], cl_cut, [s], th_cl, h_s)
            n = len(old)
            li, ri = np.divmod(np.arange(n * n), n)
            th = _condensation_hashes(h_old[li], h_old[ri])
            ti, _ = self._draw(th, h_s)
            new += [Condensation(old[li[t]], old[ri[t]], s) for t in ti.tolist()]
        return new

    def expand(self, sequences: Iterable[str]) -> list[ReactionSchema]:
        """Add species in place; return the schemas that were created."""
        created: list[ReactionSchema] = []
        for seq in sequences:
            if seq in self.species:
                continue
            old_ids = list(range(len(self.species)))
            s = self.species.intern(seq)
            found = self._assign_new(s, old_ids)
            self.reactions.extend(found)
            created.extend(found)
        return created

    # --- views ------------------------------------------------------------

    def catalysis_edges(self, restrict: set[int] | None = None) -> list[tuple[int, int]]:
        """(catalyst id, product id) for schemas whose participants lie in ``restrict``."""
        edges = []
        for rx in self.reactions:
            ids = [rx.catalyst.id] + [x.id for x in rx.substrates]
            products = [self.species.get(p) for p in rx.products]
            if restrict is not None and not set(ids) <= restrict:
                continue
            prod_ids = [p.id for p in products
                        if p is not None and (restrict is None or p.id in restrict)]
            edges.extend((rx.catalyst.id, p) for p in prod_ids)
        return edges

    def summary(self) -> str:
        n_cl = sum(1 for rx in self.reactions if rx.kind == "cleavage")
        return (f"species={len(self.species)} reactions={len(self.reactions)} "
                f"(cleavage={n_cl}, condensation={len(self.reactions) - n_cl}) r={self.r:g} seed={self.seed}")


# --- module-level operations -------------------------------------------------

def intern(table: SpeciesTable, sequence: str) -> Species:
    return table.intern(sequence)


def _sequences(species_set: Iterable) -> list[str]:
    seqs = []
    seen = set()
    for s in species_set:
        seq = s.sequence if isinstance(s, Species) else str(s)
        if seq not in seen:
            seen.add(seq)
            seqs.append(seq)
    return seqs


def conceivable_count(species_set: Iterable) -> int:
    seqs = _sequences(species_set)
    if not seqs:
        raise ValueError("species set must be non-empty")
    return sum(len(s) - 1 for s in seqs) + len(seqs) ** 2


@dataclass(frozen=True)
class Template:
    kind: str
    participants: tuple[str, ...]
    cut_point: int | None = None


def enumerate_conceivable(species_set: Iterable[Species]) -> list[Template]:
    """Uncatalysed templates sorted by species id, then cut point or partner id."""
    sp = sorted(species_set, key=lambda s: s.id)
    if not sp:
        raise ValueError("species set must be non-empty")
    out = []
    for s in sp:
        for cut in range(1, s.length):
            out.append(Template("cleavage", (s.sequence,), cut))
        for other in sp:
            out.append(Template("condensation", (s.sequence, other.sequence)))
    return out


def generate_chemistry(species_set: Iterable, r: float, seed: int, min_catalyst_length: int = 3,
                       alphabet: Alphabet | None = None, *, backend: str | None = None) -> Chemistry:
    chem = Chemistry(r, seed, min_catalyst_length, alphabet, backend=backend)
    ids = [chem.species.intern(seq).id for seq in _sequences(species_set)]
    chem.reactions = chem._assign_all(ids)
    return chem


def expand_chemistry(chemistry: Chemistry, new_species: Iterable) -> Chemistry:
    out = chemistry.copy()
    out.expand(_sequences(new_species))
    return out


def influx_has_acs(chemistry: Chemistry, influx_species: Iterable) -> bool:
    from .acs import strongly_connected_components

    ids = set()
    for s in _sequences(influx_species):
        sp = chemistry.species.get(s)
        if sp is None:
            raise ChemistryError(f"influx species {s!r} unknown to the chemistry")
        ids.add(sp.id)
    edges = chemistry.catalysis_edges(restrict=ids)
    if any(a == b for a, b in edges):
        return True
    adj: dict[int, set[int]] = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
    return any(len(c) > 1 for c in strongly_connected_components(sorted(ids), adj))


def generate_valid_chemistry(species_set: Iterable, influx_species: Iterable, r: float, seed: int,
                             min_catalyst_length: int = 3, alphabet: Alphabet | None = None,
                             max_attempts: int = 100, *, backend: str | None = None) -> Chemistry:
    """Generate, retrying with ``seed + 1, seed + 2, ...`` while the influx holds an ACS."""
    species_set = _sequences(species_set)
    influx = _sequences(influx_species)
    for attempt in range(max_attempts):
        chem = generate_chemistry(species_set, r, seed + attempt, min_catalyst_length, alphabet, backend=backend)
        if not influx_has_acs(chem, influx):
            chem.meta.update(requested_seed=seed, attempts=attempt + 1)
            return chem
        log.info("chemistry seed %d rejected: influx holds an autocatalytic set", seed + attempt)
    raise ChemistryError(f"every seed in [{seed}, {seed + max_attempts}) yields an influx autocatalytic set")


# --- serialisation -----------------------------------------------------------

def chemistry_to_dict(chem: Chemistry) -> dict:
    reactions = []
    for rx in chem.reactions:
        if rx.kind == "cleavage":
            reactions.append({"kind": "cleavage", "substrate": rx.substrate.id,
                              "cut": rx.cut_point, "catalyst": rx.catalyst.id})
        else:
            reactions.append({"kind": "condensation", "left": rx.left.id,
                              "right": rx.right.id, "catalyst": rx.catalyst.id})
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "alphabet": list(chem.alphabet.letters),
        "r": chem.r,
        "seed": chem.seed,
        "min_catalyst_length": chem.min_catalyst_length,
        "species": [[s.id, s.sequence] for s in chem.species],
        "reactions": reactions,
        "meta": chem.meta,
    }


def chemistry_from_dict(doc: dict) -> Chemistry:
    if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
        raise ChemistryError(
            f"unsupported chemistry document {doc.get('format')!r} v{doc.get('version')!r}")
    chem = Chemistry(doc["r"], doc["seed"], doc["min_catalyst_length"], Alphabet(tuple(doc["alphabet"])))
    for expected, (sid, seq) in enumerate(doc["species"]):
        if sid != expected:
            raise ChemistryError("species ids must be contiguous from 0")
        chem.species.intern(seq)
    sp = chem.species
    for rx in doc["reactions"]:
        if rx["kind"] == "cleavage":
            chem.reactions.append(Cleavage(sp[rx["substrate"]], rx["cut"], sp[rx["catalyst"]]))
        else:
            chem.reactions.append(Condensation(sp[rx["left"]], sp[rx["right"]], sp[rx["catalyst"]]))
    chem.meta = dict(doc.get("meta", {}))
    return chem


def dump_chemistry(chem: Chemistry, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chemistry_to_dict(chem), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_chemistry(path) -> Chemistry:
    with open(path, encoding="utf-8") as fh:
        return chemistry_from_dict(json.load(fh))
