"""Run configuration: JSON documents, schema validation and parameter paths."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from typing import Any

import jsonschema

from .chem_core import Alphabet
from .engine import ConfigError, ReactorConfig
from .kinetics import KineticParams
from .metrics import balanced_influx

OUTPUT_ENV = "CATNET_OUTPUT_ROOT"

# parameter paths that are not plain fields
DERIVED_PATHS = {"kinetics.residence_time", "reactor.influx_diversity", "reactor.initial_concentration"}

FAMILIES = {
    "reactor.influx_diversity": "influx",
    "reactor.influx_max_length": "influx",
    "reactor.influx_species": "influx",
    "kinetics.influx_rate": "influx",
    "kinetics.residence_time": "residence time",
    "kinetics.k_out": "residence time",
    "reactor.initial_max_length": "initial set",
    "reactor.initial_total_molecules": "initial set",
    "reactor.initial_concentration": "initial set",
    "kinetics.ec_influx_rate": "energy",
    "kinetics.k_nrg": "energy",
    "chemistry.r": "catalysis",
}


@dataclass
class ChemistryConfig:
    alphabet: list[str] = field(default_factory=lambda: ["A", "B"])
    r: float = 1.03e-3
    seed: int = 0
    min_catalyst_length: int = 3
    max_attempts: int = 100

    @property
    def alpha(self) -> Alphabet:
        return Alphabet(tuple(self.alphabet))


@dataclass
class SweepConfig:
    parameter: str
    values: list[float]
    chemistries: int = 1
    realizations: int = 1
    eps: float = 0.05

    def __post_init__(self):
        if self.chemistries < 1 or self.realizations < 1:
            raise ConfigError("sweep needs chemistries >= 1 and realizations >= 1")
        check_path(self.parameter)


@dataclass
class RunConfig:
    chemistry: ChemistryConfig = field(default_factory=ChemistryConfig)
    reactor: ReactorConfig = field(default_factory=ReactorConfig)
    kinetics: KineticParams = field(default_factory=KineticParams)
    sweep: SweepConfig | None = None
    dynamics_seed: int = 0
    output: str | None = None
    parallelism: int = 1

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["version"] = 1
        return doc

    def species_sets(self) -> tuple[list[str], list[str]]:
        """(initial ∪ influx sequences, influx sequences)."""
        al = self.chemistry.alpha
        influx = self.reactor.influx_sequences(al)
        seen = dict.fromkeys(self.reactor.initial_sequences(al) + influx)
        return list(seen), influx

    def output_dir(self, default: str) -> str:
        return self.output or os.path.join(os.environ.get(OUTPUT_ENV, "."), default)


def schema() -> dict:
    return json.loads(resources.files("catnet").joinpath("config_schema.json").read_text(encoding="utf-8"))


def check_path(path: str) -> None:
    if path in DERIVED_PATHS:
        return
    section, _, name = path.partition(".")
    cls = {"chemistry": ChemistryConfig, "reactor": ReactorConfig, "kinetics": KineticParams}.get(section)
    if cls is None or name not in {f.name for f in fields(cls)}:
        raise ConfigError(f"unknown parameter path {path!r}")


def from_dict(doc: dict) -> RunConfig:
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    try:
        sweep = doc.get("sweep")
        return RunConfig(
            chemistry=ChemistryConfig(**doc.get("chemistry", {})),
            reactor=ReactorConfig(**doc.get("reactor", {})),
            kinetics=KineticParams(**doc.get("kinetics", {})),
            sweep=SweepConfig(**sweep) if sweep else None,
            dynamics_seed=doc.get("dynamics_seed", 0),
            output=doc.get("output"),
            parallelism=doc.get("parallelism", 1),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return from_dict(doc)


def _coerce(current: Any, value: Any) -> Any:
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int) and not isinstance(current, bool):
        if float(value) != int(value):
            raise ConfigError(f"integer expected, got {value}")
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def with_parameter(cfg: RunConfig, path: str, value) -> RunConfig:
    """Copy of ``cfg`` with one parameter set.

    ``kinetics.residence_time`` sets ``k_out = 1/value`` and rebalances the
    influx so the flows-only equilibrium population stays at
    ``reactor.equilibrium_molecules`` (default: the initial population).
    ``reactor.influx_diversity`` keeps the first ``value`` sequences of the
    influx; ``reactor.initial_concentration`` sets the initial population.
    """
    check_path(path)
    out = copy.deepcopy(cfg)
    if path == "kinetics.residence_time":
        if value <= 0:
            raise ConfigError("residence time must be > 0")
        k_out = 1.0 / float(value)
        target = out.reactor.equilibrium_molecules
        if target is None:
            target = out.reactor.initial_total_molecules
        out.kinetics = replace(out.kinetics, k_out=k_out, influx_rate=balanced_influx(target, k_out))
        return out
    if path == "reactor.influx_diversity":
        k = int(value)
        pool = out.reactor.influx_sequences(out.chemistry.alpha)
        if not 1 <= k <= len(pool):
            raise ConfigError(f"influx diversity {k} outside [1, {len(pool)}]")
        out.reactor = replace(out.reactor, influx_species=pool[:k], influx_weights=None)
        return out
    if path == "reactor.initial_concentration":
        out.reactor = replace(out.reactor, initial_total_molecules=int(value))
        return out
    section, _, name = path.partition(".")
    obj = getattr(out, section)
    setattr(out, section, replace(obj, **{name: _coerce(getattr(obj, name), value)}))
    return out


def apply_overrides(cfg: RunConfig, assignments: list[str]) -> RunConfig:
    """``path=value`` strings, values parsed as JSON when possible."""
    for item in assignments:
        path, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not path=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        check_path(path)
        if path in DERIVED_PATHS:
            cfg = with_parameter(cfg, path, value)
            continue
        section, _, name = path.partition(".")
        obj = getattr(cfg, section)
        current = getattr(obj, name)
        if current is not None and not isinstance(value, (list, dict, type(None))):
            value = _coerce(current, value)
        try:
            setattr(cfg, section, replace(obj, **{name: value}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def family(path: str) -> str:
    return FAMILIES.get(path, path.partition(".")[0])
