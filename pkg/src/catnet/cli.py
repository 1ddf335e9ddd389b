"""Command line entry point: ``catnet gen-chem | run | sweep | analyze | report``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import acs, config as cfgmod, formats, kernels
from .chem_core import ChemistryError, dump_chemistry, load_chemistry
from .engine import ConfigError
from .metrics import DESCRIPTORS, TREND_SYMBOLS, MetricsError, compute_descriptors
from .sweep import make_chemistry, run_sweep, simulate, trends_from_ensemble, write_sweep

log = logging.getLogger("catnet")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_PARTIAL = 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--chem-seed", type=int, help="chemistry seed")
    p.add_argument("--dyn-seed", type=int, help="dynamics seed")
    p.add_argument("--out", type=Path, help=f"output directory (default: ${cfgmod.OUTPUT_ENV}/<command>)")
    p.add_argument("--parallelism", type=int, help="worker processes for sweeps")
    p.add_argument("--energy", action=argparse.BooleanOptionalAction, default=None,
                   help="enable energy-carrier coupling")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                   help="override one parameter, e.g. kinetics.volume=1e-18")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catnet", description="Stochastic catalytic reaction network simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--backend", choices=["cython", "python"], help="kernel backend")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-chem", help="generate a chemistry")
    _common(p)

    p = sub.add_parser("run", help="simulate one reactor")
    _common(p)
    p.add_argument("--chemistry", type=Path, help="chemistry JSON from gen-chem (generated if omitted)")

    p = sub.add_parser("sweep", help="parameter sweep over chemistries and realizations")
    _common(p)

    p = sub.add_parser("analyze", help="recompute descriptors and ACS reports from an event log")
    p.add_argument("event_log", type=Path)
    p.add_argument("--out", type=Path, help="defaults to the event log's directory")
    p.add_argument("--threshold", type=int, default=1, help="bottleneck threshold for fragility flags")

    p = sub.add_parser("report", help="trend table of an ensemble directory")
    p.add_argument("ensemble_dir", type=Path)
    p.add_argument("--eps", type=float, default=None, help="relative flatness tolerance")
    return parser


def resolve_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    cfg = cfgmod.apply_overrides(cfg, args.overrides)
    if args.chem_seed is not None:
        cfg = cfgmod.apply_overrides(cfg, [f"chemistry.seed={args.chem_seed}"])
    if args.dyn_seed is not None:
        if args.dyn_seed < 0:
            raise ConfigError("dynamics seed must be >= 0")
        cfg.dynamics_seed = args.dyn_seed
    if args.energy is not None:
        cfg = cfgmod.apply_overrides(cfg, [f"reactor.energy_enabled={json.dumps(args.energy)}"])
    if args.parallelism is not None:
        if args.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        cfg.parallelism = args.parallelism
    if args.out is not None:
        cfg.output = str(args.out)
    if cfg.chemistry.seed < 0:
        raise ConfigError("chemistry seed must be >= 0")
    return cfg


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_gen_chem(cfg: cfgmod.RunConfig, backend=None) -> int:
    out = Path(cfg.output_dir("chemistry"))
    out.mkdir(parents=True, exist_ok=True)
    chem = make_chemistry(cfg, backend=backend)
    path = out / "chemistry.json"
    dump_chemistry(chem, path)
    print(f"{chem.summary()} -> {path}")
    return EXIT_OK


def write_run(out: Path, cfg: cfgmod.RunConfig, result, series, chem_seed: int, backend=None) -> None:
    files = formats.run_dir_files(out)
    seeds = {"chem_seed": chem_seed, "dyn_seed": result.dynamics_seed}
    if result.aborted:
        seeds["partial"] = 1
    formats.write_events(files["events"], result.events, seeds)
    formats.write_snapshots(files["snapshots"], result.snapshots, seeds)
    formats.write_species(files["species"], result)
    formats.write_descriptors(files["descriptors"], series, seeds)
    sequences = [s.sequence for s in result.chemistry.species]
    acs.write_reports(files["acs"], enumerate(series.reports), sequences)
    dump_chemistry(result.chemistry, files["chemistry"])
    _write_json(files["meta"], {
        "format": "catnet-run",
        "version": formats.VERSION,
        "chem_seed": chem_seed,
        "dyn_seed": result.dynamics_seed,
        "config": cfg.to_dict(),
        "window": cfg.reactor.window,
        "n_windows": len(result.snapshots),
        "steps": result.steps,
        "aborted": result.aborted,
        "partial": bool(result.aborted),
        "final_time": result.state.time,
        "invariant_violations": len(result.invariant_violations),
        "backend": kernels.get_backend(backend).NAME,
    })


def cmd_run(cfg: cfgmod.RunConfig, chemistry: Path | None = None, backend=None) -> int:
    out = Path(cfg.output_dir("run"))
    out.mkdir(parents=True, exist_ok=True)
    chem = load_chemistry(chemistry) if chemistry else make_chemistry(cfg, backend=backend)
    result, series = simulate(cfg, chem, backend=backend)
    write_run(out, cfg, result, series, chem.seed, backend)
    if result.aborted:
        print(f"run aborted ({result.aborted}) at t={result.state.time:.6g}; partial artifacts in {out}",
              file=sys.stderr)
        return EXIT_ABORT
    last = {d: getattr(series, d)[-1] if len(series) else 0 for d in DESCRIPTORS}
    print(f"{result.steps} reactions, {len(result.chemistry.species)} species, t={result.state.time:.6g};"
          f" final window: " + ", ".join(f"{k}={v}" for k, v in last.items()) + f" -> {out}")
    return EXIT_OK


def cmd_sweep(cfg: cfgmod.RunConfig, backend=None) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a sweep section")
    out = Path(cfg.output_dir("sweep"))
    result = run_sweep(cfg, backend=backend)
    write_sweep(result, cfg, out)
    print(f"{len(result.outcomes)} runs, {len(result.failures)} failed -> {out}")
    _print_trends(result.trends)
    if result.failure_fraction > 0.5:
        return EXIT_PARTIAL
    return EXIT_OK


def _print_trends(rows) -> None:
    for fam, param, d, trend in rows:
        print(f"{fam:16s} {param:28s} {d:20s} {TREND_SYMBOLS[trend]:3s} {trend}")


def cmd_analyze(event_log: Path, out: Path | None = None, threshold: int = 1) -> int:
    src = event_log.parent
    files = formats.run_dir_files(src)
    with open(files["meta"], encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format") != "catnet-run" or meta.get("version") != formats.VERSION:
        raise formats.FormatError(f"{files['meta']}: unsupported run metadata")
    events = formats.read_events(event_log)
    n_windows = meta["n_windows"]
    snapshots = formats.read_snapshots(files["snapshots"], n_windows)
    species = formats.read_species(files["species"])
    old = [s["id"] for s in species if s["origin"] != "new"]
    series = compute_descriptors(events, snapshots, meta["window"], n_windows, old)
    out = out or src
    out.mkdir(parents=True, exist_ok=True)
    seeds = {"chem_seed": meta["chem_seed"], "dyn_seed": meta["dyn_seed"]}
    formats.write_descriptors(out / "descriptors.csv", series, seeds)
    acs.write_reports(out / "acs_reports.json", enumerate(series.reports),
                      [s["sequence"] for s in species], threshold)
    for row in series.rows():
        print(" ".join(map(str, row)))
    return EXIT_OK


def cmd_report(ensemble_dir: Path, eps: float | None = None) -> int:
    paths = sorted(ensemble_dir.rglob("ensemble.csv"))
    if not paths:
        raise formats.FormatError(f"no ensemble.csv under {ensemble_dir}")
    rows = []
    for path in paths:
        meta = formats.read_header(path, formats.ENSEMBLE)
        parameter = meta.get("parameter", "parameter")
        sweep_eps = eps
        if sweep_eps is None:
            sweep_eps = 0.05
            sweep_meta = path.parent / "sweep.json"
            if sweep_meta.exists():
                with open(sweep_meta, encoding="utf-8") as fh:
                    sweep_eps = json.load(fh)["config"]["sweep"]["eps"]
        found = trends_from_ensemble(path, parameter, sweep_eps)
        formats.write_trends(path.parent / "trends.csv", found, meta)
        rows.extend(found)
    _print_trends(rows)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    backend = args.backend
    try:
        if args.command == "analyze":
            return cmd_analyze(args.event_log, args.out, args.threshold)
        if args.command == "report":
            return cmd_report(args.ensemble_dir, args.eps)
        cfg = resolve_config(args)
        if args.command == "gen-chem":
            return cmd_gen_chem(cfg, backend)
        if args.command == "run":
            return cmd_run(cfg, args.chemistry, backend)
        return cmd_sweep(cfg, backend)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChemistryError as exc:
        print(f"chemistry error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (formats.FormatError, MetricsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
