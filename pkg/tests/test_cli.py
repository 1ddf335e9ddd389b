import json
import logging
import subprocess
import sys

import pytest

from catnet import cli, formats
from catnet.chem_core import load_chemistry

REACTIVE = ["--set", "kinetics.volume=1e-18", "--set", "reactor.influx_max_length=3"]


def main(*argv):
    return cli.main([str(a) for a in argv])


def test_gen_chem_r_zero(tmp_path, capsys):
    assert main("gen-chem", "--set", "chemistry.r=0", "--out", tmp_path) == 0
    chem = load_chemistry(tmp_path / "chemistry.json")
    assert chem.reactions == []
    out = capsys.readouterr().out
    assert "species=30" in out and "reactions=0" in out and "r=0" in out


def test_gen_chem_is_byte_reproducible(tmp_path):
    assert main("gen-chem", "--chem-seed", 17, "--out", tmp_path / "a") == 0
    assert main("gen-chem", "--chem-seed", 17, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "chemistry.json").read_bytes() == (tmp_path / "b" / "chemistry.json").read_bytes()


def test_gen_chem_regeneration_loop_gives_up(tmp_path, caplog, capsys):
    caplog.set_level(logging.INFO, logger="catnet")
    code = main("gen-chem", "--set", "chemistry.r=1", "--set", "reactor.influx_max_length=3",
                "--set", 'reactor.influx_species=["A","B","AB","AAB"]', "--out", tmp_path)
    assert code != 0
    rejected = [r for r in caplog.records if "rejected" in r.getMessage()]
    assert len(rejected) == 100
    assert "autocatalytic" in capsys.readouterr().err


def test_run_with_t_end_zero(tmp_path):
    assert main("run", "--set", "reactor.t_end=0", "--out", tmp_path) == 0
    assert formats.read_events(tmp_path / "events.csv") == []
    assert formats.read_snapshots(tmp_path / "snapshots.csv") == []
    assert (tmp_path / "descriptors.csv").read_text().splitlines()[1].startswith("window,")
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["n_windows"] == 0 and meta["partial"] is False


def test_run_replay_identical_artifacts(tmp_path):
    args = ["run", *REACTIVE, "--set", "reactor.t_end=40", "--chem-seed", 2, "--dyn-seed", 8]
    assert main(*args, "--out", tmp_path / "a") == 0
    assert main(*args, "--out", tmp_path / "b") == 0
    for name in ("events.csv", "snapshots.csv", "species.csv", "descriptors.csv", "acs_reports.json",
                 "chemistry_final.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    assert main(*args[:-1], 9, "--out", tmp_path / "c") == 0
    assert (tmp_path / "a" / "events.csv").read_bytes() != (tmp_path / "c" / "events.csv").read_bytes()


def test_every_run_artifact_records_both_seeds(tmp_path):
    assert main("run", *REACTIVE, "--set", "reactor.t_end=20", "--chem-seed", 4, "--dyn-seed", 6,
                "--out", tmp_path) == 0
    for name, fmt in (("events.csv", formats.EVENTS), ("snapshots.csv", formats.SNAPSHOTS),
                      ("descriptors.csv", formats.DESCRIPTOR_FMT)):
        meta = formats.read_header(tmp_path / name, fmt)
        assert meta["dyn_seed"] == "6" and int(meta["chem_seed"]) >= 4
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["dyn_seed"] == 6 and meta["chem_seed"] >= 4
    assert json.loads((tmp_path / "chemistry_final.json").read_text())["meta"]["requested_seed"] == 4


def test_run_with_chemistry_file(tmp_path):
    assert main("gen-chem", *REACTIVE, "--chem-seed", 5, "--out", tmp_path) == 0
    assert main("run", *REACTIVE, "--set", "reactor.t_end=10", "--chemistry", tmp_path / "chemistry.json",
                "--out", tmp_path / "run") == 0
    assert (tmp_path / "run" / "events.csv").exists()


def test_run_overflow_exit_code(tmp_path, capsys):
    code = main("run", *REACTIVE, "--set", "reactor.t_end=200", "--set", "chemistry.r=0.01",
                "--set", "reactor.max_species=31", "--out", tmp_path)
    assert code == cli.EXIT_ABORT
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["partial"] is True and meta["aborted"] == "species-overflow"
    assert "partial=1" in (tmp_path / "events.csv").read_text().splitlines()[0]
    assert "aborted" in capsys.readouterr().err


def test_configuration_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"reactor": {"window": -1}}))
    assert main("run", "--config", bad) == cli.EXIT_CONFIG
    assert main("run", "--set", "nope.x=1") == cli.EXIT_CONFIG
    assert main("sweep", "--out", tmp_path) == cli.EXIT_CONFIG
    assert main("run", "--dyn-seed", -1) == cli.EXIT_CONFIG


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"chemistry": {"seed": 1}, "dynamics_seed": 2, "output": "from-file",
                               "reactor": {"energy_enabled": False}}))
    args = cli.build_parser().parse_args(["run", "--config", str(cfg), "--chem-seed", "7", "--energy",
                                          "--out", str(tmp_path / "o")])
    resolved = cli.resolve_config(args)
    assert resolved.chemistry.seed == 7 and resolved.dynamics_seed == 2
    assert resolved.reactor.energy_enabled is True and resolved.output == str(tmp_path / "o")
    args = cli.build_parser().parse_args(["run", "--config", str(cfg)])
    resolved = cli.resolve_config(args)
    assert (resolved.chemistry.seed, resolved.output, resolved.reactor.energy_enabled) == (1, "from-file", False)


def test_default_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CATNET_OUTPUT_ROOT", str(tmp_path))
    assert main("gen-chem", "--set", "chemistry.r=0") == 0
    assert (tmp_path / "chemistry" / "chemistry.json").exists()


def test_analyze_reproduces_run_descriptors(tmp_path, capsys):
    assert main("run", *REACTIVE, "--set", "reactor.t_end=60", "--set", "chemistry.r=0.02",
                "--chem-seed", 3, "--out", tmp_path / "run") == 0
    capsys.readouterr()
    assert main("analyze", tmp_path / "run" / "events.csv", "--out", tmp_path / "ana") == 0
    assert (tmp_path / "run" / "descriptors.csv").read_bytes() == (tmp_path / "ana" / "descriptors.csv").read_bytes()
    assert (tmp_path / "run" / "acs_reports.json").read_bytes() == (tmp_path / "ana" / "acs_reports.json").read_bytes()
    assert len(capsys.readouterr().out.splitlines()) == 6


def test_analyze_missing_metadata(tmp_path):
    formats.write_events(tmp_path / "events.csv", [])
    assert main("analyze", tmp_path / "events.csv") == cli.EXIT_ERROR


def _sweep_config(tmp_path, **sweep):
    doc = {"version": 1, "kinetics": {"volume": 1e-18}, "reactor": {"t_end": 30, "influx_max_length": 3},
           "sweep": {"parameter": "kinetics.residence_time", "values": [20, 100, 200],
                     "chemistries": 2, "realizations": 2, **sweep}}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(doc))
    return path


def test_sweep_outputs_and_report(tmp_path, capsys):
    cfg = _sweep_config(tmp_path)
    assert main("sweep", "--config", cfg, "--out", tmp_path / "out") == 0
    out = tmp_path / "out"
    doc = json.loads((out / "sweep.json").read_text())
    assert len(doc["runs"]) == 12 and doc["failure_fraction"] == 0
    assert doc["chem_seed"] == 0 and doc["dyn_seed"] == 0
    rates = {p["value"]: p["influx_rate"] for p in doc["points"]}
    assert rates[20] == pytest.approx(10 * rates[200])
    assert len(list((out / "runs").glob("*.csv"))) == 12
    trends = formats.read_trends(out / "trends.csv")
    assert {t["descriptor"] for t in trends} == {"n_acs", "species_in_acs", "molecules_in_acs",
                                                 "new_species_count", "new_molecules_count", "p_acs"}
    before = (out / "trends.csv").read_bytes()
    capsys.readouterr()
    assert main("report", out) == 0
    assert (out / "trends.csv").read_bytes() == before
    assert "residence time" in capsys.readouterr().out


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = _sweep_config(tmp_path)
    assert main("sweep", "--config", cfg, "--out", tmp_path / "serial", "--parallelism", 1) == 0
    assert main("sweep", "--config", cfg, "--out", tmp_path / "par", "--parallelism", 3) == 0
    for name in ("ensemble.csv", "trends.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_single_point_sweep_degenerates_to_run(tmp_path):
    cfg = _sweep_config(tmp_path, values=[100], chemistries=1, realizations=1)
    assert main("sweep", "--config", cfg, "--out", tmp_path / "sw") == 0
    assert main("run", "--config", cfg, "--set", "kinetics.residence_time=100", "--out", tmp_path / "run") == 0
    swept = formats.read_descriptors(tmp_path / "sw" / "runs" / "v000_c000_r000.csv")
    single = formats.read_descriptors(tmp_path / "run" / "descriptors.csv")
    assert list(swept.rows()) == list(single.rows())
    assert formats.read_trends(tmp_path / "sw" / "trends.csv") == []


def test_sweep_mostly_failing_exits_4(tmp_path):
    cfg = _sweep_config(tmp_path, values=[0.01, 0.02, 0.03], chemistries=1, realizations=2,
                        parameter="chemistry.r")
    doc = json.loads(cfg.read_text())
    doc["reactor"].update(max_species=31, t_end=200)
    cfg.write_text(json.dumps(doc))
    assert main("sweep", "--config", cfg, "--out", tmp_path / "f") == cli.EXIT_PARTIAL
    runs = json.loads((tmp_path / "f" / "sweep.json").read_text())["runs"]
    assert all(r["error"] for r in runs if not r["ok"])


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "catnet.cli", "gen-chem", "--set", "chemistry.r=0",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "chemistry.json").exists()
