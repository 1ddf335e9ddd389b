import pytest

from catnet import formats
from catnet.engine import Event, Snapshot, run
from catnet.metrics import DescriptorSeries, ensemble_average, run_descriptors

from conftest import reactive_setup


@pytest.fixture(scope="module")
def result():
    chem, cfg, params = reactive_setup(r=2e-2, seed=3, t_end=40)
    return run(chem, cfg, params, 9)


def test_events_round_trip(tmp_path, result):
    path = tmp_path / "events.csv"
    formats.write_events(path, result.events, {"chem_seed": 3, "dyn_seed": 9})
    assert formats.read_events(path) == result.events
    assert formats.read_header(path, formats.EVENTS) == {"chem_seed": "3", "dyn_seed": "9"}


def test_snapshots_round_trip(tmp_path, result):
    path = tmp_path / "snapshots.csv"
    formats.write_snapshots(path, result.snapshots)
    back = formats.read_snapshots(path)
    assert [(s.window, s.time, s.counts) for s in back] == \
           [(s.window, s.time, s.counts) for s in result.snapshots]


def test_empty_window_snapshot_is_restored(tmp_path):
    path = tmp_path / "snapshots.csv"
    formats.write_snapshots(path, [Snapshot(0, 10.0, {1: 2}, {}), Snapshot(1, 20.0, {}, {})])
    back = formats.read_snapshots(path, n_windows=2)
    assert [s.window for s in back] == [0, 1] and back[1].counts == {}


def test_species_and_descriptors_round_trip(tmp_path, result):
    formats.write_species(tmp_path / "species.csv", result)
    rows = formats.read_species(tmp_path / "species.csv")
    assert [r["sequence"] for r in rows] == [s.sequence for s in result.chemistry.species]
    assert {r["origin"] for r in rows} <= {"initial", "influx", "new"}
    s = run_descriptors(result)
    formats.write_descriptors(tmp_path / "d.csv", s)
    back = formats.read_descriptors(tmp_path / "d.csv")
    assert list(back.rows()) == list(s.rows())


def test_ensemble_and_trends(tmp_path):
    s = DescriptorSeries([0, 1], [0, 2], [0, 5], [1, 1], [1, 3])
    summaries = [ensemble_average([s, s], p) for p in (1.0, 2.0, 3.0)]
    formats.write_ensemble(tmp_path / "e.csv", summaries, {"parameter": "chemistry.r"})
    table = formats.read_ensemble(tmp_path / "e.csv")
    assert sorted(table) == [1.0, 2.0, 3.0]
    assert table[2.0]["molecules_in_acs"] == [0.0, 5.0]
    assert table[2.0]["p_acs"] == [0.0, 1.0]
    formats.write_trends(tmp_path / "t.csv", [("catalysis", "chemistry.r", "p_acs", "up")])
    (row,) = formats.read_trends(tmp_path / "t.csv")
    assert row["symbol"] == "↑" and row["trend"] == "up"


def test_empty_logs_have_valid_headers(tmp_path):
    formats.write_events(tmp_path / "e.csv", [])
    assert formats.read_events(tmp_path / "e.csv") == []
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines == ["# catnet-events v1", ",".join(formats.EVENT_COLUMNS)]


def test_version_mismatch_rejected(tmp_path):
    path = tmp_path / "e.csv"
    formats.write_events(path, [Event(0.0, "cleavage", "x", 1, (2, 3), True)])
    text = path.read_text().replace("v1", "v2", 1)
    path.write_text(text)
    with pytest.raises(formats.FormatError):
        formats.read_events(path)


def test_wrong_format_rejected(tmp_path):
    path = tmp_path / "e.csv"
    formats.write_events(path, [])
    with pytest.raises(formats.FormatError):
        formats.read_snapshots(path)
