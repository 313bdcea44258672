import json
import math
import os
import statistics
import subprocess
from pathlib import Path

import pytest

import iotstage

ROOT = Path(os.environ.get("IOTSTAGE_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCENARIO = ROOT / "scenarios" / "levelcrossing.json"


def test_load_and_round_trip():
    s = iotstage.load(SCENARIO)
    assert s.name == "levelcrossing"
    assert s.node_ids == ["train", "crossing", "car"]
    assert iotstage.Scenario.from_json(s.to_json()) == s
    assert iotstage.validate(s) == []


def test_parse_error_carries_code():
    with pytest.raises(iotstage.IotstageError, match="MISSING_FIELD"):
        iotstage.Scenario.from_json('{"name": "x"}')


def test_invalid_fixture_codes():
    expected = json.loads((ROOT / "scenarios/fixtures/expected_violations.json").read_text())
    s = iotstage.load(ROOT / "scenarios/fixtures/invalid/duplicate_ids.json")
    assert {v["code"] for v in iotstage.validate(s)} == set(expected["duplicate_ids.json"])


def test_run_is_deterministic():
    s = iotstage.load(SCENARIO)
    a = iotstage.run(s)
    b = iotstage.run(s)
    assert a["trace_hash"] == b["trace_hash"]
    samples = a["samples_ms"]["system_latency"]
    assert len(samples) > 10
    assert all(5.0 < x < 15.0 for x in samples)


def test_summarize_matches_statistics_module():
    values = [9.1, 8.4, 10.2, 9.9, 7.7]
    got = iotstage.summarize(values)
    assert got["mean_ms"] == pytest.approx(statistics.mean(values), abs=1e-12)
    assert got["std_ms"] == pytest.approx(statistics.stdev(values), abs=1e-12)
    assert iotstage.format_summary(got["mean_ms"], got["std_ms"]) == (
        f"{statistics.mean(values):.2f} ± {statistics.stdev(values):.2f} ms"
    )


def test_run_repeated_report(tmp_path):
    s = iotstage.load(SCENARIO)
    report = iotstage.run_repeated(s, 3, tmp_path / "t.jsonl")
    assert report["n_runs"] == 3
    assert not report["partial"]
    assert len(set(report["trace_hashes"])) == 3
    assert len(list(tmp_path.glob("t.run*.jsonl"))) == 3


def test_helpers():
    assert iotstage.distance_traveled(100.0, 10.34) == pytest.approx(1.034)
    assert iotstage.in_range((0, 0), (3, 4), 5.0)
    assert not iotstage.in_range((0, 0), (3, 4.001), 5.0)
    e = iotstage.estimate([2.0, 2.2, 2.4, 2.6], lost=1)
    assert e["latency_ms"] == pytest.approx(statistics.median([2.0, 2.2, 2.4, 2.6]) / 2)
    assert e["loss"] == pytest.approx(0.2)


def test_cli_version():
    cli = os.environ.get("IOTSTAGE_CLI")
    if not cli:
        pytest.skip("CLI path not provided")
    out = subprocess.run([cli, "version"], capture_output=True, text=True, check=True)
    assert "0.1.0" in out.stdout
