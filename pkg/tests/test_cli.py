"""Command-line surface: run, trace output, inspect filtering."""

import json

import pytest

from chanbridge.cli import main


def test_run_writes_deterministic_trace(tmp_path, capsys):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    args = ["run", "--scenario", "happy-uni", "--seed", "42"]
    assert main(args + ["--out", str(first)]) == 0
    out = capsys.readouterr().out
    report = json.loads(out[: out.rindex("\n}") + 2])
    assert report["balances"]["sp_final"] == 50_000_000
    assert main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_run_all_catalog_names(tmp_path):
    for name in ("happy-bidir", "cancel-bidir", "fraud-abandon",
                 "fraud-old-state", "segwit-happy"):
        assert main(["run", "--scenario", name, "--seed", "1",
                     "--out", str(tmp_path / f"{name}.json")]) == 0


def test_run_rejects_unknown_scenario(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--scenario", "bogus"])


def test_inspect_filters(tmp_path, capsys):
    trace = tmp_path / "t.json"
    main(["run", "--scenario", "happy-uni", "--seed", "7", "--out", str(trace)])
    capsys.readouterr()
    assert main(["inspect", str(trace), "--actor", "user", "--chain", "bitcoin"]) == 0
    out = capsys.readouterr().out
    events = [json.loads(line) for line in out.splitlines() if line.startswith("{")]
    assert events
    assert all(e["actor"] == "user" and e["chain"] == "bitcoin" for e in events)


def test_inspect_missing_file(capsys):
    assert main(["inspect", "/nonexistent/trace.json"]) == 1


def test_run_with_overrides(tmp_path):
    assert main(["run", "--scenario", "happy-uni", "--seed", "3",
                 "--deposit", "50000000", "--fee", "5000", "--tlf", "30",
                 "--tl", "40", "--confirmations", "2",
                 "--out", str(tmp_path / "o.json")]) == 0
