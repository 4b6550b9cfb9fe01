"""The committed example outputs stay reproducible.

Every delimited file under golden/ must match a fresh run of the same
command bit for bit. Figures are only checked for existence and substance:
their bytes are stable across reruns on one matplotlib build but not across
builds, so pinning them would make the suite fail on unrelated upgrades.
"""

import os

import pytest

from bilatsim.cli import main

GOLDEN = os.path.join(os.path.dirname(__file__), os.pardir, "golden")
CONFIG = os.path.join(GOLDEN, "scenario.cfg")

COMMANDS = {
    "run": ["--schemes", "IGBT", "--f-high", "1000", "--decimate", "50"],
    "compare": [
        "--schemes", "SPBT,FRBT,IGBT", "--f-high", "100,1000", "--decimate", "50",
    ],
    "sweep": [
        "--schemes", "SPBT,FRBT,IGBT", "--f-high", "100,200,500,1000",
        "--decimate", "50",
    ],
}


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_committed_outputs_match_a_fresh_run(tmp_path, command):
    out = tmp_path / command
    argv = [command, "--config", CONFIG, "--out", str(out)] + COMMANDS[command]
    assert main(argv) == 0
    committed_dir = os.path.join(GOLDEN, command)
    committed = sorted(os.listdir(committed_dir))
    assert committed == sorted(p.name for p in out.iterdir())
    for name in committed:
        fresh = (out / name).read_bytes()
        with open(os.path.join(committed_dir, name), "rb") as handle:
            stored = handle.read()
        if name.endswith(".csv"):
            assert fresh == stored, name
        else:
            assert len(stored) > 1024 and len(fresh) > 1024, name


def test_committed_sweep_shows_rebound_falling_with_rate():
    # reflection-type bouncing shrinks monotonically as the exchange rate rises
    with open(os.path.join(GOLDEN, "sweep", "sweep.csv"), "r", encoding="ascii") as f:
        header, *rows = [line.split(",") for line in f.read().strip().splitlines()]
    rate_col, rebound_col = header.index("f_high"), header.index("max_rebound")
    frbt = sorted(
        (float(row[rate_col]), float(row[rebound_col]))
        for row in rows
        if row[0] == "FRBT"
    )
    assert len(frbt) == 4
    rebounds = [rebound for _, rebound in frbt]
    assert rebounds == sorted(rebounds, reverse=True)
    assert all(later < earlier for earlier, later in zip(rebounds, rebounds[1:]))
