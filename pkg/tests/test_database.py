# tests/test_database.py
import datetime

import numpy as np
import pytest

from database import _plain, get_recent_runs, get_run_rows, init_db, record_run


@pytest.fixture
def ledger(tmp_path):
    init_db(f"sqlite:///{tmp_path / 'ledger.sqlite3'}")


def test_record_and_read_back(ledger):
    columns = ("scenario", "integrand", "gap", "condition_value", "verdict", "pass")
    rows = [("a", "grad_power(2)", np.float64(1.0), 0.0, "lsc", True),
            ("a", "double_well", -1.0, 0.0, "not_lsc", False)]
    started = datetime.datetime(2026, 1, 1, 12, 0, 0)
    run_id = record_run("x.scn", "lsc", columns, rows, 1, "0.3.0", started, clamp_radius=1.0, k_max_exp=8, seed=24301)
    assert run_id is not None
    run = get_recent_runs(1)[0]
    assert run.id == run_id
    assert (run.rows, run.failures, run.exit_code, run.seed) == (2, 1, 1, 24301)
    assert run.started_at == started
    stored = get_run_rows(run_id)
    assert [r["passed"] for r in stored] == [True, False]
    assert stored[0]["gap"] == 1.0
    assert stored[1]["verdict"] == "not_lsc"


def test_recent_runs_newest_first(ledger):
    started = datetime.datetime(2026, 1, 1)
    first = record_run("a.scn", "verify", ("scenario", "pass"), [("a", True)], 0, "0.3.0", started)
    second = record_run("b.scn", "verify", ("scenario", "pass"), [("b", True)], 0, "0.3.0", started)
    assert [r.id for r in get_recent_runs(2)] == [second, first]


def test_plain_values():
    assert _plain(np.float64(0.25)) == 0.25
    assert _plain(True) is True
    assert _plain(None) is None
    assert _plain(np.bool_(False)) is False


def test_timestamps_and_release_notes(ledger):
    started = datetime.datetime.now(datetime.timezone.utc)
    run_id = record_run("a.scn", "verify", ("scenario", "pass"), [("a", True)], 0, "0.3.0", started,
                        release_notes="notes")
    run = next(r for r in get_recent_runs(5) if r.id == run_id)
    assert run.release_notes == "notes"
    assert run.finished_at is not None
    assert run.finished_at >= run.started_at
