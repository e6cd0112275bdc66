# tests/test_sysmon.py
import logging
import time

from sysmon import clear_warnings, elapsed_seconds, format_elapsed, get_recent_warnings, install_log_capture, set_run_start
from utils import format_duration


def test_warnings_are_captured():
    install_log_capture()
    install_log_capture()
    clear_warnings()
    log = logging.getLogger("dmlab.test")
    log.info("quiet")
    log.warning("increments grow")
    recent = get_recent_warnings()
    assert [w["msg"] for w in recent] == ["increments grow"]
    assert recent[0]["level"] == "WARNING"
    clear_warnings()
    assert get_recent_warnings() == []


def test_elapsed():
    set_run_start(time.time() - 5)
    assert 5.0 <= elapsed_seconds() < 60.0
    assert format_elapsed().endswith("s")


def test_format_duration():
    assert format_duration(1.234) == "1.23s"
    assert format_duration(3725) == "1h 2m 5s"
