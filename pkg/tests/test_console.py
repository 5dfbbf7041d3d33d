# pylint: disable=all

from pathlib import Path

import pytest
from pytest import MonkeyPatch

from pnrmon.console import Console, FontColour

from .mocks import *


def _log_text(directory: Path) -> str:
    files = list(directory.glob("*.log"))
    assert len(files) == 1
    return files[0].read_text(encoding="utf-8")


def test_debug_is_gated(capsys: pytest.CaptureFixture) -> None:
    Console.debug("eps_signal=2.5e-4")
    assert capsys.readouterr().out == ""

    Console.configure(log_dir=None, debug=True)
    Console.debug("eps_signal=2.5e-4")
    out = capsys.readouterr().out
    assert "[DEBUG]" in out
    assert "eps_signal=2.5e-4" in out


def test_messages_go_to_log_file(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    Console.configure(log_dir=tmp_path / "logs")
    Console.info("Sweep finished.")
    Console.specific("pnr_finite", "RUN", FontColour.PINK)
    Console.warn("Degenerate bounds at 120 km.")

    text = _log_text(tmp_path / "logs")
    assert text.startswith("DEBUG = False\n")
    assert "<INFO> Sweep finished." in text
    assert "<RUN> pnr_finite" in text
    assert "WARNING" in text
    assert "<WARN> Degenerate bounds at 120 km." in text
    assert "[INFO]" in capsys.readouterr().out


def test_error_logs_traceback(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    Console.configure(log_dir=tmp_path)
    try:
        raise ValueError("bad window")
    except ValueError as e:
        Console.error("Error while using run.", exception=e)

    text = _log_text(tmp_path)
    assert "<ERROR> Error while using run." in text
    assert "ValueError: bad window" in text
    assert "Traceback" in capsys.readouterr().out


def test_no_log_file_when_disabled(tmp_path: Path, monkeypatch: MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    Console.configure(log_dir=None)
    Console.info("Sweep finished.")
    Console.error("Error while using run.")
    assert list(tmp_path.rglob("*.log")) == []
