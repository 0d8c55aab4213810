from __future__ import annotations

import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
WWII = FIXTURES / "wwii"

# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def wwii_dir(tmp_path: Path) -> Path:
    """A private copy of the WWII fixture so runs never write into the repo."""
    dest = tmp_path / "wwii"
    shutil.copytree(WWII, dest, ignore=shutil.ignore_patterns("out"))
    return dest


@pytest.fixture(scope="session")
def wwii_output(tmp_path_factory) -> Path:
    """One full pipeline run over the WWII fixture, shared by read-only tests."""
    from eventforge.config import load_config
    from eventforge.pipeline import run_pipeline

    dest = tmp_path_factory.mktemp("wwii-run") / "wwii"
    shutil.copytree(WWII, dest, ignore=shutil.ignore_patterns("out"))
    cfg = load_config(dest / "pipeline.toml")
    run_pipeline(cfg)
    return cfg.output


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
