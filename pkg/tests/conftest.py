"""Shared fixtures for the simulator test suite."""

from __future__ import annotations

import pytest

from specsim.config import LevelParams, SimConfig


def small_config(mode: str = "specbox", cores: int = 2, smt: int = 1, **overrides) -> SimConfig:
    """A deliberately tiny hierarchy so random traces hit real set
    contention (the default geometry would spread a small working set
    over thousands of sets and never exercise eviction or suspension)."""
    cfg = SimConfig(
        mode=mode,
        cores=cores,
        smt=smt,
        l1i=LevelParams(4096, 4, 2),   # 16 sets
        l1d=LevelParams(4096, 8, 2),   # 8 sets
        l2=LevelParams(32768, 16, 3),  # 32 sets
        **overrides,
    )
    return cfg.validate()


@pytest.fixture
def cfg() -> SimConfig:
    return small_config()


@pytest.fixture
def baseline_cfg() -> SimConfig:
    return small_config(mode="baseline")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(rep, "when", "call") != "call" and label == "PASS":
                continue
            rows[nodeid.split("::")[-1]] = label
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(rows):
        terminalreporter.write_line(f"{rows[name]:>4}  {name}")
