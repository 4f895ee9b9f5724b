import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wideband_afdm.daf_core import ChirpParams, SystemConfig

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small():
    """N=8 frame with a 500 Hz spacing and an arbitrary c1."""
    return SystemConfig(8, 500.0, 6000.0, "qpsk"), ChirpParams(0.3)


_CRITERIA_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request, capsys):
    """``criterion(n, ok, detail)`` prints one pass/fail line and keeps it for the summary."""
    lines = request.config.stash.setdefault(_CRITERIA_KEY, [])

    def record(n: int, ok: bool, detail: str):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
