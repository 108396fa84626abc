import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oobe_mc.scenario import Scenario  # noqa: E402


@pytest.fixture
def small_scenario():
    """Sparse network so whole runs stay fast."""
    return Scenario(gnb_density_per_km2=0.01, trials=40, master_seed=7)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
