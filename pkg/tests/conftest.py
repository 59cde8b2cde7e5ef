import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def report(num, title, ok, elapsed, limit, detail=""):
        ok_time = elapsed < limit
        status = "PASS" if ok and ok_time else "FAIL"
        line = f"{status} [{num:2d}] {title}: {detail} ({elapsed:.2f}s / limit {limit:g}s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert ok_time, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
