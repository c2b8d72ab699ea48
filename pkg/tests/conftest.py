import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gaitevents.synthgait import GaitParams, generate_cohort  # noqa: E402


@pytest.fixture(scope="session")
def small_cohort():
    """Six healthy subjects, two 12 s trials each."""
    return generate_cohort(6, 0, GaitParams(seed=3), duration_s=12.0)


@pytest.fixture(scope="session")
def mixed_cohort():
    return generate_cohort(4, 4, GaitParams(seed=5), duration_s=12.0)


# ----------------------------------------------------------------------------
# one summary line per acceptance criterion

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1][len("test_criterion_"):]
        number, _, title = name.partition("_")
        detail = dict(report.user_properties).get("measured", "")
        _criteria[int(number)] = ("PASS" if report.passed else "FAIL", f"{title.replace('_', ' ')}  {detail}".strip())


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, text = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {text}")
