"""Shared hooks: prints one [PASS]/[FAIL]/[SKIP] line per acceptance
criterion at the end of the run, regardless of capture settings."""

import pytest

ACCEPTANCE_DETAILS = {}
_ACCEPTANCE_OUTCOMES = {}


@pytest.fixture
def record(request):
    """Stash a one-line result detail for the acceptance summary."""

    def _record(detail=""):
        ACCEPTANCE_DETAILS[request.node.name] = detail

    return _record


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE_OUTCOMES[name] = "PASS" if report.passed else \
            ("SKIP" if report.skipped else "FAIL")
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_OUTCOMES[name] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_OUTCOMES.items():
        detail = ACCEPTANCE_DETAILS.get(name, "")
        suffix = f": {detail}" if detail else ""
        terminalreporter.write_line(f"[{outcome}] {name}{suffix}")
