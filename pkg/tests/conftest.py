"""Shared fixtures and the acceptance-criteria reporter.

test_acceptance.py records one verdict per criterion through the
`acceptance` fixture; a summary section with one PASS/FAIL line per
criterion is printed at the end of the run.
"""

import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record a criterion verdict, then assert it."""

    def record(criterion: str, ok: bool, detail: str):
        previous = _RESULTS.get(criterion)
        if previous is not None:
            ok = ok and previous[0]
            detail = f"{previous[1]}; {detail}"
        _RESULTS[criterion] = (bool(ok), detail)
        assert ok, f"{criterion}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS):
        ok, detail = _RESULTS[criterion]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{criterion}: {verdict} - {detail}")
