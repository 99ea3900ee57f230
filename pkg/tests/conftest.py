import re

import pytest

_criteria: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or rep.failed or rep.skipped:
        status = "PASS" if rep.passed and not hasattr(rep, "wasxfail") else "FAIL"
        note = f" [{item.name}: {rep.wasxfail}]" if hasattr(rep, "wasxfail") else ""
        _criteria.setdefault(marker.args[0], []).append(status + note)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    key = lambda label: int(re.match(r"AC(\d+)", label).group(1))
    for label in sorted(_criteria, key=key):
        results = _criteria[label]
        ok = all(r == "PASS" for r in results)
        notes = "".join(r[4:] for r in results if r != "PASS")
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}{notes}")
