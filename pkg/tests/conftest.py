import sys

import pytest
from hypothesis import settings

sys.set_int_max_str_digits(0)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.fixture(scope="session")
def fx():
    from rkcert import fixtures
    return fixtures


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.skipped or rep.failed):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": [], "failed": [], "skipped": []})
    if rep.skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        entry["skipped"].append(f"{item.name}: {reason.removeprefix('Skipped: ')}")
    elif rep.failed:
        entry["failed"].append(item.name)
    else:
        entry["passed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        if e["failed"]:
            verdict = "FAIL"
        elif e["passed"]:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        line = f"criterion {n:2d} {verdict}  {e['title']}"
        if e["failed"]:
            line += f"  [failed: {', '.join(e['failed'])}]"
        if e["skipped"]:
            line += f"  [skipped: {'; '.join(e['skipped'])}]"
        tr.write_line(line)
