"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_RESULTS = {}


@pytest.fixture
def measured(request):
    """Attach a short measurement string to the current criterion line."""
    def note(text):
        request.node.user_properties.append(("measured", text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, title = mark.args
    entry = _RESULTS.setdefault(n, {"title": title, "passed": True, "notes": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["notes"] += [v for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        e = _RESULTS[n]
        status = "PASS" if e["passed"] else "FAIL"
        notes = "; ".join(e["notes"])
        terminalreporter.write_line(f"criterion {n:2d} {status}  {e['title']}" + (f"  [{notes}]" if notes else ""))
