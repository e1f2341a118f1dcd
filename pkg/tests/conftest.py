import os

import pytest

from deepresearch import _accel

# one line per acceptance criterion, filled by the hooks below
_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    n, title, gating = marker
    entry = _CRITERIA.setdefault(n, {"title": title, "gating": gating, "outcomes": [], "notes": []})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["outcomes"].append(report.outcome)
    for name, text in report.user_properties:
        if name == "note" and report.when == "call":
            entry["notes"].append(text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        n, title = marker.args
        report._criterion = (n, title, marker.kwargs.get("gating", True))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section(f"acceptance criteria (backend: {_accel.backend()})")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        outs = e["outcomes"]
        if "failed" in outs:
            status = "FAIL"
        elif outs and all(o == "skipped" for o in outs):
            status = "NOT RUN"
        else:
            status = "PASS"
        if not e["gating"] and status != "NOT RUN":
            status = f"REPORTED ({status.lower()})"
        tr.write_line(f"criterion {n}: {status}  {e['title']}")
        for note in e["notes"]:
            for line in note.splitlines():
                tr.write_line(f"    {line}")


@pytest.fixture
def tmp_corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    return d


def pytest_report_header(config):
    return f"deepresearch kernels: {_accel.backend()} (DR_DISABLE_NUMBA={os.environ.get('DR_DISABLE_NUMBA', '')})"
