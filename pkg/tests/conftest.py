import pytest

from gridsplit import _kernels

BACKENDS = ["numba", "numpy"] if _kernels.NUMBA_AVAILABLE else ["numpy"]

_criteria: dict[int, dict] = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    prev = _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    (number,) = marker.args
    title = getattr(item.module, "CRITERIA", {}).get(number, "")
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    if rep.when == "call" or failed:
        entry = _criteria.setdefault(number, {"title": title, "passed": 0, "failed": 0})
        entry["failed" if failed else "passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = "FAIL" if e["failed"] else "PASS"
        total = e["passed"] + e["failed"]
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}  ({e['passed']}/{total} checks)")
