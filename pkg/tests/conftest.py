import pytest

from labseq.demo import COMPARE_DEMO, MICHAEL_DEMO, load_demo
from labseq.pump import PumpConfig, serve

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    ok = rep.passed and not (rep.when == "setup" and rep.skipped)
    prev = _criteria.get(number, (title, True))
    if rep.when == "call" or not ok:
        _criteria[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def compare_demo():
    return load_demo(COMPARE_DEMO)


@pytest.fixture(scope="session")
def michael_demo():
    return load_demo(MICHAEL_DEMO)


@pytest.fixture
def pump_server():
    server = serve(PumpConfig(), "127.0.0.1:0")
    yield server
    server.close()
