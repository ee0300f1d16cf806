import pytest

from subricci.models import BUILTIN, lifted

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def lf_cache():
    cache = {}

    def get(name):
        if name not in cache:
            model = BUILTIN[name]()
            cache[name] = (model, lifted(model))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def heis(lf_cache):
    return lf_cache("heisenberg")


@pytest.fixture(scope="session")
def hopf(lf_cache):
    return lf_cache("hopf")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    node = report.nodeid
    if "test_acceptance.py::test_criterion_" not in node:
        return
    num = int(node.split("test_criterion_")[1].split("_")[0])
    title = node.split("::")[-1]
    _ACCEPTANCE[num] = (report.outcome, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        outcome, title = _ACCEPTANCE[num]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {mark}  ({title})")
