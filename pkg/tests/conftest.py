import sys

import pytest

from minishrink import datasets


@pytest.fixture(scope="session")
def duktape():
    return datasets.load_duktape86()


@pytest.fixture(scope="session")
def costs(duktape):
    return datasets.load_duktape86_costs(duktape)


@pytest.fixture(scope="session")
def devices5():
    return datasets.load_devices5()


@pytest.fixture(scope="session")
def apps(duktape):
    return datasets.load_sunspider_apps(duktape)


@pytest.fixture(scope="session")
def cube(duktape):
    return datasets.load_sunspider_app("3d-cube", duktape)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
