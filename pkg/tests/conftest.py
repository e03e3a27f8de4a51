from pathlib import Path

import pytest

from emofuse.synth import write_fixture

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def mixed_bundle(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("mixed"), "mixed", seed=0)


@pytest.fixture(scope="session")
def agree_bundle(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("agree"), "agree", seed=1, n_clips=4)


@pytest.fixture(scope="session")
def contrast_bundle(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("contrast"), "contrast", seed=2, n_clips=4)


# -- acceptance reporting ------------------------------------------------------

_CRITERIA: list[tuple[str, str, float]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA.append((marker.args[0], "PASS" if rep.passed else "FAIL", rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, seconds in _CRITERIA:
        terminalreporter.write_line(f"{status}  {name}  ({seconds:.2f} s)")
