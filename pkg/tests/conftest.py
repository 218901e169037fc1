import numpy as np
import pytest

from rcspatial.data.synthetic import SiteGrid, gen_synthetic

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    desc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "SKIPPED" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _CRITERIA[label] = (status, desc)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s)):
        status, desc = _CRITERIA[label]
        terminalreporter.write_line(f"criterion {label}: {status:7s} {desc}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_field():
    """Synthetic longitude band around (35, 139), 2016-2021."""
    grid = SiteGrid.cross((35.0, 139.0), lon_offsets=[-10, -3, -1, 1, 3, 10])
    return gen_synthetic(grid, driver_seed=5, lag_per_degree=0.5, years=6, start_year=2016)
