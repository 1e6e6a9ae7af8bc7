import numpy as np
import pytest

from ilqr_track import BellPathParams, CostWeights, DiffDriveModel, LinearModel, Reference, generate_bell

from oracles import double_integrator


@pytest.fixture(scope="session")
def bell_path():
    return generate_bell(BellPathParams())


@pytest.fixture
def diff_drive():
    return DiffDriveModel(0.1)


@pytest.fixture
def weights():
    return CostWeights.default()


@pytest.fixture
def lq_problem():
    """Double integrator regulated to the origin: N=50, Q=I, R=I, Qf=10I."""
    A, B = double_integrator(0.1)
    N = 50
    model = LinearModel(A, B, dt=0.1)
    w = CostWeights(np.eye(4), np.eye(2), 10.0 * np.eye(4))
    ref = Reference(np.zeros((N, 4)), np.zeros((N - 1, 2)))
    x0 = np.array([1.0, -2.0, 0.5, 0.3])
    return model, w, ref, x0


_criteria = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    failed = report.failed
    prev = _criteria.get(number, (title, False))
    _criteria[number] = (title, prev[1] or failed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, failed = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'FAIL' if failed else 'PASS'}  {title}")
