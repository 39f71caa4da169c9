import math
from types import SimpleNamespace

import pytest

from undulator_cs.model import PhysicalParams
from undulator_cs.stitching import build_and_propagate


def run_config(n_periods=1, alpha_I=0.5, H=1.0, params=None, drift_duration=None, samples=50, C1_scale=1.0):
    return SimpleNamespace(
        params=params or PhysicalParams(),
        H=H,
        alpha_I=alpha_I,
        n_periods=n_periods,
        drift_duration=drift_duration,
        samples_per_region=samples,
        C1_scale=C1_scale,
    )


@pytest.fixture(scope="session")
def unit():
    return PhysicalParams()


@pytest.fixture(scope="session")
def run1():
    return build_and_propagate(run_config(1))


@pytest.fixture(scope="session")
def run5():
    return build_and_propagate(run_config(5))


T1 = math.pi / 3


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
