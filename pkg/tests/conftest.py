import numpy as np
import pytest

from sarnav.pipeline import form_images, make_rc
from sarnav.scenario import default_scenario


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def canonical_rc(scenario):
    return make_rc(scenario)


@pytest.fixture(scope="session")
def reference_image(scenario, canonical_rc):
    ref, _ = form_images(scenario, canonical_rc)
    return ref


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
