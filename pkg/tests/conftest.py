import math

import pytest

from acceptance_report import RESULTS

from lfac.cable_params import builtin_design
from lfac.poly_fit import fit_design

HZ = 2 * math.pi


@pytest.fixture(scope="session")
def design_230():
    return builtin_design("cable_230kv")


@pytest.fixture(scope="session")
def design_138():
    return builtin_design("cable_138kv")


@pytest.fixture(scope="session")
def fitted_230(design_230):
    """(model, samples) for the 135 km, 230 kV cable on the default grid."""
    return fit_design(design_230)


@pytest.fixture(scope="session")
def fitted_138(design_138):
    return fit_design(design_138)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
