import numpy as np
import pytest

from twosource.basis import build_derivative_basis
from twosource.psf import PsfSpec

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gauss():
    return PsfSpec.gaussian(1.0)


@pytest.fixture(scope="session")
def gauss_wide():
    return PsfSpec.gaussian(1.0, half_width=12.0, n_points=6144)


@pytest.fixture(scope="session")
def basis3(gauss):
    return build_derivative_basis(gauss, 0.0, 3)


@pytest.fixture(scope="session")
def basis10(gauss):
    return build_derivative_basis(gauss, 0.0, 10)


def sech_psf(half_width=25.0, n_points=8192):
    x = np.linspace(-half_width, half_width, n_points)
    return PsfSpec.from_samples(x, 1 / (np.sqrt(2) * np.cosh(x)))


@pytest.fixture(scope="session")
def sech():
    return sech_psf()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
