import dataclasses

import numpy as np
import pytest

from bec_optomech.params import LabInputs, derive_params

#: criterion lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p():
    """Package defaults (calibrated wavelength, detuning 2.7 omega_m)."""
    return derive_params()


@pytest.fixture(scope="session")
def p780():
    """Same set-up with the 780 nm wavelength."""
    return derive_params(LabInputs(lambda_c=780e-9))


@pytest.fixture(scope="session")
def p_fast():
    """Atoms detuned from the mirror: no dark mode, slowest rate ~0.005 kappa."""
    return derive_params(LabInputs(omega_b_over_omega_m=1.3))


@pytest.fixture(scope="session")
def p_sym(p):
    """Exactly mirror/atom symmetric: no mechanical damping, zero temperature."""
    return dataclasses.replace(p, gamma=0.0, nbar=0.0)
