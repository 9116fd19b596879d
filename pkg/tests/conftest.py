"""Shared fixtures; the expensive exact trajectories are computed once per process."""
import functools

import numpy as np
import pytest

from tcqfi.exact_sim import QecSchedule, simulate
from tcqfi.validation import fock_params, coherent_params

LONG_GRID = np.linspace(0.0, 10.0, 41)
# Corrections keep adding excitations, so the field climbs above the uncorrected
# truncation rule (220 for |alpha| = 10); 250 keeps the leakage below 1e-9 to t = 10.
CORRECTED_NMAX = 250


@functools.lru_cache(maxsize=None)
def coherent_exact_run(eps):
    """Exact corrected trajectory at the coherent-field reference parameters on ``LONG_GRID``."""
    return simulate(coherent_params(n_max=CORRECTED_NMAX), QecSchedule(eps), LONG_GRID)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fock():
    return fock_params()


@pytest.fixture(scope="session")
def coherent():
    return coherent_params()


@pytest.fixture(scope="session")
def coherent_exact():
    return coherent_exact_run
