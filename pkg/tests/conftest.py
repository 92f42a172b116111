import numpy as np
import pytest

from spinotto.cycle import EngineParams, Schedule

# Reference parameter set used throughout: two coupled spins, J = 2,
# baths at 7.5 / 1.5, equal contact rates, optimal-power schedule.
REF = dict(J=2.0, omega_a=5.08364, omega_b=12.6355, T_h=7.5, T_c=1.5,
           Gamma_h=1.16748, Gamma_c=1.16748, gamma_h=-0.05, gamma_c=-0.06)
REF_SCHEDULE = (1.0795, 0.01478, 1.0088, 0.0069)
REF_TAU_TOTAL = 2.10998
LUB = dict(Lambda_ba=1.28, Lambda_ab=0.64)
LUB_STRONG = dict(Lambda_ba=122.88, Lambda_ab=61.44)


@pytest.fixture(scope="session")
def ref_params():
    return EngineParams(**REF)


@pytest.fixture(scope="session")
def lub_params():
    return EngineParams(**REF, **LUB)


@pytest.fixture(scope="session")
def strong_params():
    return EngineParams(**REF, **LUB_STRONG)


@pytest.fixture(scope="session")
def ref_schedule():
    return Schedule(*REF_SCHEDULE)


@pytest.fixture()
def rng():
    return np.random.default_rng(20060209)
