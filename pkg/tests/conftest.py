import pytest

from zres.nearhalf import ResonatorConfig, build_prime_band, build_resonator_near_half
from zres.params import ProgressionParams, SigmaMode, sigma_of


@pytest.fixture(scope="session")
def config45():
    return ResonatorConfig(gamma=0.45, b=1.8, kappa=0.45)


@pytest.fixture(scope="session")
def band_1e3():
    return build_prime_band(10 ** 3, 0.45)


@pytest.fixture(scope="session")
def band_1e6():
    return build_prime_band(10 ** 6, 0.5)


@pytest.fixture(scope="session")
def params_1e3():
    return ProgressionParams(alpha=1.0, n_range=10 ** 3, j=0, a_param=0.5,
                             sigma_mode=SigmaMode.NEAR_HALF)


@pytest.fixture(scope="session")
def res_1e3(params_1e3, config45, band_1e3):
    return build_resonator_near_half(10 ** 3, 10 ** 3, config45,
                                     sigma=sigma_of(params_1e3), band=band_1e3)


@pytest.fixture(scope="session")
def params_1e4():
    return ProgressionParams(alpha=1.0, n_range=10 ** 4, j=0, a_param=0.5,
                             sigma_mode=SigmaMode.NEAR_HALF)


@pytest.fixture(scope="session")
def res_1e4(params_1e4, config45):
    return build_resonator_near_half(10 ** 4, 10 ** 4, config45,
                                     sigma=sigma_of(params_1e4))
