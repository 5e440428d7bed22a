"""Shared fixtures: the reference wave and the objects built on it."""

import pytest

from detonation_evans.gasdyn.thermo import WaveParams
from detonation_evans.linop.spectral_system import SpectralSystem
from detonation_evans.profile.traveling_wave import solve_profile
from detonation_evans.znd.znd_profile import calibrate_k


def reference_params(**changes) -> WaveParams:
    """The bench wave: e+ = 6.23e-2, q = 6.23e-1, E_A = 3.1, Gamma = 0.2, nu = d = kappa = 0.1."""
    values = dict(
        e_plus=6.23e-2,
        q=6.23e-1,
        E_A=3.1,
        Gamma=0.2,
        nu=0.1,
        d=0.1,
        kappa_v=0.1,
        k=1.0,
        T_ig=6.64e-2,
    )
    values.update(changes)
    return WaveParams(**values)


@pytest.fixture(scope="session")
def base_params() -> WaveParams:
    return reference_params()


@pytest.fixture(scope="session")
def calibrated_params(base_params) -> WaveParams:
    return base_params.with_changes(k=calibrate_k(base_params))


@pytest.fixture(scope="session")
def bench_profile(calibrated_params):
    return solve_profile(calibrated_params)


@pytest.fixture(scope="session")
def stable_profile(base_params):
    params = base_params.with_changes(E_A=2.0)
    params = params.with_changes(k=calibrate_k(params))
    return solve_profile(params)


@pytest.fixture(scope="session")
def stable_system(stable_profile) -> SpectralSystem:
    return SpectralSystem(stable_profile)
