import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mln import (  # noqa: E402
    Field,
    GaussianGenerator,
    Grid3,
    ModelParams,
    PotentialSpec,
    SolverConfig,
    find_negative_energy_point,
    find_solutions,
    mountain_pass_search,
    probe_sphere_infimum,
)

BASE = dict(kin=1.0, omega=1.0, alpha=-1.0, s=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid16():
    return Grid3(16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(32, 16.0)


@pytest.fixture(scope="session")
def params4():
    return ModelParams(p=4.0, **BASE)


@pytest.fixture(scope="session")
def params5():
    return ModelParams(p=5.0, **BASE)


@pytest.fixture(scope="session")
def gaussian64():
    g = Grid3(64, 16.0)
    return Field(g, np.exp(-0.5 * g.radius**2))


@pytest.fixture(scope="session")
def harmonic():
    return PotentialSpec("harmonic", 1.0, 1.0)


# expensive solver runs, shared by the module tests and the acceptance suite


@pytest.fixture(scope="session")
def mp_run(params4, grid32):
    probe = probe_sphere_infimum(params4, None, 100, grid32)
    ep = find_negative_energy_point(GaussianGenerator(1.0, 1.6), params4, grid32, rho=probe.rho)
    rep = mountain_pass_search(params4, ep.e, SolverConfig(), delta=probe.delta)
    return probe, ep, rep


@pytest.fixture(scope="session")
def deflation_run(params5):
    grid = Grid3(32, 8.0)
    ep = find_negative_energy_point(GaussianGenerator(1.0, 0.8), params5, grid)
    return ep, find_solutions(params5, ep.e, SolverConfig())


@pytest.fixture(scope="session")
def potential_run(params4, grid32, harmonic):
    vals = harmonic.sample(grid32).values
    probe = probe_sphere_infimum(params4, None, 100, grid32, potential=vals)
    ep = find_negative_energy_point(GaussianGenerator(1.0, 1.6), params4, grid32, rho=probe.rho, potential=vals, v0=harmonic.v0)
    rep = mountain_pass_search(params4, ep.e, SolverConfig(), potential=harmonic, delta=probe.delta)
    return probe, ep, rep


@pytest.fixture(scope="session")
def oscillator_spectrum():
    from mln import eigen_decompose

    prm = ModelParams(1.0, 1.0, 0.0, 0.5, 4.0)
    return eigen_decompose(prm, PotentialSpec("harmonic", 0.0, 1.0), Grid3(64, 16.0), K=10)
