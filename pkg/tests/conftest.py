"""Shared fixtures and random-instance builders."""

import numpy as np
import pytest

from mamiso import PathSet, Scenario, kernels

WAVELENGTH = 0.0599584916  # 5 GHz carrier


def rand_paths(rng, n_paths=4, power=1.0):
    """Unit-scale multipath set: total expected path power = ``power``."""
    scale = np.sqrt(power / (2.0 * n_paths))
    gains = scale * (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths))
    return PathSet(gains, rng.uniform(0, np.pi, n_paths), rng.uniform(0, np.pi, n_paths))


def rand_scenario(rng, n_users=3, n_paths=3, noise=1.0, power=1.0, wavelength=WAVELENGTH):
    """Scenario with unit-scale gains; convenient for conditioning-free math tests."""
    paths = tuple(rand_paths(rng, n_paths, power) for _ in range(n_users))
    return Scenario(paths=paths,
                    noise_power=np.full(n_users, noise),
                    wavelength=wavelength,
                    path_gain=np.full(n_users, power),
                    distance_km=np.full(n_users, 0.1))


def rand_channel(rng, n, k, scale=1.0):
    return scale * (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test under every available kernel backend, then restore."""
    previous = kernels.backend()
    kernels.use(request.param)
    yield request.param
    kernels.use(previous)
