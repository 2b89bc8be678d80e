"""Multipath field-response channel model.

A transmit element at 2-D position t sees each propagation path of user k
through the phase 2*pi/wavelength * t.rho, where rho maps the path's
elevation/azimuth pair onto the placement plane.  The per-user channel is
the coherent sum over paths

    h_k(t) = sum_l gain_{k,l} * exp(-1j * 2*pi/wavelength * t.rho_{k,l})

and stacking h_k over the N element positions gives the N x K channel
matrix used by the beamforming and placement optimizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

SPEED_OF_LIGHT = 299792458.0  # m/s


def direction_vector(elevation: float, azimuth: float) -> np.ndarray:
    """Map a path's (elevation, azimuth) onto the 2-D placement plane.

    Returns [sin(elevation)*cos(azimuth), cos(elevation)]; both components
    lie in [-1, 1].  Angles must be in [0, pi].
    """
    if not (0.0 <= elevation <= np.pi):
        raise ValueError(f"elevation {elevation} outside [0, pi]")
    if not (0.0 <= azimuth <= np.pi):
        raise ValueError(f"azimuth {azimuth} outside [0, pi]")
    return np.array([np.sin(elevation) * np.cos(azimuth), np.cos(elevation)])


@dataclass(frozen=True)
class PathSet:
    """Multipath description for one user: complex gains and path directions."""

    gains: np.ndarray       # (L,) complex path responses
    elevations: np.ndarray  # (L,) radians in [0, pi]
    azimuths: np.ndarray    # (L,) radians in [0, pi]

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=complex)
        elev = np.asarray(self.elevations, dtype=float)
        azim = np.asarray(self.azimuths, dtype=float)
        if gains.ndim != 1 or gains.size < 1:
            raise ValueError("a PathSet needs at least one path")
        if elev.shape != gains.shape or azim.shape != gains.shape:
            raise ValueError("gains, elevations and azimuths must have equal length")
        if np.any(elev < 0) or np.any(elev > np.pi) or np.any(azim < 0) or np.any(azim > np.pi):
            raise ValueError("path angles must lie in [0, pi]")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "elevations", elev)
        object.__setattr__(self, "azimuths", azim)
        rho = np.column_stack([np.sin(elev) * np.cos(azim), np.cos(elev)])
        object.__setattr__(self, "rho", rho)

    rho: np.ndarray = field(init=False, repr=False)  # (L, 2) direction vectors

    @property
    def n_paths(self) -> int:
        return self.gains.size


@dataclass(frozen=True)
class Scenario:
    """One channel realization: per-user path sets plus link budget terms.

    Immutable after construction; safe to share across threads/processes.
    """

    paths: tuple            # K PathSet objects
    noise_power: np.ndarray  # (K,) receiver noise, watts
    wavelength: float        # m
    path_gain: np.ndarray    # (K,) linear path-loss gain mu_k
    distance_km: np.ndarray  # (K,) BS-user distance

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        object.__setattr__(self, "noise_power", np.asarray(self.noise_power, dtype=float))
        object.__setattr__(self, "path_gain", np.asarray(self.path_gain, dtype=float))
        object.__setattr__(self, "distance_km", np.asarray(self.distance_km, dtype=float))
        if len(self.paths) < 1:
            raise ValueError("scenario needs at least one user")
        if self.noise_power.shape != (self.n_users,):
            raise ValueError("noise_power must have one entry per user")
        if np.any(self.noise_power <= 0) or self.wavelength <= 0 or np.any(self.path_gain <= 0):
            raise ValueError("noise powers, path gains and wavelength must be positive")

    @property
    def n_users(self) -> int:
        return len(self.paths)

    @property
    def kwave(self) -> float:
        """Spatial angular frequency 2*pi/wavelength."""
        return 2.0 * np.pi / self.wavelength

    @cached_property
    def stacked_paths(self):
        """All users' paths flattened for the kernels: (gains, rho, offsets)."""
        gains = np.concatenate([p.gains for p in self.paths])
        rho = np.ascontiguousarray(np.vstack([p.rho for p in self.paths]))
        offsets = np.zeros(self.n_users + 1, dtype=np.intp)
        np.cumsum([p.n_paths for p in self.paths], out=offsets[1:])
        return gains, rho, offsets


@dataclass(frozen=True)
class AntennaLayout:
    """Positions of the N movable elements inside the square region.

    region_size is the side length A of [0, A]^2 and min_spacing the
    pairwise minimum distance D.
    """

    positions: np.ndarray  # (N, 2) m
    region_size: float
    min_spacing: float

    def __post_init__(self):
        pos = np.ascontiguousarray(np.atleast_2d(np.asarray(self.positions, dtype=float)))
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (N, 2) array")
        object.__setattr__(self, "positions", pos)

    @property
    def n_antennas(self) -> int:
        return self.positions.shape[0]

    def is_valid(self) -> bool:
        """True iff every element is inside the region and pairwise spacing >= D."""
        pos = self.positions
        if np.any(pos < 0) or np.any(pos > self.region_size):
            return False
        for i in range(len(pos)):
            d = np.linalg.norm(pos[i + 1:] - pos[i], axis=1)
            if np.any(d < self.min_spacing):
                return False
        return True


def channel_response(t, paths: PathSet, wavelength: float) -> complex:
    """Coherent path sum h(t) at a single position t.

    The magnitude is bounded by sum_l |gain_l|; for a single path it is
    independent of t entirely.
    """
    t = np.asarray(t, dtype=float)
    kwave = 2.0 * np.pi / wavelength
    phases = kwave * (paths.rho @ t)
    return complex(np.sum(paths.gains * np.exp(-1j * phases)))


def channel_matrix(layout: AntennaLayout, scenario: Scenario) -> np.ndarray:
    """Stack per-element responses into the (N, K) channel matrix H.

    H[n, k] equals channel_response(positions[n], paths of user k).
    """
    gains, rho, offsets = scenario.stacked_paths
    return kernels.channel_gains(layout.positions, gains, rho, offsets, scenario.kwave)


def path_loss_db(distance_km: float, carrier_ghz: float) -> float:
    """Free-space path loss: 92.5 + 20*log10(f/GHz) + 20*log10(d/km), in dB."""
    if distance_km <= 0 or carrier_ghz <= 0:
        raise ValueError("distance and carrier frequency must be positive")
    return 92.5 + 20.0 * np.log10(carrier_ghz) + 20.0 * np.log10(distance_km)


def _draw_distances_km(config, rng: np.random.Generator) -> np.ndarray:
    """Sample BS-user distances from the configured drop model."""
    if config.drop_model == "disc":
        # uniform over the annulus [exclusion, radius]: area-uniform radius
        r0, r1 = config.cell_exclusion_m, config.cell_radius_m
        u = rng.uniform(size=config.n_users)
        return np.sqrt(u * (r1**2 - r0**2) + r0**2) / 1000.0
    raise ValueError(f"unknown drop model {config.drop_model!r}")


def sample_scenario(config, seed) -> Scenario:
    """Draw a random propagation scenario; a pure function of (config, seed).

    Per user: distance from the drop model, linear path gain mu from the
    free-space loss, L path angles uniform on [0, pi], and complex gains
    i.i.d. CN(0, mu/L) so the expected total path power is mu.
    """
    rng = np.random.default_rng(seed)
    dist = _draw_distances_km(config, rng)
    mu = 10.0 ** (-np.array([path_loss_db(d, config.carrier_ghz) for d in dist]) / 10.0)
    n_paths = config.n_paths
    paths = []
    for k in range(config.n_users):
        elev = rng.uniform(0.0, np.pi, size=n_paths)
        azim = rng.uniform(0.0, np.pi, size=n_paths)
        scale = np.sqrt(mu[k] / (2.0 * n_paths))
        gains = scale * (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths))
        paths.append(PathSet(gains, elev, azim))
    noise = np.full(config.n_users, config.noise_w)
    return Scenario(
        paths=tuple(paths),
        noise_power=noise,
        wavelength=config.wavelength_m,
        path_gain=mu,
        distance_km=dist,
    )
