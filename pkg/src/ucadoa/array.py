"""Uniform circular array model.

Geometry, steering vectors, the circulant-symmetric mutual coupling matrix
and synthetic snapshot generation for a UCA of omnidirectional sensors.

Angles are in degrees at the public surface: azimuth in [0, 360) measured
counterclockwise from the x-axis, elevation in [0, 90] measured down from
the z-axis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ModelError(ValueError):
    """Raised when array/source/coupling parameters are out of domain."""


@dataclass(frozen=True)
class ArrayConfig:
    """UCA geometry.

    Parameters
    ----------
    n_sensors : int
        Number of sensors N (at least 3).
    radius : float
        Array radius, in units of ``wavelength``.
    wavelength : float, optional
        Carrier wavelength. Defaults to 1, i.e. ``radius`` is in wavelengths.
    """

    n_sensors: int
    radius: float
    wavelength: float = 1.0

    def __post_init__(self):
        if int(self.n_sensors) != self.n_sensors or self.n_sensors < 3:
            raise ModelError(f"n_sensors must be an integer >= 3, got {self.n_sensors}")
        if not self.radius > 0:
            raise ModelError(f"radius must be positive, got {self.radius}")
        if not self.wavelength > 0:
            raise ModelError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def k0r(self) -> float:
        """Electrical radius k0*r."""
        return self.wavenumber * self.radius * self.wavelength

    @property
    def sensor_angles(self) -> np.ndarray:
        """Angular displacement of each sensor from the x-axis, in radians."""
        return 2 * np.pi * np.arange(self.n_sensors) / self.n_sensors

    @property
    def n_coupling(self) -> int:
        """Number of free coupling coefficients L."""
        return coupling_length(self.n_sensors)


def coupling_length(n_sensors: int) -> int:
    """L = N/2 + 1 for even N, (N + 1)/2 for odd N."""
    if n_sensors % 2 == 0:
        return n_sensors // 2 + 1
    return (n_sensors + 1) // 2


def _check_angles(azimuth, elevation):
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    if np.any(~np.isfinite(az)) or np.any((az < 0) | (az >= 360)):
        raise ModelError(f"azimuth must lie in [0, 360), got {azimuth}")
    if np.any(~np.isfinite(el)) or np.any((el < 0) | (el > 90)):
        raise ModelError(f"elevation must lie in [0, 90], got {elevation}")
    return az, el


@dataclass(frozen=True)
class Source:
    azimuth: float
    elevation: float
    power: float = 1.0


@dataclass(frozen=True)
class SourceSet:
    """Far-field narrowband sources (azimuth, elevation in degrees, linear power)."""

    sources: tuple[Source, ...]

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if len(self.sources) < 1:
            raise ModelError("a SourceSet needs at least one source")
        _check_angles([s.azimuth for s in self.sources], [s.elevation for s in self.sources])
        if any(s.power < 0 for s in self.sources):
            raise ModelError("source powers must be nonnegative")

    @classmethod
    def from_angles(cls, angles: Sequence[tuple[float, float]], powers=None) -> "SourceSet":
        """Build from ``(azimuth, elevation)`` pairs."""
        powers = [1.0] * len(angles) if powers is None else list(powers)
        return cls(tuple(Source(float(a), float(e), float(p)) for (a, e), p in zip(angles, powers)))

    def __len__(self):
        return len(self.sources)

    @property
    def azimuths(self) -> np.ndarray:
        return np.array([s.azimuth for s in self.sources])

    @property
    def elevations(self) -> np.ndarray:
        return np.array([s.elevation for s in self.sources])

    @property
    def powers(self) -> np.ndarray:
        return np.array([s.power for s in self.sources])

    @property
    def angles(self) -> list[tuple[float, float]]:
        return [(s.azimuth, s.elevation) for s in self.sources]

    def xi(self, cfg: ArrayConfig) -> np.ndarray:
        """k0 * r * sin(elevation) for each source."""
        return cfg.k0r * np.sin(np.deg2rad(self.elevations))


@dataclass(frozen=True, eq=False)
class CouplingVector:
    """Free coupling coefficients ``[c_1, ..., c_L]`` with ``c_1 = 1``.

    ``check_decay`` enforces the weak physical ordering
    ``|c_1| >= |c_2| >= ... >= |c_L|``. Estimated vectors are built with
    ``check_decay=False`` since noise can break the ordering.
    """

    coeffs: np.ndarray
    n_sensors: int
    check_decay: bool = field(default=True, repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        L = coupling_length(self.n_sensors)
        if c.size != L:
            raise ModelError(
                f"N={self.n_sensors} needs L={L} coupling coefficients, got {c.size}")
        if c[0] != 1:
            raise ModelError(f"c_1 must equal 1 exactly, got {c[0]}")
        if self.check_decay and np.any(np.diff(np.abs(c)) > 0):
            raise ModelError("coupling magnitudes must be non-increasing")

    @classmethod
    def identity(cls, n_sensors: int) -> "CouplingVector":
        c = np.zeros(coupling_length(n_sensors), dtype=complex)
        c[0] = 1
        return cls(c, n_sensors)

    @classmethod
    def from_leading(cls, n_sensors: int, leading: Sequence[complex]) -> "CouplingVector":
        """``c_1 = 1`` followed by ``leading``, zero-padded to length L."""
        c = np.zeros(coupling_length(n_sensors), dtype=complex)
        c[0] = 1
        c[1:1 + len(leading)] = leading
        return cls(c, n_sensors)

    def __len__(self):
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, CouplingVector):
            return NotImplemented
        return self.n_sensors == other.n_sensors and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.n_sensors, self.coeffs.tobytes()))

    def first_row(self) -> np.ndarray:
        """The length-N first row ``[c_1, ..., c_L, ..., c_2]``."""
        n = self.n_sensors
        d = np.arange(n)
        return self.coeffs[np.minimum(d, n - d)]

    def to_json(self) -> list[list[float]]:
        return [[float(v.real), float(v.imag)] for v in self.coeffs]


def coupling_matrix(c: CouplingVector) -> np.ndarray:
    """N x N complex symmetric circulant coupling matrix built from ``c``.

    Row ``i`` is the first row cyclically shifted right by ``i``; entry
    ``(i, k)`` only depends on the ring distance between sensors i and k.
    """
    row = c.first_row()
    n = c.n_sensors
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return row[idx]


def steering_vector(cfg: ArrayConfig, azimuth, elevation) -> np.ndarray:
    """UCA steering vector(s).

    Element n is ``exp(j k0 r sin(el) cos(az - 2 pi n / N))``. Scalar angles
    give a length-N vector; arrays of K angles give an N x K matrix.
    """
    az, el = _check_angles(azimuth, elevation)
    return _steering(cfg, np.deg2rad(az), np.deg2rad(el))


def _steering(cfg: ArrayConfig, az_rad, el_rad) -> np.ndarray:
    """Unchecked steering evaluation on radian inputs (any real angles)."""
    az_rad = np.asarray(az_rad, dtype=float)
    el_rad = np.asarray(el_rad, dtype=float)
    gamma = cfg.sensor_angles
    if az_rad.ndim == 0:
        return np.exp(1j * cfg.k0r * np.sin(el_rad) * np.cos(az_rad - gamma))
    phase = cfg.k0r * np.sin(el_rad)[None, :] * np.cos(az_rad[None, :] - gamma[:, None])
    return np.exp(1j * phase)


def steering_matrix(cfg: ArrayConfig, sources: SourceSet) -> np.ndarray:
    return steering_vector(cfg, sources.azimuths, sources.elevations)


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with the given variance."""
    scale = math.sqrt(variance / 2)
    return rng.normal(0.0, scale, shape) + 1j * rng.normal(0.0, scale, shape)


@dataclass
class GroundTruth:
    """What :func:`synthesize` put into the data."""

    n_sensors: int
    radius: float
    wavelength: float
    angles: list[tuple[float, float]]
    powers: list[float]
    coupling: list[list[float]]
    snapshots: int
    noise_variance: float
    snr_db: list[float]
    seed: int | None

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.__dict__, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        d["angles"] = [tuple(a) for a in d["angles"]]
        return cls(**d)

    @property
    def coupling_vector(self) -> CouplingVector:
        return CouplingVector([complex(re, im) for re, im in self.coupling],
                              self.n_sensors, check_decay=False)


def synthesize(cfg: ArrayConfig, sources: SourceSet, c: CouplingVector | None,
               snapshots: int, snr_db=20.0, seed=None,
               noise_variance: float | None = None):
    """Simulate ``X = C A S + E``.

    Source waveforms and noise are i.i.d. circularly symmetric complex
    Gaussian. With a scalar ``snr_db`` the noise variance is
    ``max(power) / 10**(snr_db / 10)`` and each source keeps its own power.
    With one SNR per source the noise variance is fixed the same way from
    the largest SNR and the source powers are reset to match each SNR.
    ``snr_db=inf`` gives noiseless data. ``noise_variance`` overrides all
    of the above.

    Returns
    -------
    X : ndarray, shape (N, T)
    truth : GroundTruth
    """
    if int(snapshots) != snapshots or snapshots < 1:
        raise ModelError(f"snapshots must be a positive integer, got {snapshots}")
    n = cfg.n_sensors
    if c is None:
        c = CouplingVector.identity(n)
    if c.n_sensors != n:
        raise ModelError("coupling vector does not match the array size")

    powers = sources.powers.astype(float)
    snr = np.broadcast_to(np.asarray(snr_db, dtype=float), powers.shape).copy()
    ref = powers.max()
    if noise_variance is None:
        noise_variance = 0.0 if np.isinf(snr.max()) else float(ref / 10 ** (snr.max() / 10))
        if np.ndim(snr_db) > 0 and noise_variance > 0:
            powers = noise_variance * 10 ** (snr / 10)
    noise_variance = float(noise_variance)
    with np.errstate(divide="ignore"):
        snr = 10 * np.log10(powers / noise_variance) if noise_variance > 0 else np.full_like(powers, np.inf)

    rng = np.random.default_rng(seed)
    T = int(snapshots)
    S = complex_noise(rng, (len(sources), T), 1.0) * np.sqrt(powers)[:, None]
    E = complex_noise(rng, (n, T), noise_variance)
    A = steering_matrix(cfg, sources)
    X = coupling_matrix(c) @ (A @ S) + E

    truth = GroundTruth(
        n_sensors=n, radius=cfg.radius, wavelength=cfg.wavelength,
        angles=sources.angles, powers=[float(p) for p in powers],
        coupling=c.to_json(), snapshots=T, noise_variance=noise_variance,
        snr_db=[float(s) for s in snr], seed=seed,
    )
    return X, truth


# Reference scenario used throughout the tests and benchmarks: N = 15, r = lambda, T = 200.
REFERENCE_ANGLES = [(243.4, 18.3), (60.0, 83.6), (357.8, 73.9)]
REFERENCE_COUPLING_LEADING = (0.79 + 0.432j, 0.35 + 0.16j)


def reference_array() -> ArrayConfig:
    return ArrayConfig(n_sensors=15, radius=1.0)


def reference_sources() -> SourceSet:
    return SourceSet.from_angles(REFERENCE_ANGLES)


def reference_coupling() -> CouplingVector:
    return CouplingVector.from_leading(15, REFERENCE_COUPLING_LEADING)
