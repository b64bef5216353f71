"""Coupling-unaware comparison estimators on a uniform point grid."""

from __future__ import annotations

import numpy as np

from ..array import ArrayConfig, _steering
from ..lasso import StackedSystem, solve_lasso
from ..subspace import reduce


def point_grid(step: float) -> tuple[np.ndarray, np.ndarray]:
    """Azimuths ``0, step, ... < 360`` and elevations ``0, step, ... <= 90``."""
    if not 0 < step <= 90:
        raise ValueError("grid step must be in (0, 90]")
    az = np.arange(0.0, 360.0 - 1e-9, step)
    n_el = int(np.floor(90.0 / step + 1e-9))
    el = step * np.arange(n_el + 1)
    return az, el


def _grid_atoms(cfg: ArrayConfig, az, el) -> np.ndarray:
    """Steering vectors for every (el, az) grid point, elevation-major, N x P."""
    A, E = np.meshgrid(np.deg2rad(az), np.deg2rad(el))
    return _steering(cfg, A.ravel(), E.ravel())


def grid_peaks(values: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Indices (i_el, i_az) of the ``k`` largest local maxima of a 2-D map.

    Azimuth (axis 1) wraps around; elevation does not. A point is a local
    maximum if no 8-neighbour is strictly larger. Ties keep the smaller
    flat index.
    """
    v = np.asarray(values, dtype=float)
    if k <= 0:
        return []
    padded = np.pad(v, ((1, 1), (0, 0)), constant_values=-np.inf)
    is_peak = np.ones(v.shape, dtype=bool)
    for de in (-1, 0, 1):
        for da in (-1, 0, 1):
            if de == 0 and da == 0:
                continue
            nb = np.roll(padded, (-de, -da), axis=(0, 1))[1:-1]
            is_peak &= v >= nb
    flat = np.flatnonzero(is_peak.ravel())
    order = flat[np.argsort(-v.ravel()[flat], kind="stable")][:k]
    return [tuple(int(x) for x in np.unravel_index(q, v.shape)) for q in order]


def music_spectrum(X: np.ndarray, cfg: ArrayConfig, k: int, step: float = 1.0):
    """2-D MUSIC pseudospectrum ``1 / ||E_n^H a||^2`` on the point grid.

    Returns (spectrum (n_el, n_az), azimuths, elevations).
    """
    az, el = point_grid(step)
    En = reduce(X, k).noise_basis
    A = _grid_atoms(cfg, az, el)
    denom = np.sum(np.abs(En.conj().T @ A) ** 2, axis=0)
    spectrum = 1.0 / np.maximum(denom, np.finfo(float).tiny)
    return spectrum.reshape(len(el), len(az)), az, el


def baseline_grid_music(X: np.ndarray, cfg: ArrayConfig, k: int, step: float = 1.0):
    """The ``k`` largest MUSIC peaks as (azimuth, elevation) pairs."""
    if k == 0:
        return []
    spectrum, az, el = music_spectrum(X, cfg, k, step)
    return [(float(az[j]), float(el[i])) for i, j in grid_peaks(spectrum, k)]


def baseline_narrowband_lasso(X: np.ndarray, cfg: ArrayConfig, k: int, step: float = 2.0,
                              alpha: float = 0.3, tol: float = 1e-4, max_iter: int = 20_000):
    """Group LASSO over unit-norm point steering atoms on the uniform grid.

    Uses the same reduced data and penalty rule (``gamma = 2 alpha gamma_max``)
    as the proposed method, without coupling correction. Returns the DOAs of
    the ``k`` strongest coefficient peaks and the number of atoms.
    """
    az, el = point_grid(step)
    A = _grid_atoms(cfg, az, el) / np.sqrt(cfg.n_sensors)
    if k == 0:
        return [], A.shape[1]
    system = StackedSystem(A, reduce(X, k).reduced)
    gmax = system.gamma_max()
    sol = solve_lasso(system, 2 * alpha * gmax, tol=tol * gmax, max_iter=max_iter)
    mag = sol.magnitudes.reshape(len(el), len(az))
    peaks = [(i, j) for i, j in grid_peaks(mag, k) if mag[i, j] > 0]
    return [(float(az[j]), float(el[i])) for i, j in peaks], A.shape[1]
