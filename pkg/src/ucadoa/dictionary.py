"""Integrated wideband dictionaries over azimuth/elevation bands.

Each dictionary column integrates the UCA steering vector over a rectangular
band of directions,

    a_n(band) = int_{az} int_{el} exp(j k0 r sin(el) cos(az - g_n)) d(el) d(az),

evaluated without numerical quadrature: the exponential is expanded in its
Taylor series, which factorises each term into a definite integral of
``cos**m`` over the shifted azimuth interval times a definite integral of
``sin**m`` over the elevation interval. Both are obtained from the standard
integration-by-parts reductions.

Bands tile the direction rectangle [0, 360) x [0, 90] and are refined by
splitting the active ones ("zooming").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .array import ArrayConfig

SERIES_RTOL = 1e-12
MAX_TERMS = 80

AZ_SPAN = 360.0
EL_SPAN = 90.0


class SeriesConvergenceError(ArithmeticError):
    """The Taylor series did not reach the requested tolerance."""

    def __init__(self, message, n_terms, worst_bound):
        super().__init__(message)
        self.n_terms = n_terms
        self.worst_bound = worst_bound


# ---------------------------------------------------------------------------
# power integrals
# ---------------------------------------------------------------------------

def sin_power_integrals(n_max: int, lo, hi) -> np.ndarray:
    """Definite integrals of ``sin**n`` over ``[lo, hi]`` for n = 0..n_max.

    Vectorised over ``lo``/``hi``; the result has shape ``(n_max + 1,) + shape``.
    Uses  I_n = [-sin^(n-1) cos / n] + (n-1)/n I_(n-2).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s_lo, c_lo = np.sin(lo), np.cos(lo)
    s_hi, c_hi = np.sin(hi), np.cos(hi)
    out = np.empty((n_max + 1,) + np.broadcast(lo, hi).shape)
    out[0] = hi - lo
    if n_max >= 1:
        out[1] = c_lo - c_hi
    # p_lo/p_hi hold sin^(n-1)
    p_lo, p_hi = s_lo.copy(), s_hi.copy()
    for n in range(2, n_max + 1):
        boundary = -(p_hi * c_hi - p_lo * c_lo) / n
        out[n] = boundary + (n - 1) / n * out[n - 2]
        p_lo = p_lo * s_lo
        p_hi = p_hi * s_hi
    return out


def cos_power_integrals(n_max: int, lo, hi) -> np.ndarray:
    """Definite integrals of ``cos**n`` over ``[lo, hi]`` for n = 0..n_max.

    Uses  I_n = [cos^(n-1) sin / n] + (n-1)/n I_(n-2).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s_lo, c_lo = np.sin(lo), np.cos(lo)
    s_hi, c_hi = np.sin(hi), np.cos(hi)
    out = np.empty((n_max + 1,) + np.broadcast(lo, hi).shape)
    out[0] = hi - lo
    if n_max >= 1:
        out[1] = s_hi - s_lo
    p_lo, p_hi = c_lo.copy(), c_hi.copy()
    for n in range(2, n_max + 1):
        boundary = (p_hi * s_hi - p_lo * s_lo) / n
        out[n] = boundary + (n - 1) / n * out[n - 2]
        p_lo = p_lo * c_lo
        p_hi = p_hi * c_hi
    return out


def sin_power_integral(n: int, lo: float, hi: float) -> float:
    """Definite integral of ``sin(x)**n`` over ``[lo, hi]`` (radians)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if lo > hi:
        raise ValueError("need lo <= hi")
    return float(sin_power_integrals(n, lo, hi)[n])


def cos_power_integral(n: int, lo: float, hi: float) -> float:
    """Definite integral of ``cos(x)**n`` over ``[lo, hi]`` (radians)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if lo > hi:
        raise ValueError("need lo <= hi")
    return float(cos_power_integrals(n, lo, hi)[n])


# ---------------------------------------------------------------------------
# bands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Band:
    """Rectangle of directions, degrees. Intervals are half-open ``[lo, hi)``.

    Azimuth intervals are kept unwrapped: ``az_hi`` may exceed 360 for a band
    straddling the 360 -> 0 seam.
    """

    az_lo: float
    az_hi: float
    el_lo: float
    el_hi: float
    depth: int = 0

    def __post_init__(self):
        if not (0 <= self.az_lo < AZ_SPAN and self.az_lo <= self.az_hi <= self.az_lo + AZ_SPAN):
            raise ValueError(f"bad azimuth interval [{self.az_lo}, {self.az_hi})")
        if not (0 <= self.el_lo <= self.el_hi <= EL_SPAN):
            raise ValueError(f"bad elevation interval [{self.el_lo}, {self.el_hi})")

    @property
    def azimuth_interval(self) -> tuple[float, float]:
        return (self.az_lo, self.az_hi)

    @property
    def elevation_interval(self) -> tuple[float, float]:
        return (self.el_lo, self.el_hi)

    @property
    def area(self) -> float:
        """Band area in rad^2 (plain azimuth x elevation measure)."""
        return math.radians(self.az_hi - self.az_lo) * math.radians(self.el_hi - self.el_lo)

    def contains(self, azimuth: float, elevation: float, closed: bool = False) -> bool:
        daz = (azimuth - self.az_lo) % AZ_SPAN
        w = self.az_hi - self.az_lo
        if closed:
            az_ok = daz <= w or daz >= AZ_SPAN - 1e-12
            return az_ok and self.el_lo <= elevation <= self.el_hi
        if self.el_hi == EL_SPAN:
            el_ok = self.el_lo <= elevation <= self.el_hi
        else:
            el_ok = self.el_lo <= elevation < self.el_hi
        return (daz < w or w >= AZ_SPAN) and el_ok


def band_center(band: Band) -> tuple[float, float]:
    """(azimuth, elevation) midpoint of the band, azimuth wrapped into [0, 360)."""
    az = 0.5 * (band.az_lo + band.az_hi)
    return (az % AZ_SPAN, 0.5 * (band.el_lo + band.el_hi))


@dataclass
class BandGrid:
    """Collection of bands stored column-wise.

    ``edges`` is a ``(Q, 4)`` array of ``[az_lo, az_hi, el_lo, el_hi]`` in
    degrees. ``parent`` indexes the band of the previous grid each band was
    split from (-1 at stage 0). ``stage_schedule`` records the
    ``(azimuth, elevation)`` split counts applied so far.
    """

    edges: np.ndarray
    depth: int = 0
    parent: np.ndarray | None = None
    stage_schedule: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float).reshape(-1, 4)
        if self.parent is None:
            self.parent = np.full(len(self.edges), -1, dtype=int)

    def __len__(self):
        return len(self.edges)

    def __getitem__(self, q) -> Band:
        return Band(*map(float, self.edges[q]), depth=self.depth)

    @property
    def bands(self) -> list[Band]:
        return [self[q] for q in range(len(self))]

    @property
    def centers(self) -> np.ndarray:
        """(Q, 2) array of (azimuth, elevation) band centers."""
        az = 0.5 * (self.edges[:, 0] + self.edges[:, 1]) % AZ_SPAN
        el = 0.5 * (self.edges[:, 2] + self.edges[:, 3])
        return np.column_stack([az, el])

    @property
    def widths(self) -> np.ndarray:
        return np.column_stack([self.edges[:, 1] - self.edges[:, 0],
                                self.edges[:, 3] - self.edges[:, 2]])

    def locate(self, azimuth: float, elevation: float) -> list[int]:
        """Indices of bands containing the direction (half-open convention)."""
        return [q for q in range(len(self)) if self[q].contains(azimuth, elevation)]


def uniform_grid(n_azimuth: int, n_elevation: int) -> BandGrid:
    """Stage-0 tiling of [0, 360) x [0, 90] into ``n_azimuth * n_elevation`` bands.

    Bands are ordered elevation-major: index ``q = i_el * n_azimuth + i_az``.
    """
    if n_azimuth < 1 or n_elevation < 1:
        raise ValueError("band counts must be positive")
    az = np.linspace(0.0, AZ_SPAN, n_azimuth + 1)
    el = np.linspace(0.0, EL_SPAN, n_elevation + 1)
    az_lo, el_lo = np.meshgrid(az[:-1], el[:-1])
    az_hi, el_hi = np.meshgrid(az[1:], el[1:])
    edges = np.column_stack([az_lo.ravel(), az_hi.ravel(), el_lo.ravel(), el_hi.ravel()])
    return BandGrid(edges, depth=0, stage_schedule=[(n_azimuth, n_elevation)])


def refine(grid: BandGrid, active: Iterable[int], split: tuple[int, int]) -> BandGrid:
    """Keep only the active bands and split each into ``az x el`` children.

    Children tile their parent exactly: the outer child edges are copied
    from the parent and neighbouring children share their edge value.
    """
    active = sorted(set(int(q) for q in active))
    if not active:
        raise ValueError("cannot refine with an empty active set (no sources detected)")
    n_az, n_el = split
    if n_az < 1 or n_el < 1:
        raise ValueError("split counts must be positive")
    fa = np.linspace(0.0, 1.0, n_az + 1)
    fe = np.linspace(0.0, 1.0, n_el + 1)
    rows, parents = [], []
    for q in active:
        a0, a1, e0, e1 = grid.edges[q]
        az = a0 + (a1 - a0) * fa
        el = e0 + (e1 - e0) * fe
        az[0], az[-1] = a0, a1
        el[0], el[-1] = e0, e1
        for ie in range(n_el):
            for ia in range(n_az):
                rows.append((az[ia], az[ia + 1], el[ie], el[ie + 1]))
                parents.append(q)
    return BandGrid(np.array(rows), depth=grid.depth + 1, parent=np.array(parents, dtype=int),
                    stage_schedule=grid.stage_schedule + [(n_az, n_el)])


# ---------------------------------------------------------------------------
# integrated atoms
# ---------------------------------------------------------------------------

def _integrated_atoms(cfg: ArrayConfig, edges: np.ndarray, rtol=SERIES_RTOL,
                      max_terms=MAX_TERMS):
    """Series evaluation of the band integrals for all sensors and bands.

    Returns ``(atoms, n_terms)`` with ``atoms`` of shape ``(N, Q)`` and the
    number of series terms used per band.
    """
    edges = np.asarray(edges, dtype=float).reshape(-1, 4)
    q = len(edges)
    rad = np.deg2rad(edges)
    gamma = cfg.sensor_angles[:, None]
    az_lo = rad[None, :, 0] - gamma          # (N, Q) after shifting by the sensor angle
    az_hi = rad[None, :, 1] - gamma
    el_lo, el_hi = rad[:, 2], rad[:, 3]
    w_az = rad[:, 1] - rad[:, 0]
    w_el = rad[:, 3] - rad[:, 2]

    # Running recursions for cos^n (per sensor and band) and sin^n (per band).
    cs_lo, cn_lo = np.sin(az_lo), np.cos(az_lo)
    cs_hi, cn_hi = np.sin(az_hi), np.cos(az_hi)
    ss_lo, sc_lo = np.sin(el_lo), np.cos(el_lo)
    ss_hi, sc_hi = np.sin(el_hi), np.cos(el_hi)

    kr = cfg.k0r
    coef = 1.0 + 0j                              # (j k0 r)^n / n!
    C = [az_hi - az_lo, cs_hi - cs_lo]           # I_{n-2}, I_{n-1}
    S = [el_hi - el_lo, sc_lo - sc_hi]
    pc_lo, pc_hi = cn_lo.copy(), cn_hi.copy()    # cos^(n-1) at the limits
    ps_lo, ps_hi = ss_lo.copy(), ss_hi.copy()    # sin^(n-1) at the limits

    total = np.zeros((cfg.n_sensors, q), dtype=complex)
    n_terms = np.zeros(q, dtype=int)
    done = np.zeros(q, dtype=bool)
    bound_scale = w_az * w_el
    bound = bound_scale.copy()
    for n in range(max_terms + 1):
        if n == 0:
            c_n, s_n = C[0], S[0]
        elif n == 1:
            c_n, s_n = C[1], S[1]
        else:
            c_n = (pc_hi * cs_hi - pc_lo * cs_lo) / n + (n - 1) / n * C[0]
            s_n = -(ps_hi * sc_hi - ps_lo * sc_lo) / n + (n - 1) / n * S[0]
            C = [C[1], c_n]
            S = [S[1], s_n]
            pc_lo = pc_lo * cn_lo
            pc_hi = pc_hi * cn_hi
            ps_lo = ps_lo * ss_lo
            ps_hi = ps_hi * ss_hi
        if n >= 1:
            coef = coef * (1j * kr) / n
            bound = bound * kr / n
        live = ~done
        total[:, live] += coef * c_n[:, live] * s_n[live]
        n_terms[live] = n + 1
        # tail bound: (k0 r)^n / n! * max|cos^n integral| * max|sin^n integral|
        part = np.linalg.norm(total, axis=0)
        newly = live & (n >= kr) & (bound <= rtol * part)
        done |= newly
        if done.all():
            return total, n_terms
    worst = float(np.max(np.where(done, 0.0, bound / np.maximum(part, 1e-300))))
    raise SeriesConvergenceError(
        f"series did not converge within {max_terms} terms (k0r={kr:.3g}, "
        f"{int((~done).sum())} bands pending, worst relative tail bound {worst:.3g})",
        n_terms=max_terms + 1, worst_bound=worst)


def integrated_atom_element(cfg: ArrayConfig, band: Band, sensor_index: int,
                            rtol: float = SERIES_RTOL, max_terms: int = MAX_TERMS) -> complex:
    """Band integral of the steering element of one sensor (radian^2 measure)."""
    if not 0 <= sensor_index < cfg.n_sensors:
        raise ValueError(f"sensor_index must be in [0, {cfg.n_sensors})")
    edges = np.array([[band.az_lo, band.az_hi, band.el_lo, band.el_hi]])
    atoms, _ = _integrated_atoms(cfg, edges, rtol, max_terms)
    return complex(atoms[sensor_index, 0])


@dataclass
class IntegratedDictionary:
    """Integrated atoms of a band grid.

    ``atoms[:, q]`` belongs to ``grid[q]``. When normalised, ``scales[q]`` is
    the Euclidean norm of the raw integral, so ``raw = atoms * scales``.
    """

    atoms: np.ndarray
    grid: BandGrid
    scales: np.ndarray
    n_terms: np.ndarray
    normalized: bool = True

    @property
    def bands(self) -> list[Band]:
        return self.grid.bands

    @property
    def raw_atoms(self) -> np.ndarray:
        return self.atoms * self.scales[None, :] if self.normalized else self.atoms

    def __len__(self):
        return self.atoms.shape[1]

    def dump(self, fp) -> None:
        """Write one JSON record per column (band bounds, terms used, atom values)."""
        records = []
        for q in range(len(self)):
            a0, a1, e0, e1 = (float(v) for v in self.grid.edges[q])
            col = self.atoms[:, q]
            records.append({
                "index": q,
                "azimuth": [a0, a1],
                "elevation": [e0, e1],
                "depth": self.grid.depth,
                "n_terms": int(self.n_terms[q]),
                "scale": float(self.scales[q]),
                "atom": {"re": col.real.tolist(), "im": col.imag.tolist()},
            })
        json.dump({"normalized": self.normalized, "columns": records}, fp)


def build_dictionary(cfg: ArrayConfig, grid: BandGrid, normalize: bool = True,
                     rtol: float = SERIES_RTOL, max_terms: int = MAX_TERMS) -> IntegratedDictionary:
    """Integrated atoms for every band of ``grid`` (N x Q)."""
    if len(grid) == 0:
        raise ValueError("empty band grid")
    atoms, n_terms = _integrated_atoms(cfg, grid.edges, rtol, max_terms)
    if normalize:
        scales = np.linalg.norm(atoms, axis=0)
        safe = np.where(scales > 0, scales, 1.0)
        atoms = atoms / safe[None, :]
    else:
        scales = np.ones(atoms.shape[1])
    return IntegratedDictionary(atoms, grid, scales, n_terms, normalize)
