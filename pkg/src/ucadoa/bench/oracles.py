"""Self-checks run by ``bench oracle-check``.

Both compare a fast closed-form path against a slow, independent one:
the F-transform against an explicit coupling-matrix product, and the series
band integrals against adaptive 2-D quadrature.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad

from ..array import ArrayConfig, CouplingVector, coupling_length, coupling_matrix
from ..coupling import f_transform
from ..dictionary import Band, integrated_atom_element


@dataclass
class OracleReport:
    name: str
    cases: int
    worst: float
    threshold: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.worst < self.threshold

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: worst {self.worst:.3g} (< {self.threshold:g}) "
                f"over {self.cases} cases in {self.seconds:.2f} s")


def check_f_transform(draws: int = 1000, seed: int = 0, threshold: float = 1e-12) -> OracleReport:
    """max ||F{a} c - C(c) a||_inf over random N in 4..16, c (c_1 = 1) and a."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(4, 17))
        L = coupling_length(n)
        c = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        c[0] = 1.0
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        cv = CouplingVector(c, n, check_decay=False)
        worst = max(worst, float(np.max(np.abs(f_transform(a) @ c - coupling_matrix(cv) @ a))))
    return OracleReport("f-transform", draws, worst, threshold, time.perf_counter() - t0)


def random_band(rng: np.random.Generator, max_width: float = 30.0) -> Band:
    w_az = rng.uniform(0.05, max_width)
    w_el = rng.uniform(0.05, max_width)
    az0 = rng.uniform(0.0, 360.0 - w_az)
    el0 = rng.uniform(0.0, 90.0 - w_el)
    return Band(az0, az0 + w_az, el0, el0 + w_el)


def quadrature_element(cfg: ArrayConfig, band: Band, sensor_index: int) -> complex:
    """Adaptive-quadrature band integral of one steering element (radian^2)."""
    phi_n = 2 * np.pi * sensor_index / cfg.n_sensors
    kr = cfg.k0r

    def part(fn):
        val, _ = dblquad(lambda el, az: fn(kr * np.sin(el) * np.cos(az - phi_n)),
                         np.deg2rad(band.az_lo), np.deg2rad(band.az_hi),
                         np.deg2rad(band.el_lo), np.deg2rad(band.el_hi),
                         epsabs=1e-13, epsrel=1e-10)
        return val

    return complex(part(np.cos), part(np.sin))


def check_series_quadrature(cases: int = 100, seed: int = 0,
                            threshold: float = 1e-8) -> OracleReport:
    """Relative error of the series integrals against dblquad."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(cases):
        cfg = ArrayConfig(int(rng.integers(4, 17)), float(rng.choice([0.5, 1.0])))
        band = random_band(rng)
        n = int(rng.integers(cfg.n_sensors))
        ref = quadrature_element(cfg, band, n)
        got = integrated_atom_element(cfg, band, n)
        worst = max(worst, abs(got - ref) / abs(ref))
    return OracleReport("series-vs-quadrature", cases, worst, threshold, time.perf_counter() - t0)
