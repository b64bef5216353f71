"""Mutual coupling estimation for UCAs.

For a symmetric circulant coupling matrix ``C(c)`` the product ``C(c) a`` is
linear in the free coefficients ``c``; ``f_transform(a)`` is the N x L matrix
with ``f_transform(a) @ c == C(c) @ a``. Given DOAs and a noise subspace
``E_n`` the coupling vector minimises

    J(c) = sum_k || E_n^H C(c) a_k ||^2 = c^H U c,
    U    = sum_k F_k^H E_n E_n^H F_k,

subject to ``c_1 = 1``; the minimiser is the eigenvector of the smallest
eigenvalue of U rescaled to a unit first entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .array import ArrayConfig, CouplingVector, _steering, coupling_length, steering_vector

DEGENERATE_GAP = 1e-10


class DegenerateCouplingError(ArithmeticError):
    """The coupling cost has no unique normalisable minimiser."""


def f_transform(a: np.ndarray) -> np.ndarray:
    """N x L matrix F with ``F @ c == coupling_matrix(c) @ a``.

    Row i collects the steering entries at ring distance j - 1 from sensor i
    (0-based i, 1-based j), split into four index patterns:

    * F1: forward, no wrap   ``a[i + d]``        for i + d <= N - 1
    * F4: forward, wrapped   ``a[i + d - N]``    for i + d >= N, d >= 1
    * F2: backward, no wrap  ``a[i - d]``        for i - d >= 0, 1 <= d <= p - 1
    * F3: backward, wrapped  ``a[i - d + N]``    for i - d < 0,  1 <= d <= p - 1

    with ``d = j - 1`` and ``p = floor((N + 1) / 2)``. For even N the
    diametrically opposite sensor (d = N/2) is counted once, by the forward
    pieces only.
    """
    a = np.asarray(a).ravel()
    fwd, bwd, back_ok = _f_pattern(a.size)
    return a[fwd] + np.where(back_ok, a[bwd], 0)


def f_transform_batch(A: np.ndarray) -> np.ndarray:
    """``f_transform`` of every column of an N x P matrix, shape (P, N, L)."""
    At = np.asarray(A).T
    fwd, bwd, back_ok = _f_pattern(At.shape[1])
    return At[:, fwd] + np.where(back_ok, At[:, bwd], 0)


@lru_cache(maxsize=32)
def _f_pattern(n: int):
    """Gather indices (N x L) of the forward and backward pieces.

    The forward piece ``a[(i + d) mod N]`` (F1 and F4) is present for every d;
    the backward piece ``a[(i - d) mod N]`` (F2 and F3) only where ``back_ok``.
    """
    if n < 3:
        raise ValueError("need N >= 3")
    L = coupling_length(n)
    p = (n + 1) // 2
    i = np.arange(n)[:, None]
    d = np.arange(L)[None, :]
    back_ok = np.broadcast_to((d >= 1) & (d <= p - 1), (n, L))
    return (i + d) % n, (i - d) % n, back_ok


@dataclass
class CouplingCost:
    """Hermitian PSD matrix U of the quadratic coupling cost ``J(c) = c^H U c``.

    ``factor`` optionally holds G with ``U = G^H G`` (the stacked
    ``E_n^H F_k``); J is then evaluated as ``||G c||^2``, which stays accurate
    near J = 0 where ``c^H U c`` is limited by rounding in U.
    """

    U: np.ndarray
    n_sensors: int | None = None
    factor: np.ndarray | None = None

    def __call__(self, c) -> float:
        c = c.coeffs if isinstance(c, CouplingVector) else np.asarray(c)
        if self.factor is not None:
            r = self.factor @ c
            return float(np.real(np.vdot(r, r)))
        return float(np.real(c.conj() @ self.U @ c))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.U)

    def spectral_gap(self) -> float:
        """Second-smallest minus smallest eigenvalue."""
        w = self.eigenvalues
        return float(w[1] - w[0])


def coupling_cost(doas: Sequence[tuple[float, float]], noise_basis: np.ndarray,
                  cfg: ArrayConfig) -> CouplingCost:
    """Build U from (azimuth, elevation) DOAs in degrees and the noise subspace."""
    doas = list(doas)
    if not doas:
        raise ValueError("need at least one DOA to estimate coupling")
    En_H = noise_basis.conj().T
    G = np.vstack([En_H @ f_transform(steering_vector(cfg, az, el)) for az, el in doas])
    U = G.conj().T @ G
    return CouplingCost(0.5 * (U + U.conj().T), cfg.n_sensors, G)


def estimate_coupling(cost: CouplingCost) -> CouplingVector:
    """Minimum-eigenvalue eigenvector of U, scaled so ``c_1 == 1``.

    Raises
    ------
    DegenerateCouplingError
        If the smallest eigenvalue is not simple (relative gap below 1e-10)
        or the eigenvector's first entry vanishes.
    """
    U = cost.U
    L = U.shape[0]
    n_sensors = cost.n_sensors
    if n_sensors is None:
        # L alone does not fix the parity of N; assume odd (L = (N + 1) / 2).
        n_sensors = 2 * L - 1
    w, V = np.linalg.eigh(U)
    scale = max(abs(w[-1]), np.finfo(float).tiny)
    if L > 1 and (w[1] - w[0]) <= DEGENERATE_GAP * scale:
        raise DegenerateCouplingError(
            f"smallest eigenvalue of U is not simple (gap {w[1] - w[0]:.3g})")
    v = V[:, 0]
    if abs(v[0]) < 1e-12:
        raise DegenerateCouplingError("minimum eigenvector has a vanishing first entry")
    c = v / v[0]
    c[0] = 1.0
    return CouplingVector(c, n_sensors, check_decay=False)


def refine_joint(cfg: ArrayConfig, noise_basis: np.ndarray, doas, boxes, c0,
                 tol: float = 1e-15, max_nfev: int = 200):
    """Jointly refine DOAs and coupling by bounded nonlinear least squares.

    Minimises ``sum_k ||E_n^H C(c) a(az_k, el_k)||^2`` over ``c`` (with
    ``c_1 = 1``) and the DOAs, DOA k confined to
    ``boxes[k] = (az_lo, az_hi, el_lo, el_hi)``. Azimuth boxes may extend
    past 0 or 360 degrees. Returns (doas, coefficient array).
    """
    from scipy.optimize import least_squares

    k = len(doas)
    L = coupling_length(cfg.n_sensors)
    En_H = noise_basis.conj().T
    c0 = np.asarray(c0, dtype=complex)
    c0 = c0 / c0[0]

    def unpack(p):
        c = np.concatenate([[1.0], p[2 * k:2 * k + L - 1] + 1j * p[2 * k + L - 1:]])
        return p[:k], p[k:2 * k], c

    def residual(p):
        az, el, c = unpack(p)
        a = _steering(cfg, np.deg2rad(az), np.deg2rad(el))
        r = (En_H @ (f_transform_batch(a) @ c).T).ravel()
        return np.concatenate([r.real, r.imag])

    boxes = np.asarray(boxes, dtype=float).reshape(k, 4)
    free = np.full(2 * (L - 1), np.inf)
    lo = np.concatenate([boxes[:, 0], boxes[:, 2], -free])
    hi = np.concatenate([boxes[:, 1], boxes[:, 3], free])
    # Unwrap each azimuth into its box before clipping to a feasible start.
    az0 = np.array([b[0] + ((d[0] - b[0]) % 360.0) for d, b in zip(doas, boxes)])
    p0 = np.concatenate([az0, [d[1] for d in doas], c0[1:].real, c0[1:].imag])
    fit = least_squares(residual, np.clip(p0, lo, hi), bounds=(lo, hi), method="trf",
                        x_scale="jac", xtol=tol, ftol=tol, gtol=tol, max_nfev=max_nfev)
    az, el, c = unpack(fit.x)
    return [(float(a % 360.0), float(e)) for a, e in zip(az, el)], c
