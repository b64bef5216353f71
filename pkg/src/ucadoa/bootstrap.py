"""Initial coupling estimate for strongly coupled arrays.

Starting the band search from ``C = I`` works for weak coupling only: a
symmetric circulant coupling rescales the circular harmonics of every
steering vector, so a single source's elevation (and its azimuth modulo
180 degrees) can be absorbed into the coupling. Azimuth itself survives.

The bootstrap therefore proceeds in three steps:

1. A coupling-blind azimuth spectrum, the smallest generalised eigenvalue
   of ``(F^H E_n E_n^H F, F^H F)`` with ``F = f_transform(a)``. Its nulls
   sit at the source azimuths and (approximately) their antipodes.
2. A joint search over the antipode choice and a coarse elevation grid.
   Each hypothesis fixes the coupling as the minimum eigenvector of U and
   is scored by how well the coupled steering vectors span the weighted
   signal subspace. That score rejects couplings that suppress the sources
   altogether, which the noise-subspace cost alone cannot do.
3. A bounded least-squares refinement of the best hypothesis.

Only sets of two or more sources pin the coupling down.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .array import ArrayConfig, CouplingVector, _steering
from .coupling import f_transform_batch, refine_joint
from .subspace import SubspaceData

# Largest number of (antipode, elevation) hypotheses scored in one exhaustive pass.
MAX_HYPOTHESES = 60_000


@dataclass
class BootstrapResult:
    doas: list[tuple[float, float]]
    coupling: CouplingVector
    score: float
    candidates: list[list[float]]


def _f_stack(cfg: ArrayConfig, az, el) -> np.ndarray:
    """f_transform for many directions at once, shape (P, N, L)."""
    a = _steering(cfg, np.deg2rad(np.atleast_1d(az)), np.deg2rad(np.atleast_1d(el)))
    return f_transform_batch(a)


def azimuth_spectrum(cfg: ArrayConfig, noise_basis: np.ndarray, azimuths,
                     elevation: float = 60.0) -> np.ndarray:
    """Coupling-blind azimuth spectrum (small values at source azimuths)."""
    az = np.asarray(azimuths, dtype=float)
    F = _f_stack(cfg, az, np.full(az.shape, elevation))
    G = np.einsum("ij,pjl->pil", noise_basis.conj().T, F)
    num = np.einsum("pil,pim->plm", G.conj(), G)
    den = np.einsum("pil,pim->plm", F.conj(), F)
    # Whiten with the Cholesky factor of F^H F and take the smallest eigenvalue.
    Lc = np.linalg.cholesky(den)
    Li = np.linalg.inv(Lc)
    M = Li @ num @ np.conj(np.swapaxes(Li, 1, 2))
    return np.linalg.eigvalsh(0.5 * (M + np.conj(np.swapaxes(M, 1, 2))))[:, 0]


def azimuth_candidates(spectrum, azimuths, n_families: int, pair_tol: float = 3.0) -> list[list[float]]:
    """Group spectrum nulls into at most ``n_families`` antipodal families.

    Local minima are visited from deepest up. A minimum within ``pair_tol``
    degrees of the antipode of a single-member family joins it; otherwise it
    opens a new family.
    """
    r = np.asarray(spectrum)
    az = np.asarray(azimuths)
    n = r.size
    minima = [i for i in range(n) if r[i] < r[i - 1] and r[i] <= r[(i + 1) % n]]
    minima.sort(key=lambda i: r[i])
    families: list[list[float]] = []
    for i in minima:
        a = float(az[i])
        for fam in families:
            d = abs((a - fam[0] + 180.0) % 360.0 - 180.0)
            if len(fam) == 1 and abs(d - 180.0) <= pair_tol:
                fam.append(a)
                break
        else:
            if len(families) < n_families:
                families.append([a])
        if len(families) == n_families and all(len(f) == 2 for f in families):
            break
    return families


def _fit_scores(F_sel, U, weighted_signal):
    """Score hypotheses from their per-source F matrices (H, K, N, L) and
    summed noise-subspace costs U (H, L, L).

    Returns (scores, couplings); couplings are unit-norm minimum eigenvectors.
    """
    _, V = np.linalg.eigh(U)
    c = V[:, :, 0]
    CA = np.einsum("hknl,hl->hnk", F_sel, c)
    Q, _ = np.linalg.qr(CA)
    total = np.linalg.norm(weighted_signal) ** 2
    captured = np.linalg.norm(np.conj(np.swapaxes(Q, 1, 2)) @ weighted_signal, axis=(1, 2)) ** 2
    return total - captured, c


def _direction_costs(F, noise_basis):
    """Per-direction ``F^H E_n E_n^H F`` for F of shape (P, N, L)."""
    G = np.einsum("ij,pjl->pil", noise_basis.conj().T, F)
    return np.einsum("pil,pim->plm", G.conj(), G)


def bootstrap_coupling(cfg: ArrayConfig, sub: SubspaceData, az_step: float = 0.5,
                       el_step: float = 10.0, spectrum_elevation: float = 60.0,
                       extra_families: int = 1, az_window: float = 5.0, n_refine: int = 3,
                       refine: bool = True) -> BootstrapResult:
    """Coarse joint DOA / coupling estimate from the subspaces of ``sub``.

    Raises ValueError for fewer than two sources, where the coupling cannot
    be separated from the elevations.
    """
    k = sub.k
    if k < 2:
        raise ValueError("coupling bootstrap needs at least two sources")
    En = sub.noise_basis
    Es = sub.signal_basis * sub.singular_values[:k][None, :]
    az_grid = np.arange(0.0, 360.0, az_step)
    spectrum = azimuth_spectrum(cfg, En, az_grid, spectrum_elevation)
    fams = azimuth_candidates(spectrum, az_grid, k + extra_families)
    el_grid = np.arange(el_step / 2, 90.0, el_step)
    n_el = el_grid.size

    # Per candidate azimuth: f_transform and its cost block over the elevation grid.
    F_by_az = {a: _f_stack(cfg, np.full(n_el, a), el_grid) for fam in fams for a in fam}
    U_by_az = {a: _direction_costs(F, En) for a, F in F_by_az.items()}
    n_src = min(k, len(fams))
    hypotheses = []
    for subset in itertools.combinations(fams, n_src):
        for choice in itertools.product(*subset):
            if n_el ** n_src <= MAX_HYPOTHESES:
                idx = np.stack(np.meshgrid(*[np.arange(n_el)] * n_src, indexing="ij"), -1).reshape(-1, n_src)
                F_sel = np.stack([F_by_az[a][idx[:, j]] for j, a in enumerate(choice)], axis=1)
                U = sum(U_by_az[a][idx[:, j]] for j, a in enumerate(choice))
                scores, cs = _fit_scores(F_sel, U, Es)
                h = int(np.argmin(scores))
                hypotheses.append((float(scores[h]), [(a, float(el_grid[idx[h, j]])) for j, a in enumerate(choice)], cs[h]))
            else:
                hypotheses.append(_coordinate_search(choice, F_by_az, U_by_az, el_grid, Es))
    hypotheses.sort(key=lambda h: h[0])

    # The coarse grid can rank a wrong hypothesis first; compare the leaders after refinement.
    best = (np.inf, None, None)
    for score, doas, c in hypotheses[: n_refine if refine else 1]:
        if abs(c[0]) > 1e-12:
            c = c / c[0]
        if refine:
            boxes = [(a - az_window, a + az_window, max(e - 2 * el_step, 0.0),
                      min(e + 2 * el_step, 90.0)) for a, e in doas]
            doas, c = refine_joint(cfg, En, doas, boxes, c, tol=1e-12, max_nfev=100)
            F_sel = _f_stack(cfg, [d[0] for d in doas], [d[1] for d in doas])[None]
            score = float(_fit_scores(F_sel, _direction_costs(F_sel[0], En).sum(0)[None], Es)[0][0])
        if score < best[0]:
            best = (score, doas, c)
    score, doas, c = best
    c = np.array(c, dtype=complex)
    c[0] = 1.0
    return BootstrapResult(doas, CouplingVector(c, cfg.n_sensors, check_decay=False),
                           score, fams)


def _coordinate_search(choice, F_by_az, U_by_az, el_grid, Es, sweeps: int = 4):
    """Greedy per-source elevation search for large source counts."""
    n_src = len(choice)
    cur = np.full(n_src, el_grid.size // 2)
    score, c = np.inf, None
    for _ in range(sweeps):
        moved = False
        for j in range(n_src):
            idx = np.tile(cur, (el_grid.size, 1))
            idx[:, j] = np.arange(el_grid.size)
            F_sel = np.stack([F_by_az[a][idx[:, i]] for i, a in enumerate(choice)], axis=1)
            U = sum(U_by_az[a][idx[:, i]] for i, a in enumerate(choice))
            s, cs = _fit_scores(F_sel, U, Es)
            h = int(np.argmin(s))
            if h != cur[j]:
                moved = True
            cur[j], score, c = h, float(s[h]), cs[h]
        if not moved:
            break
    return score, [(a, float(el_grid[cur[j]])) for j, a in enumerate(choice)], c
