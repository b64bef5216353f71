"""Complex-valued LASSO over SVD-reduced array data.

Solves

    min_S  || Y - A S ||_F^2 + gamma * sum_q || S[q, :] ||_2

for complex ``A`` (M x Q) and ``Y`` (M x m). With m = 1 this is the plain
complex LASSO ``||x - D s||^2 + gamma ||s||_1``; with m = K it is the
mixed l2/l1 ("group") problem in which every dictionary column owns one
coefficient per reduced data column.

Optimality (first order): for zero rows ``||A_q^H R|| <= gamma / 2`` and for
nonzero rows ``2 A_q^H R = gamma S_q / ||S_q||`` with ``R = Y - A S``. The
all-zero solution is therefore optimal iff ``gamma >= 2 * gamma_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

SHARED = "shared"
GROUP = "group"


@dataclass
class StackedSystem:
    """Reduced observation model.

    ``atoms`` is the (coupled) dictionary ``A_hat`` (N x Q) and ``data`` the
    reduced snapshots ``X_SV`` (N x K). ``dictionary``/``observation`` give
    the stacked form ``D`` (NK x Q) and ``x = vec(X_SV)`` (NK,). In
    ``"shared"`` mode one coefficient per band is fitted to the stacked
    system; in ``"group"`` mode each band owns a length-K coefficient row.
    """

    atoms: np.ndarray
    data: np.ndarray
    mode: str = GROUP

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=complex)
        data = np.asarray(self.data, dtype=complex)
        self.data = data[:, None] if data.ndim == 1 else data
        if self.mode not in (SHARED, GROUP):
            raise ValueError(f"mode must be 'shared' or 'group', got {self.mode!r}")
        if self.atoms.shape[0] != self.data.shape[0]:
            raise ValueError("atoms and data need the same number of rows")

    @classmethod
    def from_matrix(cls, D, x) -> "StackedSystem":
        """Plain LASSO system ``x ~ D s``."""
        return cls(D, np.asarray(x).reshape(-1, 1), SHARED)

    @property
    def n_bands(self) -> int:
        return self.atoms.shape[1]

    @property
    def dictionary(self) -> np.ndarray:
        return np.vstack([self.atoms] * self.data.shape[1])

    @property
    def observation(self) -> np.ndarray:
        return self.data.reshape(-1, order="F")

    def design(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, Y) of the row-sparse problem solved for this mode."""
        if self.mode == SHARED:
            return self.dictionary, self.observation[:, None]
        return self.atoms, self.data

    def gamma_max(self) -> float:
        return gamma_max(*self.design())


def gamma_max(D, x) -> float:
    """Largest correlation ``max_i |d_i^H x|``.

    For a matrix ``x`` the row norms of ``D^H x`` are used (group problem).
    """
    D = np.asarray(D)
    corr = D.conj().T @ np.asarray(x)
    if corr.ndim == 1:
        return float(np.max(np.abs(corr))) if corr.size else 0.0
    return float(np.max(np.linalg.norm(corr, axis=1))) if corr.size else 0.0


@dataclass
class SparseSolution:
    """Solver output.

    ``coefficients`` has shape (Q,) in shared mode and (Q, K) in group mode.
    ``kkt`` is the largest violation of the optimality conditions.
    """

    coefficients: np.ndarray
    gamma: float
    iterations: int
    converged: bool
    mode: str = GROUP
    objective: float = float("nan")
    kkt: float = float("nan")
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def magnitudes(self) -> np.ndarray:
        """Per-band coefficient magnitude (row l2 norm in group mode)."""
        c = self.coefficients
        return np.abs(c) if c.ndim == 1 else np.linalg.norm(c, axis=1)


def objective(sys: StackedSystem, coefficients, gamma: float) -> float:
    A, Y = sys.design()
    S = np.asarray(coefficients).reshape(A.shape[1], -1)
    R = Y - A @ S
    return float(np.vdot(R, R).real + gamma * np.linalg.norm(S, axis=1).sum())


def kkt_violation(sys: StackedSystem, coefficients, gamma: float) -> float:
    """Largest violation of the first-order optimality conditions."""
    A, Y = sys.design()
    S = np.asarray(coefficients).reshape(A.shape[1], -1)
    return float(_kkt(A, Y, S, gamma)[0])


def _kkt(A, Y, S, gamma):
    R = Y - A @ S
    Cq = A.conj().T @ R
    gnorm = np.linalg.norm(Cq, axis=1)
    snorm = np.linalg.norm(S, axis=1)
    nz = snorm > 0
    viol = np.empty(len(snorm))
    viol[~nz] = gnorm[~nz] - gamma / 2
    if nz.any():
        direction = S[nz] / snorm[nz, None]
        viol[nz] = np.linalg.norm(2 * Cq[nz] - gamma * direction, axis=1)
    worst = float(max(viol.max(initial=0.0), 0.0))
    return worst, viol, gnorm, nz


@njit(cache=True)
def _bcd(H, G, S, gamma, tol, max_sweeps, y_norm2, B, hist):
    """Cyclic block coordinate descent on a working set.

    ``G = B - H S`` is kept in sync with ``S``. Returns (sweeps, converged).
    ``hist`` receives the objective after each sweep.
    """
    W, m = S.shape
    z = np.empty(m, dtype=np.complex128)
    delta = np.empty(m, dtype=np.complex128)
    for sweep in range(max_sweeps):
        max_change = 0.0
        for q in range(W):
            hqq = H[q, q].real
            if hqq <= 0.0:
                continue
            nz = 0.0
            for k in range(m):
                z[k] = S[q, k] + G[q, k] / hqq
                nz += z[k].real * z[k].real + z[k].imag * z[k].imag
            nz = np.sqrt(nz)
            shrink = 0.0
            if nz > 0.0:
                shrink = 1.0 - gamma / (2.0 * hqq * nz)
                if shrink < 0.0:
                    shrink = 0.0
            change = 0.0
            for k in range(m):
                delta[k] = shrink * z[k] - S[q, k]
                change += delta[k].real * delta[k].real + delta[k].imag * delta[k].imag
            if change == 0.0:
                continue
            for p in range(W):
                hpq = H[p, q]
                for k in range(m):
                    G[p, k] -= hpq * delta[k]
            for k in range(m):
                S[q, k] += delta[k]
            change = np.sqrt(change * hqq)
            if change > max_change:
                max_change = change
        # objective = ||Y||^2 - Re<S, B> - Re<S, G> + gamma * sum ||S_q||
        obj = y_norm2
        for q in range(W):
            sq = 0.0
            for k in range(m):
                s = S[q, k]
                obj -= (np.conj(s) * B[q, k]).real + (np.conj(s) * G[q, k]).real
                sq += s.real * s.real + s.imag * s.imag
            obj += gamma * np.sqrt(sq)
        if sweep < hist.shape[0]:
            hist[sweep] = obj
        if max_change <= tol:
            return sweep + 1, True
    return max_sweeps, False


def solve_lasso(sys: StackedSystem, gamma: float, tol: float = 1e-8,
                max_iter: int = 100_000, max_add: int = 64,
                record_history: bool = False, inner_sweeps: int = 50) -> SparseSolution:
    """Working-set block coordinate descent.

    The working set starts with the columns most correlated with the data
    and grows with the columns violating the zero-row condition; inside it
    rows are updated by exact block minimisation. The returned solution
    satisfies the optimality conditions within ``tol`` unless ``converged``
    is False (``max_iter`` sweeps exhausted).
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    A, Y = sys.design()
    Q, m = A.shape[1], Y.shape[1]
    S = np.zeros((Q, m), dtype=complex)
    y_norm2 = float(np.vdot(Y, Y).real)

    worst, viol, gnorm, _ = _kkt(A, Y, S, gamma)
    history = [y_norm2] if record_history else []
    if worst <= tol:
        return SparseSolution(_shape(S, sys.mode), gamma, 0, True, sys.mode,
                              y_norm2, worst, history)

    order = np.argsort(-gnorm, kind="stable")
    work = [int(q) for q in order[: min(Q, max_add)] if gnorm[q] > gamma / 2]
    in_work = np.zeros(Q, dtype=bool)
    in_work[work] = True
    sweeps = 0
    inner_tol = 0.1 * tol
    # Sweeps per working-set round. Coherent columns make coordinate descent
    # slow, so the working set is revisited regularly instead of only after
    # the inner problem has converged.
    budget = inner_sweeps
    converged = False
    while sweeps < max_iter:
        idx = np.array(work)
        Aw = np.ascontiguousarray(A[:, idx])
        H = np.ascontiguousarray(Aw.conj().T @ Aw)
        B = np.ascontiguousarray(Aw.conj().T @ Y)
        Sw = np.ascontiguousarray(S[idx])
        G = B - H @ Sw
        n_run = min(budget, max_iter - sweeps)
        hist = np.empty(n_run if record_history else 0)
        n, inner_done = _bcd(H, G, Sw, gamma, inner_tol, n_run, y_norm2, B, hist)
        if record_history:
            history.extend(hist[:n].tolist())
        sweeps += n
        S[idx] = Sw

        worst, viol, gnorm, nz = _kkt(A, Y, S, gamma)
        if worst <= tol:
            converged = True
            break
        outside = np.flatnonzero(~in_work & (viol > tol))
        if outside.size:
            add = outside[np.argsort(-viol[outside], kind="stable")][:max_add]
            work.extend(int(q) for q in add)
            in_work[add] = True
        elif inner_done:
            inner_tol *= 0.1
            if inner_tol < 1e-300:
                break
        else:
            budget *= 2

    R = Y - A @ S
    obj = float(np.vdot(R, R).real + gamma * np.linalg.norm(S, axis=1).sum())
    return SparseSolution(_shape(S, sys.mode), gamma, sweeps, converged, sys.mode,
                          obj, worst, history)


def _shape(S, mode):
    return S[:, 0].copy() if mode == SHARED else S


def active_bands(sol: SparseSolution, rel_threshold: float = 0.05) -> set[int]:
    """Bands whose coefficient magnitude reaches ``rel_threshold`` of the largest."""
    if not 0 < rel_threshold <= 1:
        raise ValueError("rel_threshold must be in (0, 1]")
    mag = sol.magnitudes
    peak = mag.max(initial=0.0)
    if peak == 0:
        return set()
    return {int(q) for q in np.flatnonzero(mag >= rel_threshold * peak)}
