"""Signal/noise subspaces, SVD data reduction and model-order selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EIG_FLOOR = 1e-12


@dataclass
class SubspaceData:
    """SVD reduction of an N x T snapshot matrix to its K dominant components.

    Attributes
    ----------
    reduced : ndarray, (N, K)
        ``X @ V_s``, the data projected onto the K dominant right singular
        vectors.
    signal_basis : ndarray, (N, K)
        Left singular vectors of the K largest singular values.
    noise_basis : ndarray, (N, N - K)
        Remaining left singular vectors.
    singular_values : ndarray
        All N singular values in descending order (zero padded when T < N).
    right_basis : ndarray, (T, K)
        V_s, phase-normalised so that each column's largest entry is real
        positive.
    """

    reduced: np.ndarray
    signal_basis: np.ndarray
    noise_basis: np.ndarray
    singular_values: np.ndarray
    right_basis: np.ndarray
    k: int


def _left_singular(X: np.ndarray):
    n, t = X.shape
    U, s, Vh = np.linalg.svd(X, full_matrices=t < n)
    if t < n:
        s = np.concatenate([s, np.zeros(n - s.size)])
        Vh = Vh[:t]
    return U, s, Vh


def reduce(X: np.ndarray, k: int) -> SubspaceData:
    """Keep the ``k`` dominant singular components of ``X``."""
    X = np.asarray(X)
    n, t = X.shape
    if not 1 <= k < min(n, t):
        raise ValueError(f"k must satisfy 1 <= k < min(N, T) = {min(n, t)}, got {k}")
    U, s, Vh = _left_singular(X)
    V_s = Vh[:k].conj().T
    U = U.copy()
    # Fix the per-component phase: largest-magnitude entry of each V column real positive.
    pivot = V_s[np.argmax(np.abs(V_s), axis=0), np.arange(k)]
    phase = pivot / np.abs(pivot)
    V_s = V_s / phase[None, :]
    U[:, :k] = U[:, :k] / phase[None, :]
    return SubspaceData(
        reduced=X @ V_s,
        signal_basis=U[:, :k],
        noise_basis=U[:, k:],
        singular_values=s,
        right_basis=V_s,
        k=k,
    )


def sample_covariance(X: np.ndarray) -> np.ndarray:
    """(1/T) X X^H."""
    X = np.asarray(X)
    R = X @ X.conj().T / X.shape[1]
    return 0.5 * (R + R.conj().T)


def noise_subspace(R: np.ndarray, k: int) -> np.ndarray:
    """Eigenvectors of the N - k smallest eigenvalues of a Hermitian matrix."""
    _, V = np.linalg.eigh(R)
    return V[:, : R.shape[0] - k]


def bic_scores(X: np.ndarray, k_max: int | None = None) -> np.ndarray:
    """BIC(k) for k = 1..k_max from the sample covariance eigenvalues.

    The likelihood of order k treats the N - k smallest eigenvalues as a
    white noise floor (sphericity):

        BIC(k) = -2 T (N - k) log(g_k / a_k) + k (2N - k) log T

    with ``g_k``/``a_k`` the geometric/arithmetic mean of those eigenvalues
    and ``k (2N - k)`` the number of free real parameters of a rank-k
    Hermitian signal covariance plus noise power.
    """
    X = np.asarray(X)
    n, t = X.shape
    k_cap = min(n - 2, t - 1)
    k_max = k_cap if k_max is None else min(k_max, k_cap)
    if k_max < 1:
        raise ValueError("need at least N >= 3 and T >= 2 to select an order")
    lam = np.linalg.eigvalsh(sample_covariance(X))[::-1]
    # Eigenvalues below the numerical-rank floor are rounding noise; flatten them
    # so noiseless data reads as a perfectly white floor.
    floor = EIG_FLOOR * lam[0] if lam[0] > 0 else np.finfo(float).tiny
    lam = np.maximum(lam, floor)
    scores = np.empty(k_max)
    for k in range(1, k_max + 1):
        tail = lam[k:]
        log_ratio = np.mean(np.log(tail)) - np.log(np.mean(tail))
        scores[k - 1] = -2 * t * (n - k) * log_ratio + k * (2 * n - k) * np.log(t)
    return scores


def select_model_order(X: np.ndarray, k_max: int | None = None) -> int:
    """Number of sources minimising :func:`bic_scores` (k_max is capped at N - 2)."""
    return int(np.argmin(bic_scores(X, k_max))) + 1
