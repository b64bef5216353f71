import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from ucadoa import (CouplingVector, SourceSet, coupling_matrix, reduce, reference_array,
                    reference_coupling, reference_sources, select_model_order, steering_matrix,
                    synthesize)
from ucadoa.coupling import coupling_cost, estimate_coupling
from ucadoa.subspace import bic_scores, sample_covariance

from conftest import crandn


def test_rank_one_reconstruction():
    rng = np.random.default_rng(0)
    X = np.outer(crandn(rng, 8), crandn(rng, 30))
    sub = reduce(X, 1)
    rec = sub.reduced @ sub.right_basis.conj().T
    assert np.max(np.abs(rec - X)) < 1e-10


def test_noiseless_reference_is_rank_three(noiseless):
    X, _ = noiseless
    sub = reduce(X, 3)
    rec = sub.reduced @ sub.right_basis.conj().T
    assert np.max(np.abs(rec - X)) < 1e-8
    assert sub.reduced.shape == (15, 3)


def test_noiseless_signal_span(noiseless, cfg):
    X, _ = noiseless
    sub = reduce(X, 3)
    CA = coupling_matrix(reference_coupling()) @ steering_matrix(cfg, reference_sources())
    assert np.linalg.norm(sub.noise_basis.conj().T @ CA) < 1e-8


def test_reduce_k_range():
    X = np.ones((5, 10))
    with pytest.raises(ValueError):
        reduce(X, 0)
    with pytest.raises(ValueError):
        reduce(X, 5)


@given(st.integers(3, 12), st.integers(2, 40), st.data())
def test_bases_orthonormal_and_complementary(n, t, data):
    k = data.draw(st.integers(1, min(n, t) - 1))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    sub = reduce(crandn(rng, n, t), k)
    Es, En = sub.signal_basis, sub.noise_basis
    assert np.max(np.abs(Es.conj().T @ En)) < 1e-12
    assert np.allclose(Es @ Es.conj().T + En @ En.conj().T, np.eye(n), atol=1e-10)
    W = np.hstack([Es, En])
    assert np.allclose(W.conj().T @ W, np.eye(n), atol=1e-10)
    assert np.all(np.diff(sub.singular_values) <= 1e-12)


def test_reduce_deterministic_phase():
    rng = np.random.default_rng(3)
    X = crandn(rng, 6, 20)
    sub = reduce(X, 2)
    piv = sub.right_basis[np.argmax(np.abs(sub.right_basis), axis=0), [0, 1]]
    assert np.allclose(piv.imag, 0) and np.all(piv.real > 0)


def test_unitary_snapshot_mixing_invariance(cfg):
    """Right-multiplying X by a unitary leaves the subspaces and the coupling estimate alone."""
    X, _ = synthesize(cfg, reference_sources(), reference_coupling(), 60, 15.0, seed=4)
    Q = unitary_group.rvs(60, random_state=1)
    a, b = reduce(X, 3), reduce(X @ Q, 3)
    Pa = a.signal_basis @ a.signal_basis.conj().T
    Pb = b.signal_basis @ b.signal_basis.conj().T
    assert np.allclose(Pa, Pb, atol=1e-10)
    ca = estimate_coupling(coupling_cost(reference_sources().angles, a.noise_basis, cfg))
    cb = estimate_coupling(coupling_cost(reference_sources().angles, b.noise_basis, cfg))
    assert np.allclose(ca.coeffs, cb.coeffs, atol=1e-10)


def test_sample_covariance_examples():
    rng = np.random.default_rng(0)
    x = crandn(rng, 5, 1)
    assert np.allclose(sample_covariance(x), x @ x.conj().T)
    assert np.array_equal(sample_covariance(np.zeros((4, 3))), np.zeros((4, 4)))
    R = sample_covariance(crandn(rng, 4, 9))
    assert np.allclose(R, R.conj().T)
    assert np.linalg.eigvalsh(R).min() > -1e-12


def test_sample_covariance_white_noise():
    rng = np.random.default_rng(8)
    sigma2 = 0.7
    E = np.sqrt(sigma2 / 2) * crandn(rng, 5, 100_000)
    R = sample_covariance(E)
    assert np.all(np.abs(R - sigma2 * np.eye(5)) < 0.05 * sigma2)


def test_model_order_single_source():
    cfg = reference_array()
    src = SourceSet.from_angles([(130.0, 50.0)])
    hits = sum(select_model_order(synthesize(cfg, src, None, 200, 20.0, seed=s)[0]) == 1
               for s in range(100))
    assert hits >= 95


def test_model_order_reference_scenario(cfg):
    hits = sum(select_model_order(synthesize(cfg, reference_sources(), reference_coupling(),
                                             200, 10.0, seed=s)[0]) == 3
               for s in range(100))
    assert hits >= 90


def test_model_order_cap():
    rng = np.random.default_rng(0)
    X = crandn(rng, 6, 50)
    assert len(bic_scores(X)) == 4          # N - 2
    assert len(bic_scores(X, k_max=10)) == 4
    assert 1 <= select_model_order(X) <= 4


def test_model_order_noiseless(noiseless):
    assert select_model_order(noiseless[0]) == 3


def test_model_order_identity_coupling(cfg):
    X, _ = synthesize(cfg, reference_sources(), CouplingVector.identity(15), 200, 10.0, seed=0)
    assert select_model_order(X) == 3
