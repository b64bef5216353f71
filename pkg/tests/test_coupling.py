import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from ucadoa import (ArrayConfig, CouplingVector, coupling_matrix, reduce, reference_coupling,
                    reference_sources, steering_vector, synthesize)
from ucadoa.array import coupling_length
from ucadoa.coupling import (CouplingCost, DegenerateCouplingError, coupling_cost,
                             estimate_coupling, f_transform, f_transform_batch, refine_joint)

from conftest import crandn


def brute_f(a):
    """Columns C(e_j) a: the defining property applied to each unit vector."""
    n = a.size
    L = coupling_length(n)
    cols = []
    for j in range(L):
        e = np.zeros(L, dtype=complex)
        e[j] = 1.0
        # unit first entry is required by CouplingVector; subtract the identity part.
        e[0] = 1.0
        cols.append(coupling_matrix(CouplingVector(e, n, check_decay=False)) @ a
                    - (a if j else 0))
    return np.column_stack(cols)


def test_identity_reproduces_steering():
    rng = np.random.default_rng(0)
    for n in (4, 5, 15, 16):
        a = crandn(rng, n)
        assert np.allclose(f_transform(a) @ CouplingVector.identity(n).coeffs, a, atol=1e-15)


def test_all_ones_n5():
    F = f_transform(np.ones(5))
    assert F.shape == (5, 3)
    assert np.array_equal(F, np.tile([1, 2, 2], (5, 1)))
    beta = 0.3 - 0.1j
    c = CouplingVector([1, beta, beta], 5, check_decay=False)
    assert np.allclose(F @ c.coeffs, (1 + 4 * beta) * np.ones(5))
    assert np.allclose(F @ c.coeffs, coupling_matrix(c) @ np.ones(5))


@pytest.mark.parametrize("n", range(3, 17))
def test_matches_brute_force_columns(n):
    a = crandn(np.random.default_rng(n), n)
    assert np.allclose(f_transform(a), brute_f(a), atol=1e-14)


@given(st.integers(4, 16), st.integers(0, 2**32 - 1))
def test_defining_property(n, seed):
    rng = np.random.default_rng(seed)
    L = coupling_length(n)
    c = crandn(rng, L)
    c[0] = 1
    a = crandn(rng, n)
    cv = CouplingVector(c, n, check_decay=False)
    assert np.max(np.abs(f_transform(a) @ c - coupling_matrix(cv) @ a)) < 1e-12


def test_batch_matches_single():
    rng = np.random.default_rng(1)
    A = crandn(rng, 15, 6)
    Fb = f_transform_batch(A)
    for p in range(6):
        assert np.array_equal(Fb[p], f_transform(A[:, p]))


def test_reference_f_at_steering(cfg):
    # 1000 random draws at the reference size (N = 15, L = 8).
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        c = crandn(rng, 8)
        c[0] = 1
        a = steering_vector(cfg, rng.uniform(0, 360), rng.uniform(0, 90))
        cv = CouplingVector(c, 15, check_decay=False)
        worst = max(worst, np.linalg.norm(f_transform(a) @ c - coupling_matrix(cv) @ a))
    assert worst < 1e-12


# -- cost ------------------------------------------------------------------------

def test_cost_vanishes_at_truth(noiseless, cfg):
    X, _ = noiseless
    cost = coupling_cost(reference_sources().angles, reduce(X, 3).noise_basis, cfg)
    assert cost(reference_coupling()) < 1e-16
    U = cost.U
    assert np.allclose(U, U.conj().T, atol=1e-12)
    assert cost.eigenvalues.min() > -1e-10


def test_cost_linear_in_doas(cfg):
    rng = np.random.default_rng(3)
    En = np.linalg.qr(crandn(rng, 15, 15))[0][:, 3:]
    one = coupling_cost([(33.0, 44.0)], En, cfg).U
    two = coupling_cost([(33.0, 44.0), (33.0, 44.0)], En, cfg).U
    # equal up to rounding: U is formed from the stacked factor
    assert np.allclose(two, 2 * one, rtol=1e-14, atol=1e-14 * np.abs(one).max())
    with pytest.raises(ValueError):
        coupling_cost([], En, cfg)


def test_spectral_gap_at_20db(cfg):
    for seed in range(10):
        X, _ = synthesize(cfg, reference_sources(), reference_coupling(), 200, 20.0, seed=seed)
        w = coupling_cost(reference_sources().angles, reduce(X, 3).noise_basis, cfg).eigenvalues
        assert w[0] * 10 <= w[1]


# -- estimation ------------------------------------------------------------------

def test_estimate_diag():
    U = np.diag([0.0, 1.0, 2.0, 3.0])
    c = estimate_coupling(CouplingCost(U, 7))
    assert np.array_equal(c.coeffs, [1, 0, 0, 0])
    assert c.n_sensors == 7


def test_estimate_isotropic_is_degenerate():
    with pytest.raises(DegenerateCouplingError):
        estimate_coupling(CouplingCost(np.eye(8), 15))


def test_estimate_vanishing_first_entry():
    with pytest.raises(DegenerateCouplingError):
        estimate_coupling(CouplingCost(np.diag([1.0, 0.0, 2.0]), 5))


def test_noiseless_recovery(noiseless, cfg):
    X, _ = noiseless
    c = estimate_coupling(coupling_cost(reference_sources().angles, reduce(X, 3).noise_basis, cfg))
    assert c.coeffs[0] == 1
    assert abs(c.coeffs[1] - (0.79 + 0.432j)) < 1e-8
    assert abs(c.coeffs[2] - (0.35 + 0.16j)) < 1e-8
    assert np.max(np.abs(c.coeffs[3:])) < 1e-8


@given(st.integers(0, 2**32 - 1))
def test_minimiser_optimality(seed):
    rng = np.random.default_rng(seed)
    B = crandn(rng, 20, 6)
    cost = CouplingCost(B.conj().T @ B, 11)
    c = estimate_coupling(cost).coeffs
    rq = cost(c) / np.vdot(c, c).real
    for _ in range(100):
        v = crandn(rng, 6)
        assert rq <= cost(v) / np.vdot(v, v).real * (1 + 1e-12)


def test_noise_basis_rebasis_invariance(cfg):
    X, _ = synthesize(cfg, reference_sources(), reference_coupling(), 200, 15.0, seed=6)
    En = reduce(X, 3).noise_basis
    Q = unitary_group.rvs(En.shape[1], random_state=2)
    a = estimate_coupling(coupling_cost(reference_sources().angles, En, cfg)).coeffs
    b = estimate_coupling(coupling_cost(reference_sources().angles, En @ Q, cfg)).coeffs
    assert np.max(np.abs(a - b)) < 1e-12


def test_even_array_recovery():
    cfg = ArrayConfig(10, 0.8)
    truth = CouplingVector.from_leading(10, [0.5 + 0.2j, 0.2 - 0.1j, 0.05j])
    src = reference_sources()
    X, _ = synthesize(cfg, src, truth, 100, np.inf, seed=0)
    c = estimate_coupling(coupling_cost(src.angles, reduce(X, 3).noise_basis, cfg))
    assert np.allclose(c.coeffs, truth.coeffs, atol=1e-8)


def test_refine_joint_recovers_truth(noiseless, cfg):
    X, _ = noiseless
    En = reduce(X, 3).noise_basis
    truth = reference_sources().angles
    start = [(a + 0.3, e - 0.2) for a, e in truth]
    boxes = [(a - 2, a + 2, max(e - 2, 0), min(e + 2, 90)) for a, e in truth]
    c0 = reference_coupling().coeffs + 0.01
    doas, c = refine_joint(cfg, En, start, boxes, c0)
    for (a, e), (ta, te) in zip(doas, truth):
        assert abs(a - ta) < 1e-8 and abs(e - te) < 1e-8
    assert np.allclose(c, reference_coupling().coeffs, atol=1e-8)
