"""Independent reference solvers used as test oracles."""

import numpy as np


def prox_gradient(A, Y, gamma, iters=200_000, tol=1e-13):
    """Accelerated proximal gradient (FISTA with adaptive restart).

    Minimises ||Y - A S||_F^2 + gamma * sum_q ||S_q||_2 and returns
    (S, objective).
    """
    A = np.asarray(A, dtype=complex)
    Y = np.asarray(Y, dtype=complex).reshape(A.shape[0], -1)
    step = 1.0 / (2 * np.linalg.norm(A, 2) ** 2)

    def obj(S):
        R = Y - A @ S
        return float(np.vdot(R, R).real + gamma * np.linalg.norm(S, axis=1).sum())

    def prox(V):
        nv = np.linalg.norm(V, axis=1, keepdims=True)
        return V * np.maximum(0.0, 1 - step * gamma / np.maximum(nv, 1e-300))

    S = np.zeros((A.shape[1], Y.shape[1]), dtype=complex)
    Z, t, f_old = S.copy(), 1.0, obj(S)
    for _ in range(iters):
        S_new = prox(Z + 2 * step * (A.conj().T @ (Y - A @ Z)))
        f_new = obj(S_new)
        if f_new > f_old:            # restart momentum
            Z, t = S.copy(), 1.0
            continue
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        Z = S_new + (t - 1) / t_new * (S_new - S)
        if abs(f_old - f_new) <= tol * max(f_old, 1e-300) and np.allclose(S_new, S, atol=1e-14):
            S = S_new
            break
        S, t, f_old = S_new, t_new, f_new
    return S, obj(S)


def cvx_lasso(D, x, gamma):
    """Complex LASSO ||x - D s||^2 + gamma ||s||_1 by a conic solver."""
    import cvxpy as cp

    s = cp.Variable(D.shape[1], complex=True)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(x - D @ s) + gamma * cp.norm1(s)))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return s.value, prob.value
