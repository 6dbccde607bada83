import numpy as np
import pytest

from dynunmix import EndmemberAdmmState, Hyperparams, NumericError, s_step, solve_S
from oracles import endmember_oracle, endmember_subproblem_value, random_small_instance

TIGHT = dict(admm_eps_abs=1e-10, admm_eps_rel=1e-9, max_inner=20000)


def test_s_step_scalar():
    h = Hyperparams(lambda_S=1.0, rho=1.0)
    one = np.ones((1, 1))
    S = s_step(2 * one, one, one, np.ones(1), 0 * one, 0 * one, h)
    assert S[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_s_step_dominant_penalty(rng):
    _, A, psi, X, S0 = random_small_instance(rng, K=1)
    h = Hyperparams(lambda_S=1e12)
    zero = np.zeros_like(S0)
    S = s_step(X[0], A[0], S0, psi[0], zero, zero, h)
    ref = S0 * psi[0]
    assert np.linalg.norm(S - ref) <= 1e-6 * np.linalg.norm(ref)


def test_s_step_satisfies_normal_equations(rng):
    _, A, psi, X, S0 = random_small_instance(rng, K=1)
    h = Hyperparams(lambda_S=(0.7, 1.9), rho=2.5)
    M = rng.uniform(size=S0.shape)
    U = rng.standard_normal(S0.shape)
    S = s_step(X[0], A[0], S0, psi[0], M, U, h)
    lam = np.array([0.7, 1.9])
    lhs = S @ (A[0] @ A[0].T + np.diag(lam) + 2.5 * np.eye(2))
    rhs = X[0] @ A[0].T + lam * S0 * psi[0] + 2.5 * (M - U)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_s_step_rejects_non_finite():
    one = np.ones((1, 1))
    with pytest.raises(NumericError):
        s_step(np.array([[np.inf]]), one, one, np.ones(1), one, one, Hyperparams())


def test_solve_identity_design_recovers_data(rng):
    X = rng.uniform(size=(1, 5, 3))
    A = np.eye(3)[None]
    S, state = solve_S(X, A, np.ones((1, 3)), np.ones((5, 3)), Hyperparams(lambda_S=0.0, **TIGHT))
    assert state.converged.all()
    np.testing.assert_allclose(S, X, atol=1e-6)


def test_solve_projection_active():
    S, _ = solve_S(-np.ones((1, 1, 1)), np.ones((1, 1, 1)), np.ones((1, 1)), np.ones((1, 1)),
                   Hyperparams(lambda_S=0.0))
    assert S[0, 0, 0] == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_solve_matches_projected_gradient_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    _, A, psi, X, S0 = random_small_instance(rng)
    h = Hyperparams(lambda_S=1.0, **TIGHT)
    S, state = solve_S(X, A, psi, S0, h)
    assert S.min() >= 0
    J = endmember_subproblem_value(S, A, psi, X, S0, 1.0)
    J_ref = endmember_subproblem_value(endmember_oracle(A, psi, X, S0, 1.0), A, psi, X, S0, 1.0)
    assert abs(J - J_ref) <= 1e-5 * J_ref


@pytest.mark.parametrize("seed", range(5))
def test_objective_non_increasing_across_iterations(seed):
    rng = np.random.default_rng(seed)
    _, A, psi, X, S0 = random_small_instance(rng)
    h = Hyperparams(lambda_S=1.0, max_inner=1, admm_eps_abs=1e-14, admm_eps_rel=1e-14)
    state, values = None, []
    for _ in range(60):
        S, state = solve_S(X, A, psi, S0, h, warm_start=state)
        assert state.M.min() >= 0
        values.append(endmember_subproblem_value(S, A, psi, X, S0, 1.0))
    assert np.max(np.diff(values[3:])) <= 1e-8


def test_frames_are_independent(rng):
    _, A, psi, X, S0 = random_small_instance(rng, K=4)
    h = Hyperparams(lambda_S=0.8)
    S_all, _ = solve_S(X, A, psi, S0, h)
    order = [2, 0, 3, 1]
    S_perm, _ = solve_S(X[order], A[order], psi[order], S0, h)
    assert S_perm.tobytes() == S_all[order].tobytes()
    for k in range(4):
        S_one, _ = solve_S(X[k:k + 1], A[k:k + 1], psi[k:k + 1], S0, h)
        assert S_one.tobytes() == S_all[k:k + 1].tobytes()


def test_thread_count_does_not_change_result(rng):
    _, A, psi, X, S0 = random_small_instance(rng, K=6)
    h = Hyperparams(lambda_S=0.8)
    S1, _ = solve_S(X, A, psi, S0, h, n_threads=1)
    S4, _ = solve_S(X, A, psi, S0, h, n_threads=4)
    assert S1.tobytes() == S4.tobytes()


@pytest.mark.parametrize("seed", range(3))
def test_rho_invariance(seed):
    rng = np.random.default_rng(40 + seed)
    _, A, psi, X, S0 = random_small_instance(rng)
    sols = [solve_S(X, A, psi, S0, Hyperparams(lambda_S=1.0, rho=rho, **TIGHT))[0]
            for rho in (0.1, 1.0, 10.0)]
    for S in sols[1:]:
        assert np.linalg.norm(S - sols[0]) <= 1e-5 * np.linalg.norm(sols[0])


def test_warm_start_not_modified(rng):
    _, A, psi, X, S0 = random_small_instance(rng)
    state = EndmemberAdmmState.initial(S0[None] * psi[:, None, :])
    before = state.copy()
    solve_S(X, A, psi, S0, Hyperparams(), warm_start=state)
    for name in ("S", "M", "U"):
        np.testing.assert_array_equal(getattr(state, name), getattr(before, name))
