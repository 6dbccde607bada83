import numpy as np
import pytest

from dynunmix import (ConfigurationError, Dims, DimensionError, DomainError, Hyperparams,
                      NoiseSpec, NumericError, SolverConfig, align_permutation, evaluate,
                      generate_ntf1, generate_synthetic, joint_unmix, outer_converged, update_psi)


def test_update_psi_examples():
    s0 = np.array([[1.0], [2.0]])
    assert update_psi(s0[None], s0)[0, 0] == 1.0
    assert update_psi((2 * s0)[None], s0)[0, 0] == 2.0
    assert update_psi(np.array([[[1.0], [3.0]]]), np.ones((2, 1)))[0, 0] == 2.0


def test_update_psi_zeroes_its_gradient(rng):
    S0 = rng.uniform(size=(12, 3))
    S = rng.uniform(size=(5, 12, 3))
    psi = update_psi(S, S0)
    # d/dpsi of 0.5 ||s_k - psi s0||^2 = -<s0, s_k - psi s0>
    grad = -np.einsum("lp,klp->kp", S0, S - S0[None] * psi[:, None, :])
    assert np.max(np.abs(grad)) <= 1e-10
    assert psi.min() >= 0


def test_update_psi_zero_reference():
    with pytest.raises(DomainError):
        update_psi(np.ones((1, 2, 2)), np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_outer_converged_cases():
    h = Hyperparams(eps_S=0.5, eps_A=0.5)
    S = np.ones((2, 3, 2))
    A = np.ones((2, 2, 4))
    assert outer_converged(S, S, A, A, h)
    assert not outer_converged(S, S, 2 * A, A, h)
    assert not outer_converged(S * 1.01, S, A * 2, A, h)


def test_outer_converged_zero_denominator():
    h = Hyperparams()
    Z = np.zeros((1, 2, 2))
    assert outer_converged(Z, Z, Z, Z, h)
    with pytest.raises(DomainError):
        outer_converged(Z + 1, Z, Z, Z, h)
    with pytest.raises(DimensionError):
        outer_converged(Z, np.zeros((1, 2, 3)), Z, Z, h)


def test_fixed_point_from_truth():
    dims = Dims(5, 20, 400, 3)
    X, truth = generate_synthetic(dims, noise=NoiseSpec(0.0, 0.0, 0.01, 0.0, seed=1),
                                  amplitude=0.0)
    h = Hyperparams(lambda_S=1.0, lambda_A=0.25, max_outer=5)
    res = joint_unmix(X, truth.S0, SolverConfig(h=h, init=(truth.S, truth.A, truth.psi)))
    rep = evaluate(res.S, res.A, res.psi, truth)
    assert rep.e_S <= 1e-6 and rep.e_A <= 1e-6


def test_result_invariants_and_trace(small_scene):
    X, truth = small_scene
    res = joint_unmix(X, truth.S0, SolverConfig(h=Hyperparams(max_inner=200)))
    assert len(res.objective_trace) == res.outer_iterations + 1
    assert res.S.min() >= 0 and res.A.min() >= 0 and res.psi.min() >= 0
    tr = np.array(res.objective_trace)
    assert np.all(tr[1:] <= tr[:-1] * (1 + 1e-6))
    assert res.converged


def test_no_permutation_drift(small_scene):
    X, truth = small_scene
    res = joint_unmix(X, truth.S0, SolverConfig(init=(truth.S, truth.A, truth.psi)))
    for k in range(X.K):
        assert align_permutation(res.S[k], truth.S[k]) == (0, 1, 2)


def test_reproducible_and_thread_independent(small_scene):
    X, truth = small_scene
    runs = [joint_unmix(X, truth.S0, SolverConfig(n_threads=n)) for n in (1, 1, 3)]
    assert runs[0].S.tobytes() == runs[1].S.tobytes()
    assert runs[0].A.tobytes() == runs[1].A.tobytes()
    for name in ("S", "A", "psi"):
        np.testing.assert_allclose(getattr(runs[2], name), getattr(runs[0], name),
                                   rtol=0, atol=1e-12)


def test_ntf1_scale_recovery():
    dims = Dims(8, 30, 400, 3)
    X, truth = generate_ntf1(dims, noise=NoiseSpec(0.01, 0.0, 0.01, 0.05, seed=2))
    res = joint_unmix(X, truth.S0)
    assert evaluate(res.S, res.A, res.psi, truth).e_psi <= 0.05


def test_errors():
    X = np.ones((2, 4, 5))
    with pytest.raises(DomainError):
        joint_unmix(X, np.zeros((4, 2)))
    with pytest.raises(NumericError):
        joint_unmix(X, np.full((4, 2), np.nan))
    with pytest.raises(ConfigurationError):
        joint_unmix(X, np.ones((4, 2)), SolverConfig(init="random"))
    with pytest.raises(DimensionError):
        joint_unmix(X, np.ones((4, 2)), SolverConfig(init=(np.ones((2, 4, 2)),) * 3))
    bad = X.copy()
    bad[0, 0, 0] = np.inf
    with pytest.raises(NumericError):
        joint_unmix(bad, np.ones((4, 2)))


def test_cap_reached_reports_not_converged(small_scene):
    X, truth = small_scene
    res = joint_unmix(X, truth.S0, SolverConfig(h=Hyperparams(max_outer=1)))
    assert res.outer_iterations == 1 and not res.converged
    assert np.isfinite(res.residual_S) and np.isfinite(res.residual_A)
