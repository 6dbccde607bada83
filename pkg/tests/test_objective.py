import numpy as np
import pytest

from dynunmix import (ConfigurationError, DimensionError, DomainError, Hyperparams,
                      evaluate_objective, gradient_smooth_S, tune_hyperparameters)
from oracles import central_difference, objective_loops, random_small_instance


def test_zero_at_exact_static_model(rng):
    S0 = rng.uniform(size=(6, 2))
    psi = np.ones((3, 2))
    A = np.repeat(rng.uniform(size=(1, 2, 5)), 3, axis=0)
    S = S0[None] * psi[:, None, :]
    assert evaluate_objective(S, A, psi, S @ A, S0, Hyperparams()) == 0.0


def test_scalar_residual_only():
    h = Hyperparams(lambda_S=0.0, lambda_A=0.0)
    one = np.ones((1, 1, 1))
    assert evaluate_objective(one, one, np.ones((1, 1)), 2 * one, np.ones((1, 1)), h) == 0.5


def test_scalar_two_frame_sum():
    X = np.array([2.0, 4.0]).reshape(2, 1, 1)
    S = np.ones((2, 1, 1))
    A = np.array([2.0, 3.0]).reshape(2, 1, 1)
    h = Hyperparams(lambda_S=1.0, lambda_A=0.5)
    assert evaluate_objective(S, A, np.ones((2, 1)), X, np.ones((1, 1)), h) == 1.0


def test_matches_loop_oracle_with_vector_lambda(rng):
    S, A, psi, X, S0 = random_small_instance(rng)
    h = Hyperparams(lambda_S=(0.5, 2.0), lambda_A=0.3)
    expected = objective_loops(S, A, psi, X, S0, (0.5, 2.0), 0.3)
    assert evaluate_objective(S, A, psi, X, S0, h) == pytest.approx(expected, rel=1e-12)


def test_nonnegative_and_permutation_invariant(rng):
    S, A, psi, X, S0 = random_small_instance(rng, P=3, L=8)
    h = Hyperparams(lambda_S=(0.5, 1.0, 2.0), lambda_A=0.3)
    J = evaluate_objective(S, A, psi, X, S0, h)
    assert J >= 0
    perm = [2, 0, 1]
    hp = Hyperparams(lambda_S=tuple(np.array(h.lambda_S)[perm]), lambda_A=0.3)
    Jp = evaluate_objective(S[:, :, perm], A[:, perm, :], psi[:, perm], X, S0[:, perm], hp)
    assert Jp == pytest.approx(J, rel=1e-13)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        evaluate_objective(np.ones((2, 3, 2)), np.ones((2, 3, 4)), np.ones((2, 2)),
                           np.ones((2, 3, 4)), np.ones((3, 2)), Hyperparams())


def test_tune_benchmark_noise_levels():
    assert tune_hyperparameters(0.05, 0.05, 0.01) == (1.0, 0.25)


def test_tune_equal_sigmas_and_arithmetic():
    assert tune_hyperparameters(0.3, 0.3, 7.0)[0] == 1.0
    lam_s, lam_a = tune_hyperparameters(0.1, 0.2, 0.5)
    assert lam_s == pytest.approx(0.25, rel=1e-15)
    assert lam_a == pytest.approx(0.02, rel=1e-15)


@pytest.mark.parametrize("args", [(0.1, 0.0, 1.0), (0.1, 1.0, 0.0)])
def test_tune_domain_errors(args):
    with pytest.raises(DomainError):
        tune_hyperparameters(*args)


def test_hyperparams_validation():
    with pytest.raises(ConfigurationError):
        Hyperparams(rho=0.0)
    with pytest.raises(ConfigurationError):
        Hyperparams(lambda_S=(1.0, -1.0))
    with pytest.raises(ConfigurationError):
        Hyperparams(max_inner=0)
    with pytest.raises(ConfigurationError):
        Hyperparams(lambda_S=(1.0, 2.0)).lambda_vector(3)


def test_gradient_zero_at_model(rng):
    S0 = rng.uniform(size=(6, 2))
    psi = rng.uniform(0.5, 1.5, (2, 2))
    A = rng.uniform(size=(2, 2, 5))
    S = S0[None] * psi[:, None, :]
    np.testing.assert_array_equal(gradient_smooth_S(S, A, psi, S @ A, S0, Hyperparams()), 0.0)


def test_gradient_without_spectral_term(rng):
    S, A, psi, X, S0 = random_small_instance(rng)
    g = gradient_smooth_S(S, A, psi, X, S0, Hyperparams(lambda_S=0.0))
    np.testing.assert_allclose(g, (S @ A - X) @ A.transpose(0, 2, 1), rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(500 + seed)
    S, A, psi, X, S0 = random_small_instance(rng)
    h = Hyperparams(lambda_S=tuple(rng.uniform(0.1, 3.0, 2)), lambda_A=0.4)
    g = gradient_smooth_S(S, A, psi, X, S0, h)
    # the l1 term does not depend on S, so finite differences of the whole criterion apply
    fd = central_difference(lambda s: evaluate_objective(s, A, psi, X, S0, h), S)
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)
