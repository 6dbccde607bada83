import itertools

import numpy as np
import pytest

from dynunmix import (DegeneracyError, Dims, DimensionError, DomainError, NoiseSpec,
                      align_permutation, evaluate, generate_synthetic, separate_unmix,
                      spectral_angle, vca_extract)
from dynunmix.baseline import nnls_abundances
from oracles import abundance_oracle, abundance_subproblem_value


def _pure_pixel_frame(rng, L=15, P=3, N=60):
    E = rng.uniform(0.1, 1.0, (L, P))
    A = rng.dirichlet(np.ones(P), size=N).T * 0.9
    A[:, :P] = np.eye(P)
    return E, A, E @ A


def test_vca_recovers_endmember_set(rng):
    E, _, X = _pure_pixel_frame(rng)
    S = vca_extract(X, 3)
    for p in range(3):
        assert min(np.max(np.abs(S[:, j] - E[:, p])) for j in range(3)) <= 1e-9


def test_vca_single_vertex_is_max_projection(rng):
    _, _, X = _pure_pixel_frame(rng)
    S = vca_extract(X, 1)
    w, V = np.linalg.eigh(X @ X.T / X.shape[1])
    proj = np.abs(V[:, -1] @ X)
    np.testing.assert_array_equal(S[:, 0], X[:, np.argmax(proj)])


def test_vca_degenerate_and_dimension_errors():
    X = np.tile(np.array([[1.0], [2.0], [3.0]]), (1, 10))
    with pytest.raises(DegeneracyError, match="vertex 2"):
        vca_extract(X, 2)
    with pytest.raises(DimensionError):
        vca_extract(np.ones((5, 2)), 3)


def test_align_permutation_cases(rng):
    S = rng.uniform(0.1, 1.0, (10, 3))
    assert align_permutation(S, S) == (0, 1, 2)
    assert align_permutation(S[:, [1, 0, 2]], S) == (1, 0, 2)
    assert align_permutation(3 * S, S) == (0, 1, 2)
    with pytest.raises(DomainError):
        align_permutation(np.zeros((10, 3)), S)


def test_align_permutation_matches_exhaustive_oracle(rng):
    for _ in range(10):
        ref = rng.uniform(0.1, 1.0, (8, 4))
        est = ref[:, rng.permutation(4)] + 0.05 * rng.uniform(size=(8, 4))
        perm = align_permutation(est, ref)
        cost = lambda pm: sum(spectral_angle(est[:, j], ref[:, i]) for j, i in enumerate(pm))
        best = min(itertools.permutations(range(4)), key=cost)
        assert cost(perm) == pytest.approx(cost(best), abs=1e-12)


def test_nnls_matches_oracle(rng):
    S = rng.uniform(0.1, 1.0, (1, 8, 2))
    X = S @ rng.uniform(size=(1, 2, 10)) + 0.05 * rng.standard_normal((1, 8, 10))
    A, _ = nnls_abundances(X[0], S[0])
    assert A.min() >= 0
    _, ref, _ = abundance_oracle(X, S, 0.0)
    J = abundance_subproblem_value(A[None], X, S, 0.0)
    assert abs(J - ref) <= 1e-5 * ref


def test_separate_exact_on_pure_pixel_noiseless_frames():
    dims = Dims(3, 20, 400, 3)
    X, truth = generate_synthetic(dims, noise=NoiseSpec(0.0, 0.0, 0.01, 0.0, seed=0))
    res = separate_unmix(X, 3, truth.S0)
    assert evaluate(res.S, res.A, res.psi, truth).e_S <= 1e-6
    assert res.S.min() >= 0 and res.A.min() >= 0 and res.psi.min() >= 0
    assert len(res.permutations) == 3


def test_separate_frames_processed_independently(small_scene):
    X, truth = small_scene
    res = separate_unmix(X, 3, truth.S0)
    order = [3, 1, 0, 2]
    shuffled = separate_unmix(X.frames[order], 3, truth.S0)
    np.testing.assert_array_equal(shuffled.S, res.S[order])
    np.testing.assert_array_equal(shuffled.A, res.A[order])


def test_alignment_preserves_spectra_multiset(small_scene):
    X, truth = small_scene
    res = separate_unmix(X, 3, truth.S0)
    for k in range(X.K):
        raw = vca_extract(X.frames[k], 3)
        key = lambda M: sorted(map(tuple, M.T))
        assert key(raw) == key(res.S[k])
