"""Frame-by-frame unmixing baseline.

Each frame is unmixed on its own: endmembers by successive orthogonal
vertex selection in a principal subspace, abundances by nonnegative least
squares, and the source order is then matched to a reference by spectral
angle. Nothing ties the frames together, which is the point of comparison
with :func:`dynunmix.solver.joint_unmix`.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .admm_abundance import solve_A
from .errors import DegeneracyError, DimensionError, DomainError
from .metrics import spectral_angle
from .model import as_frames
from .objective import Hyperparams, evaluate_objective
from .solver import UnmixResult, update_psi

# tight inner tolerances: the baseline wants the NNLS optimum, not a warm step
NNLS_PARAMS = Hyperparams(lambda_S=0.0, lambda_A=0.0, rho=1.0, max_inner=20000,
                          admm_eps_abs=1e-9, admm_eps_rel=1e-7)

_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class PermutationMap:
    """Per-frame matching of estimated sources to reference sources.

    ``frames[k][j]`` is the reference index assigned to estimated column
    ``j`` of frame ``k``.
    """

    frames: tuple

    def __len__(self):
        return len(self.frames)


def vca_extract(X_k, P, seed=None):
    """Pick ``P`` pixel spectra at the vertices of the data cone.

    The frame is projected on the top-``P`` eigenvectors of its
    second-moment matrix ``X X^T / N``. The pixel with the largest
    projected norm is taken first; each further vertex is the pixel with
    the largest component orthogonal to the span of those already chosen.
    Ties go to the lowest pixel index.

    The selection is deterministic; ``seed`` is accepted so callers can
    record per-frame seeds but does not change the result.

    Returns
    -------
    ndarray of shape ``(L, P)``
        The selected (unprojected) pixel spectra, clipped at zero.
    """
    X_k = np.asarray(X_k, dtype=np.float64)
    if X_k.ndim != 2:
        raise DimensionError("expected a single L x N frame")
    L, N = X_k.shape
    if N < P:
        raise DimensionError(f"cannot extract P={P} endmembers from N={N} pixels")
    if P > L:
        raise DimensionError(f"cannot extract P={P} endmembers from L={L} channels")
    _, vecs = np.linalg.eigh(X_k @ X_k.T / N)
    basis = vecs[:, ::-1][:, :P]
    Y = basis.T @ X_k
    norms0 = np.sqrt(np.sum(Y * Y, axis=0))
    scale = norms0.max()
    if scale == 0:
        raise DegeneracyError("vertex 1: all pixels project to zero")
    chosen = []
    residual = Y.copy()
    for i in range(P):
        norms = np.sqrt(np.sum(residual * residual, axis=0))
        idx = int(np.argmax(norms))
        if norms[idx] <= _DEGENERACY_TOL * scale:
            raise DegeneracyError(
                f"vertex {i + 1}: no pixel has a component orthogonal to the "
                f"{i} vertices already selected")
        chosen.append(idx)
        u = residual[:, idx] / norms[idx]
        residual -= np.outer(u, u @ residual)
    return np.maximum(X_k[:, chosen], 0.0)


def align_permutation(S_est, S_ref):
    """Column matching minimizing the total spectral angle, by exhaustive search.

    Returns
    -------
    tuple of int
        ``perm[j]`` is the reference column matched to estimated column ``j``.
    """
    S_est = np.asarray(S_est, dtype=np.float64)
    S_ref = np.asarray(S_ref, dtype=np.float64)
    if S_est.shape != S_ref.shape:
        raise DimensionError(f"shape mismatch: {S_est.shape} vs {S_ref.shape}")
    P = S_est.shape[1]
    if np.any(np.all(S_est == 0, axis=0)) or np.any(np.all(S_ref == 0, axis=0)):
        raise DomainError("cannot align a zero spectrum")
    angles = np.array([[spectral_angle(S_est[:, j], S_ref[:, i]) for i in range(P)]
                       for j in range(P)])
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(P)):
        cost = angles[np.arange(P), perm].sum()
        if cost < best_cost:
            best, best_cost = perm, cost
    return tuple(int(i) for i in best)


def _apply(perm, S_k, A_k):
    S_out = np.empty_like(S_k)
    A_out = np.empty_like(A_k)
    for j, i in enumerate(perm):
        S_out[:, i] = S_k[:, j]
        A_out[i] = A_k[j]
    return S_out, A_out


def nnls_abundances(X_k, S_k, h=NNLS_PARAMS, backend=None):
    """Nonnegative least-squares abundances of one frame (``P x N``)."""
    A, state = solve_A(np.asarray(X_k)[None], np.asarray(S_k)[None], h, backend=backend)
    return A[0], state


def separate_unmix(X, P, S_ref, seed=0, backend=None):
    """Unmix every frame independently and align sources to ``S_ref``.

    Scale factors are the least-squares fit of each aligned spectrum to its
    reference column.
    """
    frames = as_frames(X)
    S_ref = np.asarray(S_ref, dtype=np.float64)
    K, L, N = frames.shape
    if S_ref.shape != (L, P):
        raise DimensionError(f"reference spectra must be ({L}, {P}), got {S_ref.shape}")
    S = np.empty((K, L, P))
    A = np.empty((K, P, N))
    perms = []
    converged = True
    iters = []
    for k in range(K):
        S_k = vca_extract(frames[k], P, seed + k)
        A_k, state = nnls_abundances(frames[k], S_k, backend=backend)
        converged &= state.converged
        iters.append(state.iterations)
        perm = align_permutation(S_k, S_ref)
        perms.append(perm)
        S[k], A[k] = _apply(perm, S_k, A_k)
    psi = update_psi(S, S_ref)
    fit_only = Hyperparams(lambda_S=0.0, lambda_A=0.0)
    return UnmixResult(S=S, A=A, psi=psi,
                       objective_trace=[evaluate_objective(S, A, psi, frames, S_ref, fit_only)],
                       outer_iterations=0, converged=bool(converged), residual_S=0.0,
                       residual_A=0.0, inner_iterations=iters,
                       permutations=PermutationMap(tuple(perms)))
