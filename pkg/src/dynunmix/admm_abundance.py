"""ADMM solver for the abundance subproblem with temporal l1 coupling.

For fixed endmembers the problem is

    min_A 0.5 sum_k ||X_k - S_k A_k||^2 + lambda_A sum_{k>=2} ||A_k - A_{k-1}||_1
    s.t. A >= 0

split as ``A_k = Q_k`` (``Q >= 0``, multiplier ``W``) and
``A_k - A_{k-1} = D`` (multiplier ``Z``). Frame indices are zero-based:
``D[j]`` and ``Z[j]`` belong to the transition from frame ``j`` to ``j + 1``.

The ``A`` update minimizes the augmented Lagrangian over all frames at
once. Its normal equations are block tridiagonal in time (diagonal blocks
``S_k^T S_k + c_k rho I``, off-diagonal blocks ``-rho I``) and identical for
every pixel, so the block LU factorization is computed once per call and
reused across iterations. At the solution each frame satisfies the
per-frame closed form of :func:`a_step` with its neighbours' values
plugged in.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import kernels
from .errors import NumericError
from .model import as_frames, check_trajectories


@dataclass
class AbundanceAdmmState:
    """Iterates of the abundance ADMM.

    ``A``, ``Q``, ``W`` have shape ``(K, P, N)``; ``D`` and ``Z`` have shape
    ``(K - 1, P, N)``.
    """

    A: np.ndarray
    Q: np.ndarray
    D: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    primal_res: float = np.inf
    dual_res: float = np.inf
    iterations: int = 0
    converged: bool = False

    @classmethod
    def initial(cls, A):
        """Cold state consistent with abundances ``A`` and zero multipliers."""
        A = np.array(A, dtype=np.float64)
        Q = np.maximum(A, 0.0)
        return cls(A=A, Q=Q, D=np.diff(Q, axis=0), W=np.zeros_like(A),
                   Z=np.zeros((A.shape[0] - 1,) + A.shape[1:]))

    def copy(self):
        return AbundanceAdmmState(self.A.copy(), self.Q.copy(), self.D.copy(), self.W.copy(),
                                  self.Z.copy(), self.primal_res, self.dual_res,
                                  self.iterations, self.converged)


def soft_threshold(t, tau):
    """Entrywise ``sign(t) * max(|t| - tau, 0)``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.maximum(t - tau, 0.0) - np.maximum(-t - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def _coupling_count(k, K):
    return 1 + (k > 0) + (k < K - 1)


def factor_coupled_system(S, rho):
    """Inverted pivots of the block LU factorization of the coupled ``A`` system.

    Pivots follow ``C_0 = B_0`` and ``C_k = B_k - rho^2 C_{k-1}^-1`` with
    ``B_k = S_k^T S_k + c_k rho I``, where ``c_k`` counts the constraints
    touching frame ``k``.

    Returns
    -------
    ndarray of shape ``(K, P, P)``
    """
    S = np.asarray(S, dtype=np.float64)
    K, _, P = S.shape
    Cinv = np.empty((K, P, P))
    for k in range(K):
        B = S[k].T @ S[k]
        B[np.diag_indices_from(B)] += _coupling_count(k, K) * rho
        if k > 0:
            B -= rho * rho * Cinv[k - 1]
        B = 0.5 * (B + B.T)
        Cinv[k] = cho_solve(cho_factor(B), np.eye(P))
    return np.ascontiguousarray(Cinv)


def a_step(k, X, S, state, h):
    """Closed-form update of frame ``k`` (zero-based) from the current state.

    Boundary frames use ``(S_k^T S_k + 2 rho I)^-1``, interior frames
    ``(S_k^T S_k + 3 rho I)^-1`` and a single frame ``(S_k^T S_k + rho I)^-1``;
    neighbours are read from ``state.A``.
    """
    X = as_frames(X)
    S = np.asarray(S, dtype=np.float64)
    K = X.shape[0]
    if not 0 <= k < K:
        raise IndexError(f"frame index {k} outside [0, {K})")
    rho = h.rho
    Sk = S[k]
    rhs = Sk.T @ X[k] + rho * (state.Q[k] - state.W[k])
    if k > 0:
        rhs += rho * (state.A[k - 1] + state.D[k - 1] - state.Z[k - 1])
    if k < K - 1:
        rhs += rho * (state.A[k + 1] - state.D[k] + state.Z[k])
    G = Sk.T @ Sk
    G[np.diag_indices_from(G)] += _coupling_count(k, K) * rho
    return cho_solve(cho_factor(G), rhs)


def solve_A(X, S, h, warm_start=None, backend=None):
    """Minimize the joint criterion over nonnegative abundances.

    Parameters
    ----------
    X : FrameSequence or array of shape ``(K, L, N)``
    S : ndarray ``(K, L, P)``
    h : Hyperparams
        ``lambda_A``, ``rho`` and the inner stopping constants are used.
    warm_start : AbundanceAdmmState, optional
        Copied, never modified. Defaults to all-zero iterates.
    backend : {"compiled", "python"}, optional

    Returns
    -------
    A : ndarray ``(K, P, N)``
        The projected variables ``Q``, hence exactly nonnegative.
    state : AbundanceAdmmState
    """
    X = as_frames(X)
    S = np.asarray(S, dtype=np.float64)
    K, L, N, P = check_trajectories(S=S, X=X)
    if not np.all(np.isfinite(S)):
        raise NumericError("non-finite endmembers passed to the abundance solver")
    kernel = kernels.get_backend(backend)
    rho = h.rho
    if warm_start is None:
        state = AbundanceAdmmState.initial(np.zeros((K, P, N)))
    else:
        state = warm_start.copy()
        check_trajectories(A=state.Q, S=S)
    A, Q, D, W, Z = (np.ascontiguousarray(v, dtype=np.float64)
                     for v in (state.A, state.Q, state.D, state.W, state.Z))

    StX = np.ascontiguousarray(np.matmul(S.transpose(0, 2, 1), X))
    Cinv = factor_coupled_system(S, rho)

    n_pri = np.sqrt(K * P * N + (K - 1) * P * N)
    n_dual = np.sqrt(K * P * N)
    thresh = h.lambda_A / rho
    A_new = np.empty_like(A)
    it = 0
    r = s = np.inf
    converged = False
    while it < h.max_inner:
        r2, s2, nAx2, nBz2, nAty2 = kernel.abundance_iteration(
            StX, Cinv, Q, D, W, Z, rho, thresh, A_new)
        A, A_new = A_new, A
        it += 1
        r = np.sqrt(r2)
        s = rho * np.sqrt(s2)
        eps_pri = n_pri * h.admm_eps_abs + h.admm_eps_rel * max(np.sqrt(nAx2), np.sqrt(nBz2))
        eps_dual = n_dual * h.admm_eps_abs + h.admm_eps_rel * rho * np.sqrt(nAty2)
        if r <= eps_pri and s <= eps_dual:
            converged = True
            break
    out = AbundanceAdmmState(A=A, Q=Q, D=D, W=W, Z=Z, primal_res=float(r), dual_res=float(s),
                             iterations=it, converged=converged)
    return Q.copy(), out
