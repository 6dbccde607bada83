"""ADMM solver for the nonnegative endmember subproblem.

For fixed abundances and scale factors the K frames decouple; each frame
solves

    min_S 0.5 ||X_k - S A_k||^2 + 0.5 sum_p lambda_p ||s^p - psi_k^p s_0^p||^2
    s.t. S >= 0

with the splitting ``S = M``, ``M >= 0`` and scaled multiplier ``U``.
Frames run their own stopping test, so results do not depend on the order
in which frames are processed or on the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import kernels
from .errors import NumericError
from .model import as_frames, check_trajectories


@dataclass
class EndmemberAdmmState:
    """Iterates of the endmember ADMM, all ``(K, L, P)`` except the per-frame diagnostics."""

    S: np.ndarray
    M: np.ndarray
    U: np.ndarray
    primal_res: np.ndarray
    dual_res: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray

    @classmethod
    def initial(cls, S):
        """Cold state whose feasible variable is ``max(S, 0)``."""
        S = np.array(S, dtype=np.float64)
        K = S.shape[0]
        return cls(S=S.copy(), M=np.maximum(S, 0.0), U=np.zeros_like(S),
                   primal_res=np.full(K, np.inf), dual_res=np.full(K, np.inf),
                   iterations=np.zeros(K, dtype=np.int64), converged=np.zeros(K, dtype=bool))

    def copy(self):
        return EndmemberAdmmState(*(np.array(v, copy=True) for v in
                                    (self.S, self.M, self.U, self.primal_res, self.dual_res,
                                     self.iterations, self.converged)))


def _gram_inverse(A_k, lam, rho):
    G = A_k @ A_k.T
    G[np.diag_indices_from(G)] += lam + rho
    return cho_solve(cho_factor(G), np.eye(G.shape[0]))


def _constant_term(X_k, A_k, S0, psi_k, lam):
    return X_k @ A_k.T + S0 * (psi_k * lam)


def s_step(X_k, A_k, S0, psi_k, M_k, U_k, h):
    """Closed-form minimizer of the augmented Lagrangian in ``S_k``.

    ``S_k = (X_k A_k^T + S0 Lambda psi_k + rho (M_k - U_k)) (A_k A_k^T + Lambda + rho I)^-1``
    """
    arrays = [np.asarray(a, dtype=np.float64) for a in (X_k, A_k, S0, psi_k, M_k, U_k)]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NumericError("non-finite input to the endmember update")
    X_k, A_k, S0, psi_k, M_k, U_k = arrays
    lam = h.lambda_vector(S0.shape[1])
    G = A_k @ A_k.T
    G[np.diag_indices_from(G)] += lam + h.rho
    rhs = _constant_term(X_k, A_k, S0, psi_k, lam) + h.rho * (M_k - U_k)
    # G is symmetric, so S G = rhs  <=>  G S^T = rhs^T
    return cho_solve(cho_factor(G), rhs.T).T


def _solve_frame(k, C, Ginv, state, h, kernel):
    M = state.M[k]
    U = state.U[k]
    S = state.S[k]
    n = M.size
    rho = h.rho
    root_n = np.sqrt(n)
    it = 0
    r = s = np.inf
    converged = False
    while it < h.max_inner:
        r2, dm2, nS2, nM2, nU2 = kernel.endmember_iteration(C, Ginv, M, U, rho, S)
        it += 1
        r = np.sqrt(r2)
        s = rho * np.sqrt(dm2)
        eps_pri = root_n * h.admm_eps_abs + h.admm_eps_rel * max(np.sqrt(nS2), np.sqrt(nM2))
        eps_dual = root_n * h.admm_eps_abs + h.admm_eps_rel * rho * np.sqrt(nU2)
        if r <= eps_pri and s <= eps_dual:
            converged = True
            break
    state.primal_res[k] = r
    state.dual_res[k] = s
    state.iterations[k] = it
    state.converged[k] = converged


def solve_S(X, A, psi, S0, h, warm_start=None, n_threads=1, backend=None):
    """Minimize the joint criterion over nonnegative endmembers.

    Parameters
    ----------
    X : FrameSequence or array of shape ``(K, L, N)``
    A : ndarray ``(K, P, N)``
    psi : ndarray ``(K, P)``
    S0 : ndarray ``(L, P)``
    h : Hyperparams
    warm_start : EndmemberAdmmState, optional
        Previous iterates; copied, never modified. Defaults to ``S0 psi_k``
        with zero multipliers.
    n_threads : int
        Frames are independent and may be processed concurrently.
    backend : {"compiled", "python"}, optional

    Returns
    -------
    S : ndarray ``(K, L, P)``
        The projected variables ``M``, hence exactly nonnegative.
    state : EndmemberAdmmState
    """
    X = as_frames(X)
    A = np.asarray(A, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    S0 = np.asarray(S0, dtype=np.float64)
    K, L, N, P = check_trajectories(A=A, psi=psi, S0=S0, X=X)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(psi)) and np.all(np.isfinite(S0))):
        raise NumericError("non-finite input to the endmember solver")
    kernel = kernels.get_backend(backend)
    lam = h.lambda_vector(P)
    if warm_start is None:
        state = EndmemberAdmmState.initial(S0[None, :, :] * psi[:, None, :])
    else:
        state = warm_start.copy()
        check_trajectories(S=state.M, A=A)
    for name in ("S", "M", "U"):
        setattr(state, name, np.ascontiguousarray(getattr(state, name), dtype=np.float64))

    def run(k):
        C = np.ascontiguousarray(_constant_term(X[k], A[k], S0, psi[k], lam))
        Ginv = np.ascontiguousarray(_gram_inverse(A[k], lam, h.rho))
        _solve_frame(k, C, Ginv, state, h, kernel)

    if n_threads > 1 and K > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(run, range(K)))
    else:
        for k in range(K):
            run(k)
    return state.M.copy(), state
