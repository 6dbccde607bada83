"""Outer alternating nonnegative least squares driver."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .admm_abundance import AbundanceAdmmState, solve_A
from .admm_endmember import EndmemberAdmmState, solve_S
from .errors import ConfigurationError, DimensionError, DomainError, NumericError
from .model import FrameSequence, check_trajectories
from .objective import Hyperparams, evaluate_objective

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Settings of :func:`joint_unmix`.

    ``init`` is ``"default"`` (unit scale factors, constant abundances
    ``1/P`` and ``S_k = S0``) or an explicit ``(S, A, psi)`` triple.
    """

    h: Hyperparams = field(default_factory=Hyperparams)
    init: Union[str, Tuple[np.ndarray, np.ndarray, np.ndarray]] = "default"
    record_trace: bool = True
    n_threads: int = 1
    backend: Optional[str] = None


@dataclass
class UnmixResult:
    S: np.ndarray
    A: np.ndarray
    psi: np.ndarray
    objective_trace: list
    outer_iterations: int
    converged: bool
    residual_S: float
    residual_A: float
    inner_iterations: list = field(default_factory=list)
    permutations: Optional[list] = None


def update_psi(S, S0):
    """Least-squares scale factors ``<s0^p, s_k^p> / <s0^p, s0^p>``, shape ``(K, P)``."""
    S = np.asarray(S, dtype=np.float64)
    S0 = np.asarray(S0, dtype=np.float64)
    check_trajectories(S=S, S0=S0)
    norms = np.sum(S0 * S0, axis=0)
    if np.any(norms <= 0):
        raise DomainError("reference spectra contain a zero-norm column")
    return np.einsum("lp,klp->kp", S0, S) / norms


def _relative_change(new, old, name):
    num = np.sum((new - old) ** 2)
    den = np.sum(old * old)
    if den == 0:
        if num == 0:
            return 0.0
        raise DomainError(f"relative change of {name} is undefined: previous iterate is zero")
    return float(num / den)


def outer_converged(S_new, S_old, A_new, A_old, h):
    """True when both relative squared changes are below ``eps_S`` and ``eps_A``."""
    if np.shape(S_new) != np.shape(S_old) or np.shape(A_new) != np.shape(A_old):
        raise DimensionError("iterates of different shapes")
    rs = _relative_change(np.asarray(S_new), np.asarray(S_old), "S")
    ra = _relative_change(np.asarray(A_new), np.asarray(A_old), "A")
    return rs < h.eps_S and ra < h.eps_A


def _initial_point(init, K, L, N, P, S0):
    if isinstance(init, str):
        if init != "default":
            raise ConfigurationError(f"unknown initialization {init!r}")
        return (np.repeat(S0[None], K, axis=0), np.full((K, P, N), 1.0 / P), np.ones((K, P)))
    S, A, psi = (np.array(v, dtype=np.float64) for v in init)
    if S.shape != (K, L, P) or A.shape != (K, P, N) or psi.shape != (K, P):
        raise DimensionError("initial (S, A, psi) do not match the data")
    return S, A, psi


def joint_unmix(X, S0, cfg=None):
    """Jointly estimate endmembers, abundances and scale factors of all frames.

    Each outer iteration runs the endmember ADMM, then the abundance ADMM,
    then the closed-form scale-factor update, until the relative changes of
    ``S`` and ``A`` fall below ``eps_S`` and ``eps_A`` or ``max_outer`` is
    reached. ADMM variables are warm started across outer iterations.

    Parameters
    ----------
    X : FrameSequence or array ``(K, L, N)``
    S0 : array ``(L, P)``
        Reference spectra, held fixed.
    cfg : SolverConfig, optional

    Returns
    -------
    UnmixResult
    """
    cfg = cfg or SolverConfig()
    h = cfg.h
    if not isinstance(X, FrameSequence):
        X = FrameSequence(X)
    S0 = np.asarray(S0, dtype=np.float64)
    if not np.all(np.isfinite(S0)):
        raise NumericError("reference spectra contain non-finite values")
    K, L, N, P = check_trajectories(X=X.frames, S0=S0)
    if P > min(L, N):
        raise ConfigurationError(f"P={P} exceeds min(L, N)={min(L, N)}")
    if np.any(np.sum(S0 * S0, axis=0) == 0):
        raise DomainError("reference spectra contain a zero column")

    S, A, psi = _initial_point(cfg.init, K, L, N, P, S0)
    s_state = EndmemberAdmmState.initial(S)
    a_state = AbundanceAdmmState.initial(A)
    S, A = s_state.M.copy(), a_state.Q.copy()
    trace = [evaluate_objective(S, A, psi, X, S0, h)] if cfg.record_trace else []
    inner = []
    converged = False
    res_S = res_A = float("inf")
    it = 0
    while it < h.max_outer:
        S_new, s_state = solve_S(X, A, psi, S0, h, warm_start=s_state,
                                 n_threads=cfg.n_threads, backend=cfg.backend)
        A_new, a_state = solve_A(X, S_new, h, warm_start=a_state, backend=cfg.backend)
        psi = update_psi(S_new, S0)
        it += 1
        res_S = _relative_change(S_new, S, "S")
        res_A = _relative_change(A_new, A, "A")
        S, A = S_new, A_new
        inner.append((int(s_state.iterations.max()), int(a_state.iterations)))
        if cfg.record_trace:
            trace.append(evaluate_objective(S, A, psi, X, S0, h))
        logger.debug("outer %d: dS=%.3e dA=%.3e J=%s", it, res_S, res_A,
                     trace[-1] if trace else "-")
        if res_S < h.eps_S and res_A < h.eps_A:
            converged = True
            break
    return UnmixResult(S=S, A=A, psi=psi, objective_trace=trace, outer_iterations=it,
                       converged=converged, residual_S=res_S, residual_A=res_A,
                       inner_iterations=inner)
