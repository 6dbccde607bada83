"""Joint regularized criterion, hyperparameter tuning and smooth gradients."""

from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import as_frames, check_trajectories


@dataclass(frozen=True)
class Hyperparams:
    """Weights, ADMM penalty and stopping constants of the joint solver.

    ``lambda_S`` is either a scalar or a length-``P`` vector of per-source
    weights on the spectral variability term.
    """

    lambda_S: Union[float, tuple] = 1.0
    lambda_A: float = 0.25
    rho: float = 1.0
    eps_S: float = 1e-6
    eps_A: float = 1e-6
    max_outer: int = 200
    max_inner: int = 500
    admm_eps_abs: float = 1e-6
    admm_eps_rel: float = 1e-4

    def __post_init__(self):
        lam = self.lambda_S
        if np.ndim(lam) > 0:
            lam = tuple(float(v) for v in np.ravel(lam))
            object.__setattr__(self, "lambda_S", lam)
        if np.any(np.asarray(lam) < 0) or self.lambda_A < 0:
            raise ConfigurationError("regularization weights must be nonnegative")
        if not self.rho > 0:
            raise ConfigurationError("rho must be positive")
        for name in ("eps_S", "eps_A", "admm_eps_abs", "admm_eps_rel"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigurationError("iteration caps must be at least 1")

    def lambda_vector(self, P):
        """Per-source spectral weights as a length-``P`` array."""
        lam = np.asarray(self.lambda_S, dtype=np.float64)
        if lam.ndim == 0:
            return np.full(P, float(lam))
        if lam.shape != (P,):
            raise ConfigurationError(f"lambda_S has {lam.size} entries, expected P={P}")
        return lam.copy()

    def to_dict(self):
        return asdict(self)


def tune_hyperparameters(sigma_e, sigma_v, b):
    """MAP weights from the noise levels: ``(sigma_e**2 / sigma_v**2, sigma_e**2 / b)``."""
    if sigma_v <= 0 or b <= 0:
        raise DomainError("sigma_v and b must be positive")
    if sigma_e < 0:
        raise DomainError("sigma_e must be nonnegative")
    # exact rational evaluation, rounded once: the correctly rounded ratios
    e2 = Fraction(sigma_e) ** 2
    return float(e2 / Fraction(sigma_v) ** 2), float(e2 / Fraction(b))


def scaled_reference(S0, psi):
    """``S0 psi_k`` for every frame, shape ``(K, L, P)``."""
    return np.asarray(S0)[None, :, :] * np.asarray(psi)[:, None, :]


def evaluate_objective(S, A, psi, X, S0, h):
    """Value of the joint criterion.

    ``0.5 sum_k ||X_k - S_k A_k||_F^2
    + 0.5 sum_k sum_p lambda_p ||s_k^p - psi_k^p s_0^p||^2
    + lambda_A sum_{k>=2} ||A_k - A_{k-1}||_1``
    """
    X = as_frames(X)
    S = np.asarray(S, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    S0 = np.asarray(S0, dtype=np.float64)
    _, _, _, P = check_trajectories(S=S, A=A, psi=psi, S0=S0, X=X)
    fit = 0.5 * np.sum((X - np.matmul(S, A)) ** 2)
    lam = h.lambda_vector(P)
    spectral = 0.5 * np.sum(lam * np.sum((S - scaled_reference(S0, psi)) ** 2, axis=(0, 1)))
    change = h.lambda_A * np.sum(np.abs(np.diff(A, axis=0)))
    return float(fit + spectral + change)


def gradient_smooth_S(S, A, psi, X, S0, h):
    """Gradient in ``S`` of the two smooth terms, ``(S_k A_k - X_k) A_k^T + lambda (S_k - S0 psi_k)``."""
    X = as_frames(X)
    S = np.asarray(S, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    _, _, _, P = check_trajectories(S=S, A=A, psi=psi, S0=S0, X=X)
    lam = h.lambda_vector(P)
    resid = np.matmul(S, A) - X
    return np.matmul(resid, A.transpose(0, 2, 1)) + lam * (S - scaled_reference(S0, psi))
