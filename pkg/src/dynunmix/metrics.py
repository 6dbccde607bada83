"""Scaled mean square errors and spectral angles."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError


def scaled_mse(est, truth):
    """``sum_k ||est_k - truth_k||_F^2 / sum_k ||truth_k||_F^2``.

    Works for any pair of equally shaped arrays (endmember or abundance
    trajectories, or a ``(K, P)`` scale-factor series).
    """
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {est.shape} vs {truth.shape}")
    denom = np.sum(truth * truth)
    if denom == 0:
        raise DomainError("reference trajectory is identically zero")
    return float(np.sum((est - truth) ** 2) / denom)


def spectral_angle(u, v):
    """Angle in radians between two spectra, in ``[0, pi]``.

    Equal to ``arccos(<u, v> / (|u| |v|))``. It is evaluated as
    ``2 atan2(|u' - v'|, |u' + v'|)`` on the unit vectors, which keeps full
    accuracy for nearly parallel spectra where ``arccos`` loses half the
    digits.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DomainError("spectral angle of a zero vector is undefined")
    u = u / nu
    v = v / nv
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


@dataclass
class EvalReport:
    e_S: float
    e_A: float
    e_psi: float
    e_S_frames: list = field(default_factory=list)
    e_A_frames: list = field(default_factory=list)
    e_psi_frames: list = field(default_factory=list)
    # angles[p][k]: angle between estimated and true spectrum of source p at frame k
    angles: list = field(default_factory=list)

    def to_dict(self):
        return {
            "e_S": self.e_S, "e_A": self.e_A, "e_psi": self.e_psi,
            "e_S_frames": self.e_S_frames, "e_A_frames": self.e_A_frames,
            "e_psi_frames": self.e_psi_frames, "spectral_angles": self.angles,
        }


def _per_frame(est, truth):
    out = []
    for e, t in zip(est, truth):
        denom = np.sum(t * t)
        out.append(float(np.sum((e - t) ** 2) / denom) if denom > 0 else float("nan"))
    return out


def evaluate(S, A, psi, truth):
    """Compare an estimate ``(S, A, psi)`` against a :class:`GroundTruth`."""
    S, A, psi = (np.asarray(v, dtype=np.float64) for v in (S, A, psi))
    angles = []
    for p in range(S.shape[2]):
        row = []
        for k in range(S.shape[0]):
            try:
                row.append(spectral_angle(S[k, :, p], truth.S[k, :, p]))
            except DomainError:
                row.append(float("nan"))
        angles.append(row)
    return EvalReport(
        e_S=scaled_mse(S, truth.S), e_A=scaled_mse(A, truth.A), e_psi=scaled_mse(psi, truth.psi),
        e_S_frames=_per_frame(S, truth.S), e_A_frames=_per_frame(A, truth.A),
        e_psi_frames=_per_frame(psi, truth.psi), angles=angles,
    )
