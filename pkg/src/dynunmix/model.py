"""Data model of the dynamical mixing system and the synthetic scene generator.

Arrays are stacked along a leading time axis:

* observations ``X``: ``(K, L, N)``, pixel spectra in columns of each frame;
* endmembers ``S``: ``(K, L, P)``;
* abundances ``A``: ``(K, P, N)``, nonnegative with no sum-to-one constraint;
* scale factors ``psi``: ``(K, P)``, the diagonals of the per-frame scalings;
* reference spectra ``S0``: ``(L, P)``.

The generator draws every random quantity from :mod:`dynunmix.rng`, so a
given configuration and seed always produces the same bytes.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import rng as _rng
from .errors import ConfigurationError, DimensionError, NumericError


@dataclass(frozen=True)
class Dims:
    """Problem sizes: frames ``K``, channels ``L``, pixels ``N``, sources ``P``."""

    K: int
    L: int
    N: int
    P: int

    def __post_init__(self):
        for name in ("K", "L", "N", "P"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if self.P > min(self.L, self.N):
            raise ConfigurationError(
                f"P={self.P} exceeds min(L, N)={min(self.L, self.N)}")


@dataclass(frozen=True)
class FrameSequence:
    """K observed frames, each an ``L x N`` matrix of finite reals."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise DimensionError(f"expected a (K, L, N) array, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise NumericError("frame sequence contains non-finite values")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def K(self):
        return self.frames.shape[0]

    @property
    def L(self):
        return self.frames.shape[1]

    @property
    def N(self):
        return self.frames.shape[2]

    def __len__(self):
        return self.K

    def __getitem__(self, k):
        return self.frames[k]


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels and seed of the synthetic generator.

    ``sigma_e`` is the observation noise std, ``sigma_v`` the spectral
    distortion std, ``b`` the Laplace scale of abundance changes and
    ``change_density`` the probability that an abundance entry changes at a
    given frame transition.
    """

    sigma_e: float = 0.05
    sigma_v: float = 0.05
    b: float = 0.01
    change_density: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.sigma_e < 0 or self.sigma_v < 0 or self.b < 0:
            raise ConfigurationError("noise levels must be nonnegative")
        if not 0.0 <= self.change_density <= 1.0:
            raise ConfigurationError("change_density must lie in [0, 1]")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigurationError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class CircleGeometry:
    """Image grid and the circular support of each source.

    Centers are ``(x, y)`` pixel coordinates, ``x`` along the width. Pixel
    ``n`` of a frame is at row ``n // width`` and column ``n % width``.
    """

    width: int
    height: int
    centers: Tuple[Tuple[float, float], ...]
    radii: Tuple[float, ...]

    @property
    def n_pixels(self):
        return self.width * self.height


@dataclass
class GroundTruth:
    """Latent variables of a generated scene.

    ``E``, ``V`` and ``D`` hold the realized observation noise, spectral
    distortion and abundance changes (``D[j]`` is the change from frame
    ``j`` to frame ``j + 1``), after nonnegativity clamping.
    """

    S: np.ndarray
    A: np.ndarray
    psi: np.ndarray
    S0: np.ndarray
    E: Optional[np.ndarray] = field(default=None, repr=False)
    V: Optional[np.ndarray] = field(default=None, repr=False)
    D: Optional[np.ndarray] = field(default=None, repr=False)


def default_geometry(width=50, height=50, P=3):
    """Circle layout with pairwise overlaps and one pure pixel per source.

    For the 50 x 50, three-source case this is the fixed layout with radius
    15 and centers (17, 17), (33, 17), (25, 35). Other sizes place the
    centers on a ring around the image center.
    """
    if (width, height, P) == (50, 50, 3):
        return CircleGeometry(50, 50, ((17.0, 17.0), (33.0, 17.0), (25.0, 35.0)),
                              (15.0, 15.0, 15.0))
    if P == 1:
        r = 0.3 * min(width, height)
        return CircleGeometry(width, height, (((width - 1) / 2, (height - 1) / 2),), (r,))
    ring = 0.25 * min(width, height)
    cx, cy = (width - 1) / 2, (height - 1) / 2
    angles = 2 * np.pi * np.arange(P) / P - np.pi / 2
    centers = tuple((float(np.round(cx + ring * np.cos(t))), float(np.round(cy + ring * np.sin(t))))
                    for t in angles)
    # chord between neighbouring centers; radius just below it keeps every
    # center outside the other circles while neighbours still overlap
    chord = 2 * ring * np.sin(np.pi / P)
    radius = max(0.9 * chord, 1.0)
    return CircleGeometry(width, height, centers, (radius,) * P)


def _pixel_coords(width, height):
    n = np.arange(width * height)
    return (n % width).astype(np.float64), (n // width).astype(np.float64)


def make_circle_abundances(dims, geometry):
    """First-frame abundance map built from overlapping circles.

    Pixels inside ``m`` circles get ``1/m`` on each covering source; pixels
    outside every circle get 1 on the source with the nearest center (lowest
    index on ties).

    Returns
    -------
    ndarray of shape ``(P, N)``
    """
    P = dims.P
    if geometry.n_pixels != dims.N:
        raise ConfigurationError(
            f"grid {geometry.width}x{geometry.height} does not hold N={dims.N} pixels")
    if len(geometry.centers) != P or len(geometry.radii) != P:
        raise ConfigurationError(f"geometry must describe exactly P={P} circles")
    x, y = _pixel_coords(geometry.width, geometry.height)
    centers = np.asarray(geometry.centers, dtype=np.float64)
    radii = np.asarray(geometry.radii, dtype=np.float64)
    if np.any(radii <= 0):
        raise ConfigurationError("circle radii must be positive")
    if (np.any(centers[:, 0] < 0) or np.any(centers[:, 0] > geometry.width - 1)
            or np.any(centers[:, 1] < 0) or np.any(centers[:, 1] > geometry.height - 1)):
        raise ConfigurationError("circle centers must lie on the image grid")

    dist2 = (x[None, :] - centers[:, 0:1]) ** 2 + (y[None, :] - centers[:, 1:2]) ** 2
    inside = dist2 <= radii[:, None] ** 2
    counts = inside.sum(axis=0)
    A = np.where(inside, 1.0, 0.0)
    covered = counts > 0
    A[:, covered] /= counts[covered]
    nearest = np.argmin(dist2[:, ~covered], axis=0)
    A[:, ~covered] = 0.0
    A[nearest, np.flatnonzero(~covered)] = 1.0

    for p in range(P):
        if not np.any((A[p] == 1.0) & (A.sum(axis=0) == 1.0)):
            raise ConfigurationError(f"source {p} has no pure pixel with this geometry")
    return A


def make_sinusoid_scales(dims, amplitude=0.2):
    """One sinusoid period of scale factors over the K frames.

    ``psi[k, p] = 1 + amplitude * sin(2 pi k / K + 2 pi p / P)`` with
    zero-based ``k`` and ``p``.
    """
    if not 0.0 <= amplitude < 1.0:
        raise ConfigurationError("amplitude must lie in [0, 1)")
    k = np.arange(dims.K)[:, None]
    p = np.arange(dims.P)[None, :]
    return 1.0 + amplitude * np.sin(2 * np.pi * k / dims.K + 2 * np.pi * p / dims.P)


def make_bump_spectra(L, P, seed=0, n_bumps=3):
    """Smooth synthetic reference spectra, each a sum of Gaussian bumps.

    Every column is normalized to a peak value of 1.
    """
    stream = _rng.CounterStream(seed, _rng.STREAM_SPECTRA)
    u = stream.uniform((P, n_bumps, 3))
    grid = np.arange(L, dtype=np.float64)[:, None]
    S0 = np.empty((L, P))
    for p in range(P):
        centers = (0.05 + 0.9 * u[p, :, 0]) * (L - 1)
        widths = (0.02 + 0.06 * u[p, :, 1]) * L
        heights = 0.4 + 0.6 * u[p, :, 2]
        col = (heights * np.exp(-0.5 * ((grid - centers) / widths) ** 2)).sum(axis=1)
        S0[:, p] = col / col.max()
    return S0


def forward_mix(S, A):
    """Noiseless frames ``X_k = S_k A_k``."""
    S = np.asarray(S, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if S.ndim != 3 or A.ndim != 3 or S.shape[0] != A.shape[0] or S.shape[2] != A.shape[1]:
        raise DimensionError(f"cannot mix endmembers {S.shape} with abundances {A.shape}")
    return FrameSequence(np.matmul(S, A))


def _check_reference(S0, dims):
    S0 = np.array(S0, dtype=np.float64)
    if S0.shape != (dims.L, dims.P):
        raise DimensionError(f"reference spectra must be ({dims.L}, {dims.P}), got {S0.shape}")
    if np.any(S0 < 0) or not np.all(np.isfinite(S0)):
        raise ConfigurationError("reference spectra must be finite and nonnegative")
    if np.any(np.all(S0 == 0, axis=0)):
        raise ConfigurationError("reference spectra contain an all-zero column")
    return S0


def _generate(dims, geometry, noise, spectra_source, amplitude, distortion):
    if geometry is None:
        side = int(round(np.sqrt(dims.N)))
        if side * side != dims.N:
            raise ConfigurationError("geometry is required when N is not a square")
        geometry = default_geometry(side, side, dims.P)
    if spectra_source is None:
        S0 = make_bump_spectra(dims.L, dims.P, noise.seed)
    else:
        S0 = _check_reference(spectra_source, dims)
    K, L, N, P = dims.K, dims.L, dims.N, dims.P
    seed = noise.seed

    A = np.empty((K, P, N))
    A[0] = make_circle_abundances(dims, geometry)
    if K > 1:
        mask = _rng.CounterStream(seed, _rng.STREAM_CHANGE_MASK).bernoulli(
            (K - 1, P, N), noise.change_density)
        values = _rng.CounterStream(seed, _rng.STREAM_CHANGE_VALUE).laplace(
            (K - 1, P, N), noise.b)
        raw_change = np.where(mask, values, 0.0)
        for k in range(1, K):
            A[k] = np.maximum(A[k - 1] + raw_change[k - 1], 0.0)
    D = np.diff(A, axis=0)

    psi = make_sinusoid_scales(dims, amplitude)
    clean = S0[None, :, :] * psi[:, None, :]
    if distortion:
        raw_v = _rng.CounterStream(seed, _rng.STREAM_DISTORTION).normal((K, L, P), noise.sigma_v)
        S = np.maximum(clean + raw_v, 0.0)
    else:
        S = clean
    V = S - clean

    clean_X = np.matmul(S, A)
    X = clean_X + _rng.CounterStream(seed, _rng.STREAM_NOISE).normal((K, L, N), noise.sigma_e)
    # recorded after rounding so that X - S A == E holds exactly
    E = X - clean_X
    truth = GroundTruth(S=S, A=A, psi=psi, S0=S0, E=E, V=V, D=D)
    return FrameSequence(X), truth


def generate_synthetic(dims, geometry=None, noise=None, spectra_source=None, amplitude=0.2):
    """Simulate a multitemporal scene under the simplified dynamical model.

    ``A_1`` comes from the circle geometry, ``A_k = max(A_{k-1} + D_k, 0)``
    with sparse Laplace changes, ``S_k = max(S0 psi_k + V_k, 0)`` and
    ``X_k = S_k A_k + E_k``.

    Parameters
    ----------
    dims : Dims
    geometry : CircleGeometry, optional
        Defaults to :func:`default_geometry` on a square grid.
    noise : NoiseSpec, optional
    spectra_source : array_like of shape ``(L, P)``, optional
        Reference spectra; synthetic Gaussian-bump spectra when omitted.
    amplitude : float
        Sinusoid amplitude of the scale factors.

    Returns
    -------
    (FrameSequence, GroundTruth)
    """
    return _generate(dims, geometry, noise or NoiseSpec(), spectra_source, amplitude, True)


def generate_ntf1(dims, geometry=None, noise=None, spectra_source=None, amplitude=0.2):
    """Same as :func:`generate_synthetic` without spectral distortion.

    The frames follow ``X_k = S0 psi_k A_k + E_k`` exactly.
    """
    return _generate(dims, geometry, noise or NoiseSpec(), spectra_source, amplitude, False)


def check_trajectories(S=None, A=None, psi=None, S0=None, X=None):
    """Validate mutually consistent shapes; returns ``(K, L, N, P)`` with ``None`` for unknowns."""
    K = L = N = P = None

    def bind(name, current, value):
        if current is not None and current != value:
            raise DimensionError(f"inconsistent {name}: {current} vs {value}")
        return value

    if X is not None:
        K, L, N = X.shape
    if S is not None:
        if np.ndim(S) != 3:
            raise DimensionError("endmembers must be a (K, L, P) array")
        K = bind("K", K, S.shape[0])
        L = bind("L", L, S.shape[1])
        P = bind("P", P, S.shape[2])
    if A is not None:
        if np.ndim(A) != 3:
            raise DimensionError("abundances must be a (K, P, N) array")
        K = bind("K", K, A.shape[0])
        P = bind("P", P, A.shape[1])
        N = bind("N", N, A.shape[2])
    if psi is not None:
        if np.ndim(psi) != 2:
            raise DimensionError("scale factors must be a (K, P) array")
        K = bind("K", K, psi.shape[0])
        P = bind("P", P, psi.shape[1])
    if S0 is not None:
        if np.ndim(S0) != 2:
            raise DimensionError("reference spectra must be an (L, P) array")
        L = bind("L", L, S0.shape[0])
        P = bind("P", P, S0.shape[1])
    return K, L, N, P


def as_frames(X) -> np.ndarray:
    """Return the ``(K, L, N)`` array behind a FrameSequence or array-like."""
    if isinstance(X, FrameSequence):
        return X.frames
    return FrameSequence(X).frames


__all__: Sequence[str] = [
    "Dims", "FrameSequence", "NoiseSpec", "CircleGeometry", "GroundTruth",
    "default_geometry", "make_circle_abundances", "make_sinusoid_scales",
    "make_bump_spectra", "forward_mix", "generate_synthetic", "generate_ntf1",
    "check_trajectories", "as_frames",
]
