"""On-disk formats: HSTS1 binary stacks, CSV matrices, PGM abundance maps.

HSTS1 layout::

    magic=HSTS1
    kind=sequence|endmembers|abundances
    K=<int>
    L=<int>
    N=<int>
    P=<int>                      (trajectory files only)
    dtype=f64le
    layout=frame-major,column-major
    <empty line>
    <payload>

The payload holds the frames in order, each frame column-major, as
little-endian IEEE-754 doubles. Frame shapes are ``L x N`` for sequences,
``L x P`` for endmembers and ``P x N`` for abundances.
"""

import json
import os
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .model import FrameSequence, GroundTruth

MAGIC = "HSTS1"
DTYPE = "f64le"
LAYOUT = "frame-major,column-major"
_KINDS = ("sequence", "endmembers", "abundances")
_MAX_VALUES = 2 ** 59


def _frame_shape(kind, K, L, N, P):
    if kind == "sequence":
        return L, N
    if kind == "endmembers":
        return L, P
    return P, N


def _write_hsts(path, stack, kind, K, L, N, P=None):
    lines = [f"magic={MAGIC}", f"kind={kind}", f"K={K}", f"L={L}", f"N={N}"]
    if P is not None:
        lines.append(f"P={P}")
    lines += [f"dtype={DTYPE}", f"layout={LAYOUT}", "", ""]
    payload = np.ascontiguousarray(np.asarray(stack, dtype="<f8").transpose(0, 2, 1))
    with open(path, "wb") as fh:
        fh.write("\n".join(lines).encode("ascii"))
        fh.write(payload.tobytes())


def _read_hsts(path):
    data = Path(path).read_bytes()
    end = data.find(b"\n\n")
    if end < 0:
        raise FormatError("header is not terminated by an empty line", len(data))
    header = {}
    offset = 0
    for i, raw in enumerate(data[:end].split(b"\n")):
        try:
            line = raw.decode("ascii")
        except UnicodeDecodeError:
            raise FormatError("header is not ASCII text", offset) from None
        key, sep, value = line.partition("=")
        if i == 0 and (key, value) != ("magic", MAGIC):
            raise FormatError(f"bad magic {line!r}, expected 'magic={MAGIC}'", 0)
        if not sep:
            raise FormatError(f"malformed header line {line!r}", offset)
        header[key] = (value, offset)
        offset += len(raw) + 1
    if not header:
        raise FormatError("empty header", 0)
    for key, expected in (("dtype", DTYPE), ("layout", LAYOUT)):
        value, off = header.get(key, (None, end))
        if value != expected:
            raise FormatError(f"{key} must be {expected!r}, got {value!r}", off)
    kind, kind_off = header.get("kind", ("sequence", end))
    if kind not in _KINDS:
        raise FormatError(f"unknown kind {kind!r}", kind_off)
    dims = {}
    for key in ("K", "L", "N", "P"):
        if key not in header:
            if key == "P" and kind == "sequence":
                continue
            raise FormatError(f"missing dimension {key}", end)
        value, off = header[key]
        if not value.isdigit() or int(value) < 1:
            raise FormatError(f"dimension {key} must be a positive integer, got {value!r}", off)
        dims[key] = int(value)
    K, L, N, P = dims["K"], dims["L"], dims["N"], dims.get("P")
    rows, cols = _frame_shape(kind, K, L, N, P)
    count = K * rows * cols
    if count > _MAX_VALUES:
        raise FormatError(f"dimensions describe {count} values, beyond the supported size",
                          header["K"][1])
    start = end + 2
    payload = data[start:]
    if len(payload) < 8 * count:
        raise FormatError(f"truncated payload: {len(payload)} of {8 * count} bytes",
                          len(data))
    if len(payload) > 8 * count:
        raise FormatError("trailing bytes after payload", start + 8 * count)
    values = np.frombuffer(payload, dtype="<f8").reshape(K, cols, rows)
    stack = np.ascontiguousarray(values.transpose(0, 2, 1), dtype=np.float64)
    return kind, dims, stack


def write_sequence(path, X):
    """Write observed frames ``(K, L, N)`` as an HSTS1 sequence file."""
    frames = X.frames if isinstance(X, FrameSequence) else np.asarray(X, dtype=np.float64)
    if frames.ndim != 3:
        raise DimensionError("a sequence must be a (K, L, N) array")
    K, L, N = frames.shape
    _write_hsts(path, frames, "sequence", K, L, N)


def read_sequence(path):
    """Read an HSTS1 sequence file into a :class:`FrameSequence`."""
    kind, _, stack = _read_hsts(path)
    if kind != "sequence":
        raise FormatError(f"expected a sequence file, found kind={kind}", 0)
    return FrameSequence(stack)


def write_endmembers(path, S, N):
    """Write an endmember trajectory ``(K, L, P)``; ``N`` is recorded in the header."""
    S = np.asarray(S, dtype=np.float64)
    K, L, P = S.shape
    _write_hsts(path, S, "endmembers", K, L, N, P)


def write_abundances(path, A, L):
    """Write an abundance trajectory ``(K, P, N)``; ``L`` is recorded in the header."""
    A = np.asarray(A, dtype=np.float64)
    K, P, N = A.shape
    _write_hsts(path, A, "abundances", K, L, N, P)


def read_trajectory(path, kind=None):
    """Read an HSTS1 trajectory file.

    Returns
    -------
    (str, dict, ndarray)
        ``kind``, the header dimensions and the stacked frames.
    """
    found, dims, stack = _read_hsts(path)
    if kind is not None and found != kind:
        raise FormatError(f"expected kind={kind}, found kind={found}", 0)
    return found, dims, stack


def write_csv(path, matrix):
    """Write a 2-D array as comma separated ``%.17g`` values, one row per line."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_csv(path):
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"cannot parse CSV {os.fspath(path)!r}: {exc}", 0) from None


def abundance_map_bytes(a, width, height):
    """8-bit gray levels of one abundance map, min-max scaled, row-major.

    Constant maps give all zeros; rounding is half away from zero.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size != width * height:
        raise DimensionError(f"map of {a.size} pixels does not fit {width}x{height}")
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.zeros(a.size, dtype=np.uint8)
    return np.floor(255.0 * (a - lo) / (hi - lo) + 0.5).astype(np.uint8)


def export_abundance_pgm(A_k, width, height, path_prefix):
    """Write one binary PGM (P5) image per source of a ``P x N`` abundance map.

    Returns the list of written paths, ``<prefix><p>.pgm`` with one-based ``p``.
    """
    A_k = np.asarray(A_k, dtype=np.float64)
    if A_k.ndim != 2 or A_k.shape[1] != width * height:
        raise DimensionError(f"abundances of shape {A_k.shape} do not fit {width}x{height}")
    paths = []
    for p, row in enumerate(A_k, start=1):
        path = f"{path_prefix}{p}.pgm"
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            fh.write(abundance_map_bytes(row, width, height).tobytes())
        paths.append(path)
    return paths


def read_pgm(path):
    """Read a binary PGM written by :func:`export_abundance_pgm` as a ``(height, width)`` array."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise FormatError("not a binary PGM file", 0)
    width, height = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8)
    if pixels.size != width * height:
        raise FormatError("PGM pixel data has the wrong length", len(data))
    return pixels.reshape(height, width)


def write_result_dir(directory, S, A, psi, N=None, L=None):
    """Write ``S.hsts``, ``A.hsts`` and ``psi.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    S = np.asarray(S)
    A = np.asarray(A)
    write_endmembers(directory / "S.hsts", S, A.shape[2] if N is None else N)
    write_abundances(directory / "A.hsts", A, S.shape[1] if L is None else L)
    write_csv(directory / "psi.csv", psi)


def read_result_dir(directory):
    """Read ``(S, A, psi)`` back from a directory written by :func:`write_result_dir`."""
    directory = Path(directory)
    _, _, S = read_trajectory(directory / "S.hsts", "endmembers")
    _, _, A = read_trajectory(directory / "A.hsts", "abundances")
    psi = read_csv(directory / "psi.csv")
    return S, A, psi


def write_truth_dir(directory, truth):
    """Ground-truth layout: ``S.hsts``, ``A.hsts``, ``psi.csv``, ``s0.csv``."""
    write_result_dir(directory, truth.S, truth.A, truth.psi)
    write_csv(Path(directory) / "s0.csv", truth.S0)


def read_truth_dir(directory):
    S, A, psi = read_result_dir(directory)
    S0 = read_csv(Path(directory) / "s0.csv")
    return GroundTruth(S=S, A=A, psi=psi, S0=S0)


def _jsonable(obj):
    # NaN and infinities are not valid JSON; they are written as null
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
