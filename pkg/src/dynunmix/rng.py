"""Counter-based random streams with a fixed, documented sample mapping.

Raw 64-bit words come from the Philox-4x64-10 counter-based generator keyed
by ``(seed, stream)``. The conversion of raw words to floats is done here
rather than by numpy's distribution methods so that the mapping is pinned:

* uniform: ``((word >> 11) + 0.5) * 2**-53``, which lies in the open
  interval (0, 1);
* Gaussian: Box-Muller on consecutive uniform pairs ``(u1, u2)`` producing
  ``sqrt(-2 ln u1) * cos(2 pi u2)`` (one normal per pair);
* Laplace: inverse CDF, ``-b * sign(u - 1/2) * ln(1 - 2 |u - 1/2|)``;
* Bernoulli: ``u < p``.
"""

import numpy as np

_TWO_POW_M53 = 2.0 ** -53

# Stream identifiers used by the synthetic generator.
STREAM_SPECTRA = 1
STREAM_CHANGE_MASK = 2
STREAM_CHANGE_VALUE = 3
STREAM_DISTORTION = 4
STREAM_NOISE = 5


class CounterStream:
    """Deterministic random stream for one ``(seed, stream)`` pair."""

    def __init__(self, seed, stream=0):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        key = np.array([seed & 0xFFFFFFFFFFFFFFFF, int(stream)], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def raw(self, n):
        return np.asarray(self._bitgen.random_raw(int(n)), dtype=np.uint64)

    def uniform(self, shape):
        n = int(np.prod(shape, dtype=np.int64))
        words = self.raw(n)
        u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_M53
        return u.reshape(shape)

    def normal(self, shape, scale=1.0):
        n = int(np.prod(shape, dtype=np.int64))
        u = self.uniform((n, 2))
        z = np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])
        return (scale * z).reshape(shape)

    def laplace(self, shape, scale=1.0):
        c = self.uniform(shape) - 0.5
        return -scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))

    def bernoulli(self, shape, p):
        return self.uniform(shape) < p
