"""Counter-based random substreams.

Every random quantity in the package is drawn from a stream addressed by
``(seed, domain, index)``.  The stream is a Philox-4x64 generator whose key
holds the seed and a hash of the domain tag, and whose counter starts at
``index << 128``.  Draw ``k`` therefore never depends on how many draws were
made before it, or on which worker made them.
"""

import hashlib

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_TWO53 = 2.0 ** -53


def _domain_word(domain):
    digest = hashlib.blake2b(domain.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Random substream keyed by ``(seed, domain, index)``.

    Gaussians are produced by applying the inverse normal CDF to uniforms
    built from the raw 64-bit Philox output, so the values depend only on
    the counter position.
    """

    def __init__(self, seed, index=0, domain="sample"):
        if index < 0:
            raise ValueError("index must be nonnegative")
        self.seed = int(seed) & _MASK64
        self.index = int(index)
        self.domain = domain
        key = self.seed | (_domain_word(domain) << 64)
        self._bitgen = np.random.Philox(key=key, counter=self.index << 128)

    def uniform(self, size=None):
        """Uniforms on the open interval (0, 1)."""
        n = 1 if size is None else int(np.prod(size))
        raw = self._bitgen.random_raw(n)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO53
        return u[0] if size is None else u.reshape(size)

    def normal(self, size=None):
        return ndtri(self.uniform(size))

    def complex_normal(self, size):
        """Standard complex Gaussians, E|z|^2 = 1."""
        g = self.normal((2,) + tuple(np.atleast_1d(size)))
        return (g[0] + 1j * g[1]) / np.sqrt(2.0)

    def integers(self, low, high, size=None):
        """Integers in ``[low, high)``."""
        u = self.uniform(size)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def rademacher(self, size):
        return np.where(self.uniform(size) < 0.5, -1.0, 1.0)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, index={self.index}, domain={self.domain!r})"


def stream(seed, index=0, domain="sample"):
    return RngStream(seed, index, domain)
