"""splitmix64 stream, scalar and vectorised.

Every random choice in the package (layout shuffles, naive-half picks, TLB
trace page IDs) is drawn from this generator so results are bit-identical
across platforms and numpy versions.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix(z):
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 generator.

    >>> hex(SplitMix64(0).next())
    '0xe220a8397b1dcdaf'
    """

    def __init__(self, seed=0):
        self.state = int(seed) & MASK64

    def next(self):
        self.state = (self.state + GAMMA) & MASK64
        return _mix(self.state)

    def below(self, n):
        """Uniform integer in [0, n) via Lemire's multiply-shift."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next() * n) >> 64

    def bit(self):
        return self.next() >> 63

    def shuffle(self, items):
        """Fisher-Yates shuffle; returns a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def splitmix64_array(seed, n, start=0):
    """Outputs ``start+1 .. start+n`` of the stream seeded with ``seed`` as uint64."""
    k = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(int(seed) & MASK64) + k * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))
