"""Portable seeded random source: SplitMix64 with Box-Muller Gaussians.

Everything downstream (signal synthesis, ensemble seeding) draws from
RandomStream, so a fixed seed gives a bit-identical simulation on any
platform with IEEE-754 doubles.
"""

import math

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / (1 << 53)


class RandomStream:
    """Single-owner deterministic random stream.

    Uniforms lie strictly in (0, 1] so the Box-Muller logarithm is always
    finite. The second Box-Muller deviate is cached and consumed on the next
    Gaussian draw; the cache is part of the reproducibility contract.
    """

    __slots__ = ("state", "cached_gaussian")

    def __init__(self, seed):
        self.state = seed & _MASK64
        self.cached_gaussian = None

    def next_u64(self):
        """Advance the SplitMix64 recurrence and return the finalized value."""
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self):
        """Uniform double in (0, 1]: ((u64 >> 11) + 1) / 2^53."""
        return ((self.next_u64() >> 11) + 1) * _INV_2_53

    def next_gaussian(self, mean=0.0, sd=1.0):
        """Gaussian deviate via the Box-Muller transform."""
        if sd < 0:
            raise ConfigError(f"negative standard deviation: {sd}")
        z = self.cached_gaussian
        if z is not None:
            self.cached_gaussian = None
        else:
            u1 = self.next_uniform()
            u2 = self.next_uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(_TWO_PI * u2)
            self.cached_gaussian = r * math.sin(_TWO_PI * u2)
        return mean + sd * z


def derive_seed(base, index):
    """Derive a child seed from (base, index) by SplitMix64 mixing.

    The child seed is the (index+1)-th SplitMix64 output of a stream seeded
    with ``base``. Used for per-run, per-agent ensemble streams.
    """
    if index < 0:
        raise ConfigError(f"negative stream index: {index}")
    stream = RandomStream(base)
    out = stream.next_u64()
    for _ in range(index):
        out = stream.next_u64()
    return out
