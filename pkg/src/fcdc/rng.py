"""Counter-based pseudo-random numbers.

A splittable, stateless generator: draw i of a substream keyed by `key` is a
pure function of (key, i), so decision draws and stream samples are
reproducible bit for bit on any platform and independent of each other by
construction.  The mixer is the splitmix64 finalizer; uniforms take the top
53 bits.  The compiled kernel re-implements these formulas in C; the two are
checked for exact equality in the test suite.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# substream tags (arbitrary fixed constants, one per purpose)
TAG_DECISION = 0xD1CE5EED00000001
TAG_STREAM = 0x57AEA11700000002

_TWO_NEG53 = 2.0 ** -53
TWO_PI = 2.0 * 3.141592653589793


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, tag: int) -> int:
    """Substream key from a user seed and a purpose tag."""
    return mix64((seed ^ tag) & _MASK)


def uniform_at(key: int, counter: int) -> float:
    """Uniform draw in [0, 1) at position `counter` of substream `key`."""
    raw = mix64((key + ((counter + 1) * _GAMMA)) & _MASK)
    return (raw >> 11) * _TWO_NEG53


def normal_at(key: int, index: int) -> float:
    """Standard normal draw at position `index` (Box-Muller, cosine branch)."""
    u1 = 1.0 - uniform_at(key, 2 * index)
    u2 = uniform_at(key, 2 * index + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)
