"""Reproducible per-orbit random streams.

Each orbit gets its own Philox (counter-based, 64-bit words) generator keyed
by ``splitmix64(splitmix64(seed ^ tag) ^ index)``, so results depend only on
the seed and the orbit index, never on how orbits are batched or scheduled.
The seed is hashed before the index is mixed in: a bare ``seed ^ index``
maps nearby seeds onto permutations of the same key set.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

# domain tags keep unrelated streams (base point, extensions, ...) apart
TAG_ORBIT = 0
TAG_BASE = 0x9E3779B97F4A7C15
TAG_EXTEND = 0xD1B54A32D192ED03
TAG_VERIFY = 0xA0761D6478BD642F


def splitmix64(x):
    x = (int(x) + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def stream_key(seed, index, tag=TAG_ORBIT):
    base = splitmix64((int(seed) & _MASK) ^ tag)
    return splitmix64(base ^ (int(index) & _MASK))


def generator(seed, index=0, tag=TAG_ORBIT):
    return np.random.Generator(np.random.Philox(key=stream_key(seed, index, tag)))


def orbit_uniforms(seed, indices, shape, tag=TAG_ORBIT):
    """Uniforms of ``shape`` for each orbit index, stacked along axis 0."""
    out = np.empty((len(indices),) + tuple(shape))
    for row, i in enumerate(indices):
        out[row] = generator(seed, i, tag).random(shape)
    return out
