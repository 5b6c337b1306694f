"""Point sets of known dimension for estimator calibration."""

import numpy as np


def circle(n, seed=0):
    g = np.random.default_rng(seed)
    t = g.uniform(0, 2 * np.pi, n)
    return np.c_[np.cos(t), np.sin(t)]


def square(n, seed=0):
    return np.random.default_rng(seed).uniform(size=(n, 2))


def cantor(n, seed=0, depth=40):
    """Middle-thirds Cantor set by the chaos game x -> x/3 or x/3 + 2/3.

    ``depth`` iterations from 0 put each point within 3^-depth of the set.
    """
    g = np.random.default_rng(seed)
    x = np.zeros(n)
    for _ in range(depth):
        x = x / 3 + (2.0 / 3.0) * g.integers(0, 2, n)
    return x[:, None]


CANTOR_DIM = np.log(2) / np.log(3)
