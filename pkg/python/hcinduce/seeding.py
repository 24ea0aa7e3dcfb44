"""
Seedable, platform-stable random streams.

All randomness in the package comes from numpy's PCG64 bit generator wrapped in
a ``numpy.random.Generator``. Ensemble members draw from child streams spawned
by ``numpy.random.SeedSequence`` so that results do not depend on the order or
the number of workers that fit them.
"""

import numpy as np


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed, n):
    """Returns n independent child seed sequences of ``seed``."""
    return np.random.SeedSequence(seed).spawn(n)


def permutation(n, seed):
    return make_rng(seed).permutation(n)
