"""Seeded random streams and the fixed sampling transforms used everywhere.

All randomness in the package goes through a :class:`numpy.random.Generator`
backed by PCG64. Streams for independent tasks are derived with
:class:`numpy.random.SeedSequence`, whose ``spawn_key`` hashes a root seed and
an integer key path into a fresh, statistically independent state. A Monte
Carlo run therefore gets the same numbers no matter which worker executes it.

Continuous draws never use the generator's own normal sampler. Normals are
produced by the inverse CDF (``scipy.special.ndtri``) applied to open-interval
uniforms built from 53 random bits, so the mapping from the bit stream to
values is fixed and documented.
"""

from enum import IntEnum

import numpy as np
from scipy.special import ndtri

_TWO53 = float(2**53)


class Phase(IntEnum):
    """Tags separating the random phases of one Monte Carlo run.

    New phases must be appended so that earlier phases keep their streams.
    """

    DGP = 0
    FIT = 1
    DEFAULT_SAMPLE = 2
    DEBIAS_CALIBRATION = 3
    DEBIAS_SAMPLE = 4
    NUISANCE = 5
    RESIDUAL_CHECK = 6


def make_rng(seed, *key):
    """Return a PCG64 generator for ``seed`` and a non-negative integer key path."""
    key = tuple(int(k) for k in key)
    if any(k < 0 for k in key):
        raise ValueError(f"stream key must be non-negative, got {key}")
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng):
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(0 if rng is None else rng)


def child(rng):
    """Derive an independent generator from ``rng`` without disturbing its draws much.

    Consumes one 64-bit draw from ``rng``.
    """
    return make_rng(int(rng.integers(0, 2**63)))


def uniform(rng, size):
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    bits = rng.integers(0, 2**53, size=size, dtype=np.uint64)
    return (bits.astype(np.float64) + 0.5) / _TWO53


def normal(rng, size, loc=0.0, scale=1.0):
    """Normal draws by inverse-CDF transform of :func:`uniform`."""
    z = ndtri(uniform(rng, size))
    return loc + scale * z


def bernoulli(rng, p, size=None):
    """0/1 draws with success probability ``p`` (scalar or array)."""
    p = np.asarray(p, dtype=np.float64)
    if size is None:
        size = p.shape
    return (uniform(rng, size) < p).astype(np.int64)


def categorical(rng, probs):
    """Draw one category index per row of an ``(n, k)`` probability matrix.

    Uses the inverse CDF: the first category whose cumulative probability
    reaches the uniform draw.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = probs[None, :]
    n, k = probs.shape
    cum = np.cumsum(probs, axis=1)
    u = uniform(rng, n) * cum[:, -1]
    idx = (u[:, None] > cum).sum(axis=1)
    return np.minimum(idx, k - 1).astype(np.int64)


def weighted_index(rng, cum_weights, size):
    """Indices drawn proportionally to weights given as a cumulative array."""
    u = uniform(rng, size) * cum_weights[-1]
    idx = np.searchsorted(cum_weights, u, side="right")
    return np.minimum(idx, len(cum_weights) - 1)
