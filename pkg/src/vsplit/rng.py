"""Seeded random streams with deterministic replica splitting.

Every stochastic routine in this package takes an explicit RandomStream.
Replica k of an experiment with master seed s draws from stream(s, k)
(a SeedSequence child keyed by the replica index), so results are
bit-identical no matter how replicas are partitioned across workers.

The hot paths need cheap scalar draws, so the stream wraps a Mersenne
``random.Random`` for uniforms/exponentials/coins and keeps a lazily
created numpy PCG64 generator for the occasional large-mean Poisson or
huge binomial. Bin(m, 1/2) is drawn as the popcount of m random bits.
"""

from __future__ import annotations

import math
import random as _random

import numpy as np

_POISSON_SMALL_MEAN = 16.0


class RandomStream:
    """One independent stream of randomness, seeded from a SeedSequence."""

    __slots__ = ("_seq", "_rr", "_np")

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._seq = seed_seq
        state = seed_seq.generate_state(2, dtype=np.uint64)
        self._rr = _random.Random((int(state[0]) << 64) | int(state[1]))
        self._np = None  # created on first large draw

    @property
    def numpy(self) -> np.random.Generator:
        if self._np is None:
            self._np = np.random.Generator(np.random.PCG64(self._seq.spawn(1)[0]))
        return self._np

    def random(self) -> float:
        return self._rr.random()

    def uniform(self, a: float, b: float) -> float:
        return self._rr.uniform(a, b)

    def exp(self, rate: float = 1.0) -> float:
        return self._rr.expovariate(rate)

    def coin(self) -> int:
        """Fair coin, 0 or 1."""
        return self._rr.getrandbits(1)

    def getrandbits(self, k: int) -> int:
        """Uniform integer in [0, 2^k); k = 0 gives 0."""
        if k <= 0:
            return 0
        return self._rr.getrandbits(k)

    def randrange(self, n: int) -> int:
        return self._rr.randrange(n)

    def binomial_half(self, m: int) -> int:
        """Bin(m, 1/2), exact for any m (popcount of m random bits)."""
        if m <= 0:
            return 0
        return self._rr.getrandbits(m).bit_count()

    def poisson(self, mean: float) -> int:
        """Exact Poisson draw; Knuth product method below mean 16, numpy above."""
        if mean <= 0.0:
            return 0
        if mean <= _POISSON_SMALL_MEAN:
            limit = math.exp(-mean)
            k = 0
            p = self._rr.random()
            while p > limit:
                k += 1
                p *= self._rr.random()
            return k
        return int(self.numpy.poisson(mean))

    def geometric_size(self, p: float) -> int:
        """Geometric on {1,2,...} with success probability p (mean 1/p)."""
        if p >= 1.0:
            return 1
        if p <= 0.0:
            raise ValueError("p must be in (0, 1]")
        u = 1.0 - self._rr.random()  # in (0, 1]
        if u >= 1.0:
            return 1
        return 1 + int(math.log(u) / math.log1p(-p))


def stream(master_seed: int, *key: int) -> RandomStream:
    """Independent stream for (master_seed, key); key is e.g. (phase, replica)."""
    return RandomStream(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))
