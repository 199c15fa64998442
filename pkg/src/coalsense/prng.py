"""Portable seeded randomness.

All stochastic draws in the simulator go through named streams derived from a
single integer seed.  A stream is an independent `random.Random` whose state
is seeded from SHA-256(seed ":" label), and every draw is built from
`Random.random()` alone — the one primitive whose bit stream CPython
guarantees stable across versions and platforms.  Deriving streams by label
means adding draws of one category (say, more fading values) never perturbs
another category (say, positions).
"""

import hashlib
import math
import random

__all__ = ["stream", "uniform", "rayleigh", "k_subset", "shuffled"]


def stream(seed: int, label: str) -> random.Random:
    """Independent deterministic stream for one draw category."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def uniform(rng: random.Random, lo: float, hi: float) -> float:
    return lo + (hi - lo) * rng.random()


def rayleigh(rng: random.Random, mean_square: float = 1.0) -> float:
    """Rayleigh draw via inverse CDF, scaled so E[x^2] = mean_square."""
    # scale sigma = sqrt(mean_square / 2); rng.random() < 1 so the log is finite
    u = rng.random()
    return math.sqrt(mean_square / 2.0) * math.sqrt(-2.0 * math.log(1.0 - u))


def _randbelow(rng: random.Random, n: int) -> int:
    # int(random()*n) is biased by at most 2^-53 per draw; acceptable here and
    # fully portable, unlike Random._randbelow.
    v = int(rng.random() * n)
    return n - 1 if v >= n else v


def k_subset(rng: random.Random, n: int, k: int) -> list[int]:
    """Uniform random k-subset of range(n), returned sorted ascending."""
    pool = list(range(n))
    for i in range(k):
        j = i + _randbelow(rng, n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:k])


def shuffled(items, rng: random.Random) -> list:
    """Fisher-Yates shuffle driven only by rng.random()."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = _randbelow(rng, i + 1)
        out[i], out[j] = out[j], out[i]
    return out
