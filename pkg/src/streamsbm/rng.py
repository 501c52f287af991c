"""Seed splitting and counter-based uniforms.

Every component draws from its own labeled child of one master seed, so the
graph, the stream order and the algorithm randomness can be reproduced
independently of each other.
"""
import numpy as np

GRAPH = 0
PERMUTATION = 1
ALGORITHM = 2

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def child_seed(seed, *labels):
    """Integer seed for the sub-stream ``labels`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in labels))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def generator(seed, *labels):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed),
                                                        spawn_key=tuple(int(x) for x in labels)))


def _splitmix(x):
    with np.errstate(over="ignore"):
        x = (x + np.uint64(0x9E3779B97F4A7C15)) & _M64
        z = x
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _M64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _M64
        return z ^ (z >> np.uint64(31))


def hash_uniform(seed, *keys):
    """Uniform [0, 1) values that depend only on ``seed`` and the key arrays.

    Keys broadcast against each other; the result has their broadcast shape.
    Used where a draw must not depend on iteration order (per-node ties,
    per-entry subsampling).
    """
    h = _splitmix(np.asarray(int(seed) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
    for k in keys:
        k = np.asarray(k).astype(np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = _splitmix(h ^ _splitmix(k))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
