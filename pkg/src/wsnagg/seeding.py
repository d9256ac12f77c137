"""Named, independent random streams derived from one run seed.

Every consumer asks for ``stream(seed, LABEL, *ids)``; numpy's SeedSequence
hashes the whole entropy list, so streams for different labels, nodes or
rounds never overlap and do not depend on the order they are created in.
"""
import numpy as np

TOPOLOGY = 1
KEYGEN = 2
NODE_INIT = 3
MASTER = 4
SENSE = 5
EPHEMERAL = 6
SIGN = 7
FAULT = 8
AGENT_SIGN = 9
BENCH = 10
BENCH_NONCE = 11


def stream(seed: int, label: int, *ids: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, label, *ids])


def random_scalar(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [1, n-1]."""
    return int(rng.integers(1, n, dtype=np.int64))
