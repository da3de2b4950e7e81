"""Deterministic random-stream management.

All randomness flows through numpy's counter-based Philox generator so that
every artefact (instances, trajectories, sampling masks, sweep tasks) is
reproducible bit-for-bit from a single 64-bit master seed.  Sub-streams are
derived with SeedSequence spawn keys, never by arithmetic on seed values:
a ``(domain, *indices)`` tuple yields a stream that stays independent of
every other stream even when loop bounds change between runs.

Domain registry (first spawn-key element):

====  =========================================================
0     instance generation (second element 0..3 = A, x, support, noise)
1     per-iteration trajectory seeds in alternating minimisation
2     per-repetition trajectory seeds in support-only runs
3     simulated-annealing chains
4     harness task seeds (sweep grid points, generated instance files)
5     k-space sampling masks
====  =========================================================
"""

import numpy as np

DOMAIN_INSTANCE = 0
DOMAIN_ALTMIN = 1
DOMAIN_SUPPORT = 2
DOMAIN_SA = 3
DOMAIN_HARNESS = 4
DOMAIN_MASK = 5

_SEED_MAX = 2**64


def check_seed(seed):
    """Validate and return a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed, *key):
    """Philox generator for the sub-stream ``(domain, *indices)`` under ``seed``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed, *key):
    """A derived 64-bit seed for labelling artefacts produced by a sub-stream."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
