"""Seeded random generators shared by every randomized operation.

All randomness goes through numpy's PCG64 bit generator.  A bare integer seed
``s`` always produces ``numpy.random.Generator(PCG64(s))``; derived streams
(per-tree, per-epoch) are keyed with ``SeedSequence([seed, *keys])`` so they do
not depend on call order.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed, *keys):
    seed = int(seed) & SEED_MASK
    if not keys:
        return np.random.Generator(np.random.PCG64(seed))
    entropy = [seed] + [int(k) & SEED_MASK for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(master_seed, index):
    """Mix ``master_seed`` and ``index`` into an independent 64-bit seed."""
    seq = np.random.SeedSequence([int(master_seed) & SEED_MASK, int(index) & SEED_MASK])
    return int(seq.generate_state(1, dtype=np.uint64)[0])
