"""Named, order-independent random substreams derived from one integer seed."""

import numpy as np

_MASK64 = (1 << 64) - 1

# Fixed substream identifiers for one run.
SERIES = 0
RESERVOIR = 1
SAMPLING = 2


def substream(seed, *key):
    """Return a Generator keyed by ``(seed, *key)``.

    The same seed and key always give the same stream, regardless of which
    other streams were created before.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def derive_seed(seed, *key):
    """Derive a 64-bit integer seed for a named child stream."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
