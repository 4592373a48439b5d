import numpy as np


def rng_for(seed, *key):
    """Counter-based generator for the stream identified by (seed, *key).

    Streams for distinct keys are independent, so per-cell results do not
    depend on evaluation order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
