import numpy as np

# Stream tags keep the profile and noise draws of one realisation independent.
PROFILE_STREAM = 0
NOISE_STREAM = 1
MIXTURE_STREAM = 2


def generator(seed, *key):
    """Return a PCG64 generator keyed by ``seed`` (int or tuple of ints) and ``key``."""
    if isinstance(seed, (tuple, list)):
        entropy = [int(s) for s in seed]
    else:
        entropy = [int(seed)]
    entropy.extend(int(k) for k in key)
    if any(e < 0 for e in entropy):
        raise ValueError("seed components must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
