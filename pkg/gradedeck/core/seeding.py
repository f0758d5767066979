from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(*keys: int) -> int:
    """
    Mix integer keys (master seed first, then task coordinates) into a 64-bit seed.

    Results depend only on the keys, never on call order or worker identity.
    """
    entropy = [int(k) & _MASK64 for k in keys]
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def rng_for(*keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*keys))
