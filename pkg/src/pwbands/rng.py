"""Counter-based random streams addressed by integer tuples."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def rng_stream(seed, *address: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *address)``.

    ``seed`` may itself be a tuple, in which case ``address`` is appended.
    The same address always yields the same stream, whatever order the
    streams are created in, so parallel and serial runs agree.
    """
    if isinstance(seed, Sequence) and not isinstance(seed, (str, bytes)):
        key = [int(s) for s in seed]
    else:
        key = [int(seed)]
    key.extend(int(a) for a in address)
    if any(k < 0 for k in key):
        raise ValueError("seeds and stream addresses must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
