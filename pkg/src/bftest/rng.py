"""Reproducible random substreams for the simulation harness.

Each replication draws from a counter-based generator (Philox) keyed
injectively by (seed, k, n, replication), so results are identical whether
replications run serially or split across any number of workers, in any
order. Negative k values are mapped through their 64-bit two's complement
to keep the key material nonnegative.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _enc(value: int) -> int:
    return int(value) & _MASK64


def substream(seed: int, k: int, n: int, rep: int) -> np.random.Generator:
    """Generator for replication ``rep`` of cell (k, n)."""
    ss = np.random.SeedSequence(entropy=(_enc(seed), _enc(k), _enc(n), _enc(rep)))
    return np.random.Generator(np.random.Philox(ss))


def cell_stream(seed: int, k: int, n: int) -> np.random.Generator:
    """Cell-level generator (shared covariate draws under a fixed design)."""
    ss = np.random.SeedSequence(entropy=(_enc(seed), _enc(k), _enc(n)))
    return np.random.Generator(np.random.Philox(ss))
