"""Deterministic random-stream derivation.

Every stochastic routine in the package draws from a named substream of one
master seed.  The derivation rule is:

    substream(master, *labels)
        -> Generator(PCG64(SeedSequence([master, h(label_1), h(label_2), ...])))

where ``h`` is an 8-byte blake2s digest of ``str(label)``.  Labels follow the
convention task -> module -> instance index, e.g.::

    substream(seed, "ensemble", member)        # i-th ensemble member
    substream(seed, "network", "er")           # Erdos-Renyi edge draws
    substream(seed, "doe", "acquire", n)       # n-th acquisition step

The rule is stable across processes and platforms, so any artifact is
reproducible from the master seed alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "as_generator", "label_hash"]


def label_hash(label) -> int:
    """Stable 64-bit hash of a stream label (never Python's salted hash)."""
    digest = hashlib.blake2s(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(master_seed: int, *labels) -> np.random.Generator:
    """Derive a named, independent generator from the master seed."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [label_hash(l) for l in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed or a ready Generator and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
