"""Small shared helpers: deterministic seed derivation and RNG plumbing."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def mix_seed(master: int, index: int) -> int:
    """Derive a per-trial seed from a master seed and a trial index.

    SplitMix64 finalizer over master + index * golden gamma. The same
    (master, index) pair yields the same seed on every platform, which is what
    makes trial-level parallelism reproducible.
    """
    z = (master + index * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rand_int_bits(rng: np.random.Generator, bits: int) -> int:
    """Uniform integer in [0, 2**bits) drawn from a numpy generator."""
    nbytes = (bits + 7) // 8
    value = int.from_bytes(rng.bytes(nbytes), "big")
    return value >> (nbytes * 8 - bits)
