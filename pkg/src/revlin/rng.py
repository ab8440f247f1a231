"""Counter-based uniform random numbers with explicit substream derivation.

Every random quantity in this package is a deterministic function of a
64-bit master seed, a substream index (one substream per Monte Carlo
replicate), and a draw counter. The generator is SplitMix64 used in
counter mode:

    mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27; z *= 0x94D049BB133111EB
               z ^= z >> 31                       (all uint64, wrapping)

    substream key:   key(seed, r) = mix64(mix64(seed) ^ (GOLDEN * (r + 1)))
    i-th raw word:   word(key, i) = mix64(key + GOLDEN * (i + 1))
    i-th uniform:    u = ((word >> 11) + 1) * 2**-53        in (0, 1]

with GOLDEN = 0x9E3779B97F4A7C15 (2**64 / golden ratio). Uniforms live on
the open-below interval so logarithms are always finite. Where a sampler
needs an auxiliary fair bit (a random sign), it uses bit 0 of the same raw
word that supplied the magnitude; the low bits are not part of the 53-bit
mantissa. Standard normals come from Box-Muller on two consecutive
uniforms: z = sqrt(-2 ln u1) * cos(2 pi u2) (the sine twin is discarded,
trading half the entropy for a fixed two-words-per-normal layout).

This module holds the vectorized numpy implementation used by reference
samplers and tests; kernels.py carries scalar numba twins that must produce
bit-identical streams (asserted in the test suite).
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0**-53


def mix64(z):
    """SplitMix64 finalizer. Accepts uint64 scalars or arrays."""
    z = np.uint64(z) if np.isscalar(z) else z.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def substream_key(seed: int, replicate: int) -> int:
    """Derive the replicate's substream key from the master seed."""
    if replicate < 0:
        raise ValueError("replicate index must be nonnegative")
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    r = np.uint64(replicate)
    with np.errstate(over="ignore"):
        return int(mix64(mix64(s) ^ (GOLDEN * (r + np.uint64(1)))))


def raw_words(key: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit words at counters start .. start+count-1 of a substream."""
    ctr = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(key) + GOLDEN * (ctr + np.uint64(1)))


def word_to_unit(w) -> np.ndarray:
    """Map raw words to uniforms in (0, 1]."""
    return (np.asarray(w >> np.uint64(11), dtype=np.float64) + 1.0) * _U53


def uniforms(key: int, start: int, count: int) -> np.ndarray:
    """Uniforms in (0, 1] at counters start .. start+count-1."""
    return word_to_unit(raw_words(key, start, count))


def box_muller(key: int, start: int, count: int) -> np.ndarray:
    """Standard normals; normal i consumes counters start+2i, start+2i+1."""
    w = raw_words(key, start, 2 * count)
    u = word_to_unit(w)
    return np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(2.0 * np.pi * u[1::2])
