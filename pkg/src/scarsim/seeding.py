"""Platform-independent per-sample seed derivation.

    seed = mix(mix(mix(master ^ tag_hash) ^ r_index) ^ sample_index)

where ``mix`` is the SplitMix64 finalizer (all arithmetic modulo 2**64) and
``tag_hash`` is the first 8 bytes (big-endian) of SHA-256 of the UTF-8 tag.
The derivation depends only on these integers, never on scheduling.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "big")


def derive_seed(master_seed: int, tag: str, r_index: int, sample_index: int) -> int:
    h = splitmix64((master_seed & MASK64) ^ tag_hash(tag))
    h = splitmix64(h ^ (r_index & MASK64))
    return splitmix64(h ^ (sample_index & MASK64))
