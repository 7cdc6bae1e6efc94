"""Deterministic seed derivation for presentation shuffles.

sha256 of the seed plus string discriminators, truncated to 64 bits, so
permutations are stable across processes and interpreter versions (hash()
randomization would break session reproducibility).
"""

from __future__ import annotations

import hashlib


def derive_seed(seed: int, *parts: str) -> int:
    text = "|".join([str(seed), *parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
