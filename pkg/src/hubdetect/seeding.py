"""Deterministic, platform-independent seed derivation.

Seeds are hashed from their parts with SHA-256 so that adding detectors or
reordering trials never perturbs data generation, and parallel workers see
exactly the seeds a serial run would.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(*parts) -> int:
    """Map ``(base_seed, sweep_value, trial_index, ...)`` to a 63-bit seed.

    Parts are canonicalized through ``repr`` (stable for int, float, and str
    across runs and platforms, unlike Python's salted ``hash``).
    """
    token = "|".join(repr(p) for p in parts)
    digest = hashlib.sha256(token.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
