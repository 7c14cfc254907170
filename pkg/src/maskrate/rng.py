"""Deterministic per-record random streams.

The compiled backend is used when importable; set ``MASKRATE_PURE_PYTHON=1``
to force the pure-Python one. Both produce identical draws.

Seeding: a record's stream seed is

    h    = little-endian u64 of blake2b-64(record_id as UTF-8)
    seed = mix(mix(global_seed) ^ h ^ (purpose * 0x9E3779B97F4A7C15 mod 2**64))

where ``mix`` is the SplitMix64 output function applied to ``x + 0x9E3779B97F4A7C15``.
The generator itself is SplitMix64 (see ``_purepy.RandomStream``).
"""

from __future__ import annotations

import hashlib
import os

from . import _purepy

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

MASKING = 0
CORRUPTION = 1

if os.environ.get("MASKRATE_PURE_PYTHON"):
    _backend = _purepy
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend
        BACKEND = "cython"
    except ImportError:
        _backend = _purepy
        BACKEND = "python"

RandomStream = _backend.RandomStream
expand_groups = _backend.expand_groups
MASK_CODE = _purepy.MASK_CODE
KEEP_CODE = _purepy.KEEP_CODE


def mix64(x: int) -> int:
    z = (x + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def record_seed(global_seed: int, record_id: str, purpose: int = MASKING) -> int:
    h = int.from_bytes(
        hashlib.blake2b(record_id.encode("utf-8"), digest_size=8).digest(), "little"
    )
    return mix64(mix64(global_seed & _M64) ^ h ^ ((purpose * _GOLDEN) & _M64))


def stream_for(global_seed: int, record_id: str, purpose: int = MASKING):
    """Fresh stream for one record; the same arguments always give the same draws."""
    return RandomStream(record_seed(global_seed, record_id, purpose))
