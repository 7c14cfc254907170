"""Mask/random/keep corruption of masked positions."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from . import rng as _rng
from .core import ConfigurationError, DomainError, Mask, TokenSequence


@dataclass(frozen=True)
class CorruptionPolicy:
    p_mask: float = 0.8
    p_random: float = 0.1
    p_keep: float = 0.1
    mask_token: str = "[MASK]"
    replacement_vocab: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "replacement_vocab", tuple(self.replacement_vocab))
        probs = (self.p_mask, self.p_random, self.p_keep)
        if any(not 0.0 <= q <= 1.0 for q in probs):
            raise ConfigurationError(f"corruption probabilities must lie in [0, 1], got {probs}")
        if not math.isclose(sum(probs), 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ConfigurationError(f"corruption probabilities must sum to 1, got {sum(probs)!r}")
        if self.p_random > 0 and not self.replacement_vocab:
            raise ConfigurationError("p_random > 0 needs a non-empty replacement vocabulary")
        if not self.mask_token:
            raise ConfigurationError("mask token must be non-empty")


def load_replacement_vocab(path: str | os.PathLike) -> tuple[str, ...]:
    """One token per line, UTF-8; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip())


@dataclass(frozen=True)
class CorruptedRecord:
    id: str
    corrupted: list[str]
    labels: list[str | None]
    mask: Mask


def corrupt(seq: TokenSequence, mask: Mask, policy: CorruptionPolicy, rng=None) -> CorruptedRecord:
    """Corrupt the masked positions of ``seq``.

    Each masked token becomes ``policy.mask_token``, a uniform draw from the
    replacement vocabulary, or stays unchanged; its label is the original
    token either way. Unmasked positions are copied with a ``None`` label.
    Without ``rng`` the record's corruption stream for seed 0 is used.
    """
    if len(mask) != seq.n:
        raise DomainError(f"record {seq.id!r}: mask length {len(mask)} != {seq.n} tokens")
    if rng is None:
        rng = _rng.stream_for(0, seq.id, _rng.CORRUPTION)
    corrupted, labels = rng.corrupt(
        seq.texts, mask.bits, policy.p_mask, policy.p_random,
        policy.replacement_vocab, policy.mask_token,
    )
    return CorruptedRecord(seq.id, corrupted, labels, mask)
