"""The five masking strategies and the config-driven dispatcher.

Every strategy is a pure function of (sequence, rate, random stream[, extras]).
"""

from __future__ import annotations

import math
from array import array
from collections import Counter
from dataclasses import dataclass, field

from . import rng as _rng
from .core import (
    ConfigurationError,
    Mask,
    MaskingConfig,
    POSCategory,
    Strategy,
    TokenSequence,
    word_groups,
)
from .pmi import PmiVocabulary, segment_by_ngrams


@dataclass(frozen=True)
class SpanParams:
    """Span lengths follow Geom(geometric_success) on {1, 2, ...} conditioned on <= max_len."""

    geometric_success: float = 0.2
    max_len: int = 10

    def __post_init__(self) -> None:
        if not 0.0 < self.geometric_success < 1.0:
            raise ConfigurationError("geometric_success must lie strictly between 0 and 1")
        if self.max_len < 1:
            raise ConfigurationError("max_len must be >= 1")
        object.__setattr__(self, "_cdf", _truncated_geometric_cdf(self.geometric_success, self.max_len))

    @property
    def cdf(self) -> array:
        return self._cdf  # type: ignore[attr-defined]

    def pmf(self) -> list[float]:
        q = self.geometric_success
        w = [(1 - q) ** (k - 1) * q for k in range(1, self.max_len + 1)]
        z = sum(w)
        return [x / z for x in w]

    def mean_length(self) -> float:
        return sum(k * p for k, p in enumerate(self.pmf(), start=1))


def _truncated_geometric_cdf(q: float, max_len: int) -> array:
    w = [(1 - q) ** (k - 1) * q for k in range(1, max_len + 1)]
    z = sum(w)
    cdf = array("d")
    acc = 0.0
    for x in w:
        acc += x
        cdf.append(acc / z)
    cdf[-1] = 1.0
    return cdf


@dataclass
class MaskTrace:
    """Optional collector of per-strategy diagnostics."""

    span_lengths: Counter = field(default_factory=Counter)
    fill_depth: Counter = field(default_factory=Counter)
    group_sizes: Counter = field(default_factory=Counter)


def budget(n: int, p: float) -> int:
    """Number of tokens noun-verb masking selects: n*p rounded half up."""
    return math.floor(n * p + 0.5)


def mask_uniform(seq: TokenSequence, p: float, rng) -> Mask:
    return Mask(rng.bernoulli(seq.n, p))


def _mask_groups(n: int, groups, p: float, rng) -> Mask:
    draws = rng.bernoulli(len(groups), p)
    return Mask(_rng.expand_groups(n, groups, draws))


def mask_whole_word(seq: TokenSequence, p: float, rng, trace: MaskTrace | None = None) -> Mask:
    groups = word_groups(seq)
    if trace is not None:
        trace.group_sizes.update(len(g) for g in groups)
    return _mask_groups(seq.n, groups, p, rng)


def mask_noun_verb(seq: TokenSequence, p: float, rng, trace: MaskTrace | None = None) -> Mask:
    """Mask ``budget(n, p)`` tokens, exhausting POS categories in priority order.

    When the budget ends inside a category, that category's masked subset is a
    uniform random sample.
    """
    remaining = budget(seq.n, p)
    buckets: list[list[int]] = [[] for _ in POSCategory]
    for i, tok in enumerate(seq.tokens):
        buckets[tok.pos].append(i)
    bits = bytearray(seq.n)
    depth = None
    for cat, bucket in zip(POSCategory, buckets):
        if remaining == 0:
            break
        if not bucket:
            continue
        depth = cat
        if len(bucket) <= remaining:
            chosen = bucket
        else:
            chosen = [bucket[j] for j in rng.sample_indices(remaining, len(bucket))]
        for i in chosen:
            bits[i] = 1
        remaining -= len(chosen)
    if trace is not None and depth is not None:
        trace.fill_depth[depth.name] += 1
    return Mask(bytes(bits))


def mask_span(seq: TokenSequence, p: float, rng, params: SpanParams | None = None,
              trace: MaskTrace | None = None) -> Mask:
    """Mask random token spans until the masked fraction reaches ``p``.

    Starts are uniform over positions; spans may overlap earlier ones and are
    clipped at the sequence end.
    """
    params = params or DEFAULT_SPAN
    bits, lengths = rng.span_fill(seq.n, p, params.cdf)
    if trace is not None:
        trace.span_lengths.update(lengths)
    return Mask(bits)


def mask_pmi(seq: TokenSequence, p: float, rng, vocab: PmiVocabulary,
             trace: MaskTrace | None = None) -> Mask:
    """One Bernoulli(p) draw per PMI group; a group's words share its bit."""
    words = word_groups(seq)
    segmentation = segment_by_ngrams(seq, vocab)
    groups = [[i for w in g for i in words[w]] for g in segmentation]
    if trace is not None:
        trace.group_sizes.update(len(g) for g in segmentation)
    return _mask_groups(seq.n, groups, p, rng)


DEFAULT_SPAN = SpanParams()


@dataclass(frozen=True)
class StrategyContext:
    """Extra inputs some strategies need."""

    vocab: PmiVocabulary | None = None
    span: SpanParams = DEFAULT_SPAN


def apply_strategy(seq: TokenSequence, cfg: MaskingConfig, ctx: StrategyContext | None = None,
                   trace: MaskTrace | None = None, rng=None) -> Mask:
    """Mask ``seq`` per ``cfg`` using the record's own stream.

    The stream is derived from ``(cfg.global_seed, seq.id)`` unless ``rng`` is given.
    """
    ctx = ctx or StrategyContext()
    if cfg.strategy is Strategy.PMI and ctx.vocab is None:
        raise ConfigurationError("the pmi strategy needs a PMI vocabulary")
    if rng is None:
        rng = _rng.stream_for(cfg.global_seed, seq.id, _rng.MASKING)
    p = cfg.rate
    s = cfg.strategy
    if s is Strategy.UNIFORM:
        return mask_uniform(seq, p, rng)
    if s is Strategy.WHOLE_WORD:
        return mask_whole_word(seq, p, rng, trace)
    if s is Strategy.NOUN_VERB:
        return mask_noun_verb(seq, p, rng, trace)
    if s is Strategy.SPAN:
        return mask_span(seq, p, rng, ctx.span, trace)
    return mask_pmi(seq, p, rng, ctx.vocab, trace)
