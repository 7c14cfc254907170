import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_sequence
from oracles import priority_masks, truncated_geometric_mean
from maskrate import rng as _rng
from maskrate.core import (
    ConfigurationError,
    Mask,
    MaskingConfig,
    POSCategory as P,
    Strategy,
    Token,
    TokenSequence,
    empirical_masking_rate,
    word_groups,
)
from maskrate.pmi import PmiVocabulary
from maskrate.strategies import (
    SpanParams,
    StrategyContext,
    MaskTrace,
    apply_strategy,
    budget,
    mask_noun_verb,
    mask_pmi,
    mask_span,
    mask_uniform,
    mask_whole_word,
)


class ScriptedStream:
    """Stand-in stream returning fixed Bernoulli draws."""

    def __init__(self, draws):
        self.draws = list(draws)

    def bernoulli(self, n, p):
        out, self.draws = self.draws[:n], self.draws[n:]
        assert len(out) == n
        return bytes(out)


def tagged(tags, rid="nv"):
    return TokenSequence(rid, tuple(Token(f"t{i}", i, c) for i, c in enumerate(tags)))


def stream(seed=0):
    return _rng.RandomStream(seed)


seq40 = random_sequence(random.Random(1), 40)


# -- uniform --------------------------------------------------------------

def test_uniform_extremes():
    assert mask_uniform(seq40, 0.0, stream()).count() == 0
    assert mask_uniform(seq40, 1.0, stream()).count() == 40


def test_uniform_mean_rate_at_0_6():
    r = stream(11)
    seq = random_sequence(random.Random(2), 40)
    mean = np.mean([empirical_masking_rate(mask_uniform(seq, 0.6, r)) for _ in range(10_000)])
    # oracle: independent numpy binomial draws give the same expectation band
    ref = np.random.default_rng(0).binomial(40, 0.6, size=10_000).mean() / 40
    assert 0.59 <= ref <= 0.61
    assert 0.59 <= mean <= 0.61


# -- whole word -----------------------------------------------------------

def test_whole_word_scripted_draws():
    seq = TokenSequence.from_words("w", [["a", "##b"], "c"])
    assert mask_whole_word(seq, 0.5, ScriptedStream([1, 0])).to_list() == [1, 1, 0]


def test_whole_word_full_rate():
    assert mask_whole_word(seq40, 1.0, stream()).count() == 40


@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(1, 60))
@settings(max_examples=100)
def test_whole_word_atomic(seed, p, n):
    seq = random_sequence(random.Random(seed), n)
    bits = mask_whole_word(seq, p, stream(seed)).bits
    for group in word_groups(seq):
        assert len({bits[i] for i in group}) == 1


# -- noun-verb ------------------------------------------------------------

@pytest.mark.parametrize("p, expected", [
    (0.5, [1, 0, 0, 1]),
    (0.75, [1, 1, 0, 1]),
    (0.0, [0, 0, 0, 0]),
    (1.0, [1, 1, 1, 1]),
])
def test_noun_verb_examples(p, expected):
    tags = [P.NOUN, P.VERB, P.OTHER, P.NOUN]
    mask = mask_noun_verb(tagged(tags), p, stream())
    # priority-enumeration oracle: the only admissible mask of this weight
    assert priority_masks([int(t) for t in tags], budget(4, p)) == [tuple(expected)]
    assert mask.to_list() == expected


@pytest.mark.parametrize("n, p, k", [(40, 0.15, 6), (40, 0.3, 12), (40, 0.45, 18),
                                     (40, 0.6, 24), (40, 0.75, 30), (4, 0.625, 3),
                                     (2, 0.25, 1), (10, 0.05, 1), (3, 0.5, 2)])
def test_budget_rounds_half_up(n, p, k):
    assert budget(n, p) == k


@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(1, 12))
@settings(max_examples=150)
def test_noun_verb_matches_priority_oracle(seed, p, n):
    rnd = random.Random(seed)
    tags = [rnd.choice(list(P)) for _ in range(n)]
    mask = mask_noun_verb(tagged(tags), p, stream(seed))
    assert mask.count() == budget(n, p)
    assert tuple(mask.bits) in priority_masks([int(t) for t in tags], budget(n, p))


def test_noun_verb_boundary_category_is_sampled():
    tags = [P.NOUN] * 10
    seen = {mask_noun_verb(tagged(tags, f"r{i}"), 0.3, stream(i)).bits for i in range(200)}
    assert len(seen) > 50


# -- span -----------------------------------------------------------------

def test_span_zero_rate_is_empty():
    assert mask_span(seq40, 0.0, stream()).count() == 0


def test_span_minimum_bits():
    seq = random_sequence(random.Random(3), 10)
    for seed in range(200):
        assert mask_span(seq, 0.15, stream(seed)).count() >= 2


@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(1, 60))
@settings(max_examples=200)
def test_span_rate_bounds(seed, p, n):
    seq = random_sequence(random.Random(seed), n)
    rate = empirical_masking_rate(mask_span(seq, p, stream(seed)))
    assert p <= rate <= p + 10 / n + 1e-12


def test_span_length_distribution():
    params = SpanParams()
    expected = truncated_geometric_mean()
    assert params.mean_length() == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(3.797, abs=1e-3)
    r = stream(5)
    draws = [r.truncated_geometric(params.cdf) for _ in range(100_000)]
    assert abs(np.mean(draws) - expected) < 0.05
    freq = np.bincount(draws, minlength=11)[1:] / len(draws)
    np.testing.assert_allclose(freq, params.pmf(), atol=0.006)


def test_span_params_validation():
    with pytest.raises(ConfigurationError):
        SpanParams(0.0, 10)
    with pytest.raises(ConfigurationError):
        SpanParams(0.2, 0)
    assert SpanParams(0.5, 1).cdf.tolist() == [1.0]


def test_span_trace_records_lengths():
    trace = MaskTrace()
    mask_span(seq40, 0.5, stream(1), trace=trace)
    assert sum(trace.span_lengths.values()) >= 1
    assert set(trace.span_lengths) <= set(range(1, 11))


# -- pmi ------------------------------------------------------------------

def test_pmi_scripted_groups():
    seq = TokenSequence.from_words("p", ["a", ["b", "##x"], "c"])
    vocab = PmiVocabulary.from_ngrams(["a bx"])
    assert mask_pmi(seq, 0.5, ScriptedStream([1, 0]), vocab).to_list() == [1, 1, 1, 0]


def test_pmi_example_from_contract():
    seq = TokenSequence.from_words("p", ["a", "b", "c"])
    vocab = PmiVocabulary.from_ngrams(["a b"])
    assert mask_pmi(seq, 0.5, ScriptedStream([1, 0]), vocab).to_list() == [1, 1, 0]


@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(1, 40))
@settings(max_examples=100)
def test_pmi_with_empty_vocab_equals_whole_word(seed, p, n):
    seq = random_sequence(random.Random(seed), n)
    empty = PmiVocabulary({})
    assert mask_pmi(seq, p, stream(seed), empty) == mask_whole_word(seq, p, stream(seed))


def test_pmi_full_rate():
    vocab = PmiVocabulary.from_ngrams(["w1 w2", "w3 w4 w5"])
    assert mask_pmi(seq40, 1.0, stream(), vocab).count() == 40


# -- dispatch -------------------------------------------------------------

def test_apply_strategy_uniform_is_bit_identical():
    cfg = MaskingConfig(Strategy.UNIFORM, 0.4, 99)
    direct = mask_uniform(seq40, 0.4, _rng.stream_for(99, seq40.id))
    assert apply_strategy(seq40, cfg) == direct


def test_apply_strategy_pmi_needs_vocab():
    with pytest.raises(ConfigurationError):
        apply_strategy(seq40, MaskingConfig(Strategy.PMI, 0.4))


@pytest.mark.parametrize("strategy", list(Strategy))
def test_apply_strategy_is_deterministic(strategy):
    ctx = StrategyContext(vocab=PmiVocabulary.from_ngrams(["w1 w2"]))
    cfg = MaskingConfig(strategy, 0.45, 123)
    a = apply_strategy(seq40, cfg, ctx)
    b = apply_strategy(seq40, cfg, ctx)
    assert a == b and isinstance(a, Mask) and len(a) == 40
    other_id = TokenSequence("other", seq40.tokens)
    masks = {apply_strategy(other_id, MaskingConfig(strategy, 0.45, s), ctx).bits for s in range(20)}
    if strategy is not Strategy.NOUN_VERB:
        assert len(masks) > 1
