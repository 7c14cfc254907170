"""PMI n-gram vocabulary: counting, scoring, ranking, persistence and segmentation.

Words are compared by surface form: the word's tokens joined with any leading
``##`` continuation marker stripped, lower-cased.

An n-gram's score is its probability divided by the smallest product of
sub-span probabilities over all ways of cutting it into two or more
contiguous pieces. Probabilities are maximum-likelihood estimates (count over
the number of positions of that length). The ratio is evaluated in exact
integer arithmetic and rounded once, so equal n-grams always score to the
same float regardless of how the minimum was searched.
"""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .core import MaskrateError, TokenSequence, ValidationError, word_groups

Ngram = tuple[str, ...]

VOCAB_MAGIC = "#maskrate-pmi-vocab"
VOCAB_VERSION = 1
PMI_ORDERS = (2, 3, 4, 5)
DEFAULT_TOP_K = 800_000
DEFAULT_MIN_COUNT = 10


class UndefinedScore(MaskrateError, LookupError):
    """The n-gram or one of its sub-spans has no (or too few) occurrences."""


def word_forms(seq: TokenSequence) -> list[str]:
    """Normalised surface form of each word of ``seq``."""
    forms = []
    for group in word_groups(seq):
        pieces = []
        for k, i in enumerate(group):
            text = seq.tokens[i].text
            if k and text.startswith("##"):
                text = text[2:]
            pieces.append(text)
        forms.append("".join(pieces).lower())
    return forms


@dataclass
class NgramCounts:
    """Occurrence counts of word n-grams for n = 1..n_max.

    Counts add across shards: ``a.merge(b)`` equals counting both shards at once.
    """

    n_max: int
    counts: dict[int, Counter] = field(default_factory=dict)
    totals: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        for n in range(1, self.n_max + 1):
            self.counts.setdefault(n, Counter())
            self.totals.setdefault(n, 0)

    @property
    def total_tokens(self) -> int:
        return self.totals[1]

    def count(self, ngram: Sequence[str]) -> int:
        n = len(ngram)
        if n not in self.counts:
            return 0
        return self.counts[n].get(tuple(ngram), 0)

    def add_words(self, words: Sequence[str]) -> None:
        m = len(words)
        for n in range(1, min(self.n_max, m) + 1):
            if n == 1:
                self.counts[1].update((w,) for w in words)
            else:
                self.counts[n].update(zip(*(words[i:] for i in range(n))))
            self.totals[n] += m - n + 1

    def merge(self, other: "NgramCounts") -> "NgramCounts":
        if other.n_max != self.n_max:
            raise ValueError("cannot merge counts with different n_max")
        for n in range(1, self.n_max + 1):
            self.counts[n].update(other.counts[n])
            self.totals[n] += other.totals[n]
        return self


def count_ngrams(corpus: Iterable[TokenSequence | Sequence[str]], n_max: int = 5) -> NgramCounts:
    """Count contiguous word n-grams within each sequence (never across sequences).

    Items may be :class:`TokenSequence` records or plain lists of words.
    """
    result = NgramCounts(n_max)
    for item in corpus:
        words = word_forms(item) if isinstance(item, TokenSequence) else list(item)
        result.add_words(words)
    return result


def _probability_parts(ngram: Ngram, counts: NgramCounts, min_count: int):
    n = len(ngram)
    # spans[i][j] = (count, total) for ngram[i:j]
    spans: dict[tuple[int, int], tuple[int, int]] = {}
    for i in range(n):
        for j in range(i + 1, n + 1):
            c = counts.count(ngram[i:j])
            if c == 0:
                raise UndefinedScore(f"sub-span {' '.join(ngram[i:j])!r} never occurs")
            spans[i, j] = (c, counts.totals[j - i])
    c_full = spans[0, n][0]
    if c_full < min_count:
        raise UndefinedScore(f"{' '.join(ngram)!r} occurs {c_full} < {min_count} times")
    return spans


def _min_partition(spans, n: int) -> tuple[int, int]:
    """Smallest product of sub-span probabilities over cuts into >= 2 pieces.

    Dynamic programme over prefix lengths; values kept as exact (num, den) pairs.
    """
    # best[j]: min product over all segmentations of the prefix [0, j), one piece allowed
    best: list[tuple[int, int]] = [(1, 1)] + [None] * n  # type: ignore[list-item]
    for j in range(1, n + 1):
        bn, bd = spans[0, j]
        for i in range(1, j):
            pn, pd = best[i]
            cn, cd = spans[i, j]
            num, den = pn * cn, pd * cd
            if num * bd < bn * den:
                bn, bd = num, den
        best[j] = (bn, bd)
    out = None
    for i in range(1, n):
        pn, pd = best[i]
        cn, cd = spans[i, n]
        num, den = pn * cn, pd * cd
        if out is None or num * out[1] < out[0] * den:
            out = (num, den)
    return out  # type: ignore[return-value]


def pmi_score(ngram: Sequence[str], counts: NgramCounts, min_count: int = 1) -> float:
    """PMI ratio of a word n-gram (2 <= n <= 5).

    Raises:
        UndefinedScore: the n-gram occurs fewer than ``min_count`` times or a
            sub-span never occurs.
        ValueError: n outside 2..5 or beyond the counted orders.
    """
    ngram = tuple(ngram)
    n = len(ngram)
    if not 2 <= n <= 5:
        raise ValueError("PMI is defined for n-grams of length 2..5")
    if n > counts.n_max:
        raise ValueError(f"counts only go up to n={counts.n_max}")
    spans = _probability_parts(ngram, counts, max(min_count, 1))
    c, t = spans[0, n]
    mn, md = _min_partition(spans, n)
    # (c / t) / (mn / md)
    return (c * md) / (t * mn)


@dataclass
class PmiVocabulary:
    """Top-ranked n-grams per order, each list sorted by (score desc, n-gram asc)."""

    entries: dict[int, list[tuple[Ngram, float]]]
    top_k: int = DEFAULT_TOP_K
    min_count: int = DEFAULT_MIN_COUNT
    totals: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._lookup = {n: frozenset(g for g, _ in items) for n, items in self.entries.items()}
        self.max_order = max((n for n, items in self.entries.items() if items), default=0)

    @classmethod
    def from_ngrams(cls, ngrams: Iterable[Sequence[str] | str]) -> "PmiVocabulary":
        """Vocabulary from bare n-grams (score 0), for tests and hand-built lists."""
        entries: dict[int, list] = {}
        for g in ngrams:
            g = tuple(g.split()) if isinstance(g, str) else tuple(g)
            entries.setdefault(len(g), []).append((g, 0.0))
        for items in entries.values():
            items.sort()
        return cls(entries, top_k=max([len(v) for v in entries.values()] + [1]), min_count=1)

    def __contains__(self, ngram: Sequence[str]) -> bool:
        g = tuple(ngram)
        return g in self._lookup.get(len(g), ())

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PmiVocabulary):
            return NotImplemented
        return (self.entries == other.entries and self.top_k == other.top_k
                and self.min_count == other.min_count and self.totals == other.totals)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            write_vocab(self, fh)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PmiVocabulary":
        with open(path, encoding="utf-8", newline="\n") as fh:
            return read_vocab(fh)


def _rank_key(item: tuple[Ngram, float]):
    return (-item[1], item[0])


def build_vocab(counts: NgramCounts, top_k: int = DEFAULT_TOP_K,
                min_count: int = DEFAULT_MIN_COUNT, orders: Sequence[int] = PMI_ORDERS) -> PmiVocabulary:
    """Score every n-gram seen at least ``min_count`` times and keep the top ``top_k`` per order."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    entries: dict[int, list[tuple[Ngram, float]]] = {}
    for n in orders:
        if n > counts.n_max:
            continue
        scored = []
        for ngram, c in counts.counts[n].items():
            if c < min_count:
                continue
            try:
                scored.append((ngram, pmi_score(ngram, counts, min_count)))
            except UndefinedScore:
                continue
        scored.sort(key=_rank_key)
        entries[n] = scored[:top_k]
    totals = {n: counts.totals[n] for n in range(1, counts.n_max + 1)}
    return PmiVocabulary(entries, top_k=top_k, min_count=min_count, totals=totals)


def format_score(score: float) -> str:
    return format(score, ".17g")


def write_vocab(vocab: PmiVocabulary, fh: io.TextIOBase) -> None:
    """Write the flat vocabulary format.

    Header lines start with ``#``; each entry is ``n<TAB>words<TAB>score``.
    """
    totals = ",".join(f"{n}:{t}" for n, t in sorted(vocab.totals.items()))
    fh.write(f"{VOCAB_MAGIC} v{VOCAB_VERSION}\n")
    fh.write(f"#top_k={vocab.top_k}\n")
    fh.write(f"#min_count={vocab.min_count}\n")
    fh.write(f"#totals={totals}\n")
    for n in sorted(vocab.entries):
        for ngram, score in vocab.entries[n]:
            for w in ngram:
                if not w or any(ch.isspace() for ch in w):
                    raise ValidationError(f"word {w!r} cannot be stored in a vocabulary file")
            fh.write(f"{n}\t{' '.join(ngram)}\t{format_score(score)}\n")


def read_vocab(fh: Iterable[str]) -> PmiVocabulary:
    lines = iter(fh)
    first = next(lines, "").rstrip("\n")
    if first != f"{VOCAB_MAGIC} v{VOCAB_VERSION}":
        raise ValidationError(f"not a v{VOCAB_VERSION} PMI vocabulary file (header {first!r})")
    meta: dict[str, str] = {}
    entries: dict[int, list[tuple[Ngram, float]]] = {}
    for lineno, line in enumerate(lines, start=2):
        line = line.rstrip("\n")
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key] = value
            continue
        if not line:
            continue
        try:
            n_str, words, score_str = line.split("\t")
            n = int(n_str)
            ngram = tuple(words.split(" "))
            score = float(score_str)
        except ValueError:
            raise ValidationError(f"line {lineno}: malformed vocabulary entry") from None
        if len(ngram) != n:
            raise ValidationError(f"line {lineno}: order {n} does not match {len(ngram)} words")
        entries.setdefault(n, []).append((ngram, score))
    totals = {}
    if meta.get("totals"):
        for part in meta["totals"].split(","):
            k, _, v = part.partition(":")
            totals[int(k)] = int(v)
    return PmiVocabulary(entries, top_k=int(meta.get("top_k", DEFAULT_TOP_K)),
                         min_count=int(meta.get("min_count", DEFAULT_MIN_COUNT)), totals=totals)


@dataclass(frozen=True)
class Segmentation:
    """Word-index groups covering every word exactly once, in order."""

    groups: tuple[tuple[int, ...], ...]

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)


def segment_words(words: Sequence[str], vocab: PmiVocabulary) -> Segmentation:
    """Greedy left-to-right longest match against ``vocab``."""
    groups = []
    i = 0
    m = len(words)
    top = min(vocab.max_order, 5)
    while i < m:
        for n in range(min(top, m - i), 1, -1):
            if tuple(words[i:i + n]) in vocab:
                groups.append(tuple(range(i, i + n)))
                i += n
                break
        else:
            groups.append((i,))
            i += 1
    return Segmentation(tuple(groups))


def segment_by_ngrams(seq: TokenSequence, vocab: PmiVocabulary) -> Segmentation:
    return segment_words(word_forms(seq), vocab)
