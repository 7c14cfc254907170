"""Domain types shared by every module: tokens, masks, configs and errors."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence


class MaskrateError(Exception):
    """Base class for toolkit errors."""


class ValidationError(MaskrateError, ValueError):
    """Input data violates a structural invariant."""


class DomainError(MaskrateError, ValueError):
    """Argument outside the domain of an operation."""


class ConfigurationError(MaskrateError, ValueError):
    """Inconsistent or incomplete configuration."""


class POSCategory(enum.IntEnum):
    """Masking priority classes; lower value is masked first."""

    NOUN = 0
    PROPER_NOUN = 1
    VERB = 2
    ADJECTIVE = 3
    ADVERB = 4
    OTHER = 5

    @classmethod
    def parse(cls, tag: str) -> tuple["POSCategory", bool]:
        """Map a tag string to a category.

        Accepts category names, Universal Dependencies tags and Penn Treebank
        tags, case-insensitively. Returns ``(category, known)``; unknown tags
        map to ``OTHER`` with ``known=False``.
        """
        key = tag.strip().upper()
        hit = _TAG_TABLE.get(key)
        if hit is not None:
            return hit, True
        if key.startswith("NNP"):
            return cls.PROPER_NOUN, True
        if key.startswith("NN"):
            return cls.NOUN, True
        if key.startswith("VB"):
            return cls.VERB, True
        if key.startswith("JJ"):
            return cls.ADJECTIVE, True
        if key.startswith("RB"):
            return cls.ADVERB, True
        return cls.OTHER, key in _OTHER_TAGS


_TAG_TABLE = {
    "NOUN": POSCategory.NOUN,
    "PROPN": POSCategory.PROPER_NOUN,
    "PROPER_NOUN": POSCategory.PROPER_NOUN,
    "PROPERNOUN": POSCategory.PROPER_NOUN,
    "VERB": POSCategory.VERB,
    "AUX": POSCategory.VERB,
    "ADJ": POSCategory.ADJECTIVE,
    "ADJECTIVE": POSCategory.ADJECTIVE,
    "ADV": POSCategory.ADVERB,
    "ADVERB": POSCategory.ADVERB,
    "OTHER": POSCategory.OTHER,
}

# Tags that are recognised but fall in the catch-all class.
_OTHER_TAGS = frozenset(
    "ADP CCONJ DET INTJ NUM PART PRON PUNCT SCONJ SYM X "
    "CC CD DT EX FW IN LS MD PDT POS PRP PRP$ RP TO UH WDT WP WP$ WRB "
    ". , : `` '' -LRB- -RRB- # $ HYPH NFP".split()
)


class Token(NamedTuple):
    text: str
    word_index: int
    pos: POSCategory = POSCategory.OTHER


@dataclass(frozen=True, slots=True)
class TokenSequence:
    """One caption: tokens with word ids and POS classes.

    Construction does not check the word-index invariant so that malformed
    records can still be represented and reported; see :func:`check_sequence`.
    """

    id: str
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def n(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def word_indices(self) -> list[int]:
        return [t.word_index for t in self.tokens]

    @classmethod
    def from_words(cls, id: str, words: Sequence[str | Sequence[str]],
                   pos: Sequence[POSCategory] | None = None) -> "TokenSequence":
        """Build a sequence from words, each a string or a list of subword tokens."""
        tokens = []
        for w, word in enumerate(words):
            pieces = [word] if isinstance(word, str) else list(word)
            cat = pos[w] if pos is not None else POSCategory.OTHER
            tokens.extend(Token(piece, w, cat) for piece in pieces)
        return cls(id, tuple(tokens))


def _word_index_error(seq: TokenSequence) -> str | None:
    prev = -1
    for i, tok in enumerate(seq.tokens):
        w = tok.word_index
        if not isinstance(w, int) or isinstance(w, bool):
            return f"token {i}: word index {w!r} is not an integer"
        if i == 0 and w != 0:
            return f"token {i}: first word index is {w}, expected 0"
        if w < prev:
            return f"token {i}: word index decreases from {prev} to {w}"
        if w > prev + 1:
            return f"token {i}: word index jumps from {prev} to {w}"
        prev = w
    return None


def check_sequence(seq: TokenSequence) -> list[str]:
    """Return a list of invariant violations (empty when valid)."""
    problems = []
    err = _word_index_error(seq)
    if err:
        problems.append(err)
    for i, tok in enumerate(seq.tokens):
        if not isinstance(tok.text, str) or not tok.text:
            problems.append(f"token {i}: empty token text")
        if not isinstance(tok.pos, POSCategory):
            problems.append(f"token {i}: missing POS category")
    return problems


@dataclass(frozen=True, slots=True)
class Mask:
    """Binary mask stored as a bytes object of 0/1 values."""

    bits: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.bits, bytes):
            object.__setattr__(self, "bits", bytes(1 if b else 0 for b in self.bits))

    @classmethod
    def from_bools(cls, bits: Iterable[bool | int]) -> "Mask":
        return cls(bytes(1 if b else 0 for b in bits))

    @classmethod
    def zeros(cls, n: int) -> "Mask":
        return cls(bytes(n))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self) -> Iterator[bool]:
        return (b == 1 for b in self.bits)

    def __getitem__(self, i: int) -> bool:
        return self.bits[i] == 1

    def count(self) -> int:
        return self.bits.count(1)

    def to_list(self) -> list[int]:
        return list(self.bits)

    def positions(self) -> list[int]:
        return [i for i, b in enumerate(self.bits) if b]


class Strategy(str, enum.Enum):
    UNIFORM = "uniform"
    WHOLE_WORD = "whole_word"
    NOUN_VERB = "noun_verb"
    SPAN = "span"
    PMI = "pmi"

    @classmethod
    def parse(cls, name: str | "Strategy") -> "Strategy":
        if isinstance(name, cls):
            return name
        key = name.strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ConfigurationError(f"unknown strategy {name!r} (choose from {choices})") from None


@dataclass(frozen=True, slots=True)
class MaskingConfig:
    strategy: Strategy = Strategy.UNIFORM
    rate: float = 0.15
    global_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigurationError(f"masking rate must lie in [0, 1], got {self.rate}")
        if not -(2**63) <= self.global_seed < 2**64:
            raise ConfigurationError("global seed must fit in 64 bits")


def empirical_masking_rate(mask: Mask | Sequence[bool | int]) -> float:
    """Fraction of set bits."""
    bits = mask.bits if isinstance(mask, Mask) else bytes(1 if b else 0 for b in mask)
    if not bits:
        raise DomainError("empirical masking rate of an empty mask is undefined")
    return bits.count(1) / len(bits)


def word_groups(seq: TokenSequence) -> list[list[int]]:
    """Token indices of each word, in word order.

    Raises:
        ValidationError: word indices do not start at 0, decrease, or skip a value.
    """
    err = _word_index_error(seq)
    if err:
        raise ValidationError(f"record {seq.id!r}: {err}")
    groups: list[list[int]] = []
    for i, tok in enumerate(seq.tokens):
        if tok.word_index == len(groups):
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


SWEEP_RATES = (0.15, 0.3, 0.45, 0.6, 0.75)

__all__ = [
    "ConfigurationError",
    "DomainError",
    "Mask",
    "MaskingConfig",
    "MaskrateError",
    "POSCategory",
    "SWEEP_RATES",
    "Strategy",
    "Token",
    "TokenSequence",
    "ValidationError",
    "check_sequence",
    "empirical_masking_rate",
    "word_groups",
]
