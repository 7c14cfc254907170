"""Masking strategies, PMI vocabularies, BERT-style corruption and sweep analysis
for masked language modeling data."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConfigurationError,
    DomainError,
    Mask,
    MaskingConfig,
    MaskrateError,
    POSCategory,
    Strategy,
    Token,
    TokenSequence,
    ValidationError,
    empirical_masking_rate,
    word_groups,
)
from .rng import BACKEND, RandomStream, stream_for  # noqa: E402
