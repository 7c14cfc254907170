"""Streaming JSON Lines masking pipeline.

Input records look like::

    {"id": "r1", "tokens": [{"t": "a", "w": 0, "pos": "DET"}, ...]}

and each produces one output line::

    {"id": "r1", "corrupted": [...], "labels": [... or null], "mask": [0, 1, ...]}

Lines are read in chunks, masked and corrupted by a pool of worker processes,
and written back in input order. At most ``2 * workers`` chunks are in flight,
so the reader never runs far ahead of the writer. Every record draws from its
own stream seeded by ``(global_seed, id)``, which makes the output identical
for any worker count.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from . import rng as _rng
from .core import (
    ConfigurationError,
    MaskingConfig,
    MaskrateError,
    POSCategory,
    Strategy,
    Token,
    TokenSequence,
    ValidationError,
    check_sequence,
)
from .corruption import CorruptionPolicy, load_replacement_vocab
from .pmi import PmiVocabulary
from .strategies import MaskTrace, SpanParams, StrategyContext, apply_strategy

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 512
MAX_VIOLATIONS = 100


class RecordError(MaskrateError):
    """A malformed input line."""

    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


class PipelineIOError(MaskrateError, OSError):
    pass


@dataclass
class PipelineConfig:
    inputs: list[str]
    output: str
    masking: MaskingConfig = field(default_factory=MaskingConfig)
    corruption: CorruptionPolicy = field(default_factory=lambda: CorruptionPolicy(p_mask=1.0, p_random=0.0, p_keep=0.0))
    pmi_vocab: str | None = None
    span: SpanParams = field(default_factory=SpanParams)
    workers: int = 1
    stats_out: str | None = None
    on_error: str = "abort"
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self) -> None:
        if isinstance(self.inputs, (str, os.PathLike)):
            self.inputs = [self.inputs]
        self.inputs = [str(p) for p in self.inputs]
        self.output = str(self.output)
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.chunk_size < 1:
            raise ConfigurationError("chunk_size must be >= 1")
        if self.on_error not in ("skip", "abort"):
            raise ConfigurationError("on_error must be 'skip' or 'abort'")
        if self.masking.strategy is Strategy.PMI and not self.pmi_vocab:
            raise ConfigurationError("the pmi strategy needs --pmi-vocab")


# Flat config-file keys. Values in the file are overridden by CLI flags.
CONFIG_KEYS = {
    "input": "input path or list of paths",
    "output": "output path",
    "strategy": "uniform | whole_word | noun_verb | span | pmi",
    "rate": "masking rate in [0, 1]",
    "seed": "global 64-bit seed",
    "pmi_vocab": "PMI vocabulary file (pmi strategy)",
    "span_q": "geometric success probability for span lengths",
    "span_max_len": "maximum span length",
    "p_mask": "probability a masked token becomes the mask token",
    "p_random": "probability a masked token becomes a random token",
    "p_keep": "probability a masked token is left unchanged",
    "mask_token": "mask token string",
    "replacement_vocab": "replacement token file, one per line",
    "workers": "worker processes",
    "stats_out": "JSON statistics output path",
    "on_error": "skip | abort",
    "chunk_size": "records per work unit",
}


def config_from_mapping(values: Mapping[str, Any]) -> PipelineConfig:
    """Build a :class:`PipelineConfig` from flat keys (see ``CONFIG_KEYS``)."""
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if not values.get("input"):
        raise ConfigurationError("no input given")
    if not values.get("output"):
        raise ConfigurationError("no output given")
    try:
        masking = MaskingConfig(
            strategy=values.get("strategy", "uniform"),
            rate=float(values.get("rate", 0.15)),
            global_seed=int(values.get("seed", 0)),
        )
        p_mask = float(values.get("p_mask", 0.8))
        p_random = float(values.get("p_random", 0.1))
        p_keep = float(values.get("p_keep", 0.1))
        vocab: tuple[str, ...] = ()
        if values.get("replacement_vocab"):
            vocab = load_replacement_vocab(values["replacement_vocab"])
        policy = CorruptionPolicy(p_mask, p_random, p_keep,
                                  mask_token=values.get("mask_token", "[MASK]"),
                                  replacement_vocab=vocab)
        span = SpanParams(float(values.get("span_q", 0.2)), int(values.get("span_max_len", 10)))
        inputs = values["input"]
        return PipelineConfig(
            inputs=[inputs] if isinstance(inputs, str) else list(inputs),
            output=values["output"],
            masking=masking,
            corruption=policy,
            pmi_vocab=values.get("pmi_vocab"),
            span=span,
            workers=int(values.get("workers", 1)),
            stats_out=values.get("stats_out"),
            on_error=values.get("on_error", "abort"),
            chunk_size=int(values.get("chunk_size", DEFAULT_CHUNK)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None


@dataclass
class MaskingStats:
    records: int = 0
    tokens: int = 0
    masked_tokens: int = 0
    skipped: int = 0
    unknown_pos: int = 0
    span_lengths: Counter = field(default_factory=Counter)
    fill_depth: Counter = field(default_factory=Counter)
    group_sizes: Counter = field(default_factory=Counter)

    @property
    def mean_rate(self) -> float:
        return self.masked_tokens / self.tokens if self.tokens else 0.0

    def merge(self, other: "MaskingStats") -> None:
        for f in fields(self):
            mine = getattr(self, f.name)
            theirs = getattr(other, f.name)
            if isinstance(mine, Counter):
                mine.update(theirs)
            else:
                setattr(self, f.name, mine + theirs)

    def to_dict(self) -> dict:
        def hist(c: Counter) -> dict:
            return {str(k): c[k] for k in sorted(c)}

        return {
            "records": self.records,
            "tokens": self.tokens,
            "masked_tokens": self.masked_tokens,
            "mean_rate": self.mean_rate,
            "skipped": self.skipped,
            "unknown_pos": self.unknown_pos,
            "span_lengths": hist(self.span_lengths),
            "fill_depth": {k: self.fill_depth[k] for k in
                           [c.name for c in POSCategory] if k in self.fill_depth},
            "group_sizes": hist(self.group_sizes),
        }


def parse_record(line: str) -> tuple[TokenSequence, int]:
    """Decode one JSON line. Returns the sequence and its unknown-POS tag count.

    Raises:
        ValueError: malformed JSON or fields, or a violated sequence invariant.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str):
        raise ValueError("'id' must be a string")
    raw = obj.get("tokens")
    if not isinstance(raw, list):
        raise ValueError("'tokens' must be a list")
    tokens = []
    unknown = 0
    parse_tag = _parse_tag
    for i, tok in enumerate(raw):
        try:
            text = tok["t"]
            w = tok["w"]
            tag = tok.get("pos", "")
        except (TypeError, KeyError):
            raise ValueError(f"token {i}: needs fields 't' and 'w'") from None
        if not isinstance(text, str) or not text:
            raise ValueError(f"token {i}: 't' must be a non-empty string")
        if not isinstance(tag, str):
            raise ValueError(f"token {i}: 'pos' must be a string")
        cat, known = parse_tag(tag)
        unknown += not known
        tokens.append(Token(text, w, cat))
    seq = TokenSequence(rid, tuple(tokens))
    problems = check_sequence(seq)
    if problems:
        raise ValueError(problems[0])
    return seq, unknown


_TAG_CACHE: dict[str, tuple[POSCategory, bool]] = {}


def _parse_tag(tag: str) -> tuple[POSCategory, bool]:
    hit = _TAG_CACHE.get(tag)
    if hit is None:
        hit = _TAG_CACHE[tag] = POSCategory.parse(tag)
    return hit


def encode_output(rid: str, corrupted: Sequence[str], labels: Sequence[str | None], mask: bytes) -> str:
    return json.dumps(
        {"id": rid, "corrupted": corrupted, "labels": labels, "mask": list(mask)},
        ensure_ascii=False, separators=(",", ":"),
    )


@dataclass
class _ChunkResult:
    lines: list[str]
    stats: MaskingStats
    errors: list[tuple[int, str]]


class _Worker:
    """Everything a worker needs; immutable once built."""

    def __init__(self, cfg: PipelineConfig) -> None:
        self.masking = cfg.masking
        vocab = PmiVocabulary.load(cfg.pmi_vocab) if cfg.masking.strategy is Strategy.PMI else None
        self.ctx = StrategyContext(vocab=vocab, span=cfg.span)
        self.policy = cfg.corruption
        self.traced = cfg.masking.strategy in (Strategy.WHOLE_WORD, Strategy.NOUN_VERB,
                                               Strategy.SPAN, Strategy.PMI)

    def process(self, chunk: list[tuple[int, bytes]]) -> _ChunkResult:
        stats = MaskingStats()
        trace = MaskTrace() if self.traced else None
        out: list[str] = []
        errors: list[tuple[int, str]] = []
        seed = self.masking.global_seed
        pol = self.policy
        for lineno, raw in chunk:
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                errors.append((lineno, f"encoding error: invalid UTF-8 at byte {exc.start}"))
                continue
            try:
                seq, unknown = parse_record(line)
            except ValueError as exc:
                errors.append((lineno, str(exc)))
                continue
            mask = apply_strategy(seq, self.masking, self.ctx, trace)
            stream = _rng.stream_for(seed, seq.id, _rng.CORRUPTION)
            corrupted, labels = stream.corrupt(
                seq.texts, mask.bits, pol.p_mask, pol.p_random, pol.replacement_vocab, pol.mask_token
            )
            out.append(encode_output(seq.id, corrupted, labels, mask.bits))
            stats.records += 1
            stats.tokens += seq.n
            stats.masked_tokens += mask.count()
            stats.unknown_pos += unknown
        if trace is not None:
            stats.span_lengths = trace.span_lengths
            stats.fill_depth = trace.fill_depth
            stats.group_sizes = trace.group_sizes
        return _ChunkResult(out, stats, errors)


_WORKER: _Worker | None = None


def _init_worker(cfg: PipelineConfig) -> None:
    global _WORKER
    _WORKER = _Worker(cfg)


def _run_chunk(chunk: list[tuple[int, bytes]]) -> _ChunkResult:
    assert _WORKER is not None
    return _WORKER.process(chunk)


def _read_chunks(paths: Iterable[str], size: int) -> Iterator[list[tuple[int, bytes]]]:
    """Yield non-blank lines as (line number, raw bytes) chunks. Line numbers are per file."""
    chunk: list[tuple[int, bytes]] = []
    for path in paths:
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.rstrip(b"\r\n")
                if not raw.strip():
                    continue
                chunk.append((lineno, raw))
                if len(chunk) >= size:
                    yield chunk
                    chunk = []
    if chunk:
        yield chunk


def _results(cfg: PipelineConfig) -> Iterator[_ChunkResult]:
    chunks = _read_chunks(cfg.inputs, cfg.chunk_size)
    if cfg.workers == 1:
        worker = _Worker(cfg)
        for chunk in chunks:
            yield worker.process(chunk)
        return
    with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker,
                             initargs=(cfg,)) as pool:
        pending: deque = deque()
        try:
            for chunk in chunks:
                pending.append(pool.submit(_run_chunk, chunk))
                if len(pending) >= 2 * cfg.workers:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()
        finally:
            for fut in pending:
                fut.cancel()


def run(cfg: PipelineConfig) -> MaskingStats:
    """Mask and corrupt every input record, writing JSON Lines to ``cfg.output``.

    Raises:
        RecordError: a malformed line when ``on_error`` is ``"abort"``.
        ConfigurationError: unreadable PMI vocabulary or bad settings.
        PipelineIOError: input or output cannot be opened.
    """
    if cfg.masking.strategy is Strategy.PMI:
        if not cfg.pmi_vocab or not Path(cfg.pmi_vocab).is_file():
            raise ConfigurationError(f"PMI vocabulary not found: {cfg.pmi_vocab}")
    for path in cfg.inputs:
        if not Path(path).is_file():
            raise PipelineIOError(f"cannot read input {path}")
    stats = MaskingStats()
    tmp = Path(cfg.output + ".part")
    try:
        fh = open(tmp, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise PipelineIOError(f"cannot write output {cfg.output}: {exc.strerror}") from None
    try:
        with fh:
            for result in _results(cfg):
                for lineno, message in result.errors:
                    if cfg.on_error == "abort":
                        raise RecordError(lineno, message)
                    log.warning("skipping line %d: %s", lineno, message)
                    stats.skipped += 1
                if result.lines:
                    fh.write("\n".join(result.lines))
                    fh.write("\n")
                stats.merge(result.stats)
        os.replace(tmp, cfg.output)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    if stats.unknown_pos:
        log.warning("%d tokens had unrecognised POS tags and were treated as OTHER", stats.unknown_pos)
    if cfg.stats_out:
        write_stats(stats, cfg.stats_out)
    return stats


def write_stats(stats: MaskingStats, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2)
        fh.write("\n")


def output_stats(path: str | os.PathLike) -> MaskingStats:
    """Recount records, tokens and mask bits from a pipeline output file."""
    stats = MaskingStats()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                mask = json.loads(line)["mask"]
            except (ValueError, KeyError, TypeError):
                raise ValidationError(f"line {lineno}: not a masked-output record") from None
            stats.records += 1
            stats.tokens += len(mask)
            stats.masked_tokens += sum(mask)
    return stats


@dataclass
class ValidationReport:
    records: int = 0
    violation_count: int = 0
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0


def validate(path: str | os.PathLike, limit: int = MAX_VIOLATIONS) -> ValidationReport:
    """Check every record of a JSON Lines corpus; keep the first ``limit`` violations."""
    report = ValidationReport()
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise PipelineIOError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.rstrip(b"\r\n")
            if not raw.strip():
                continue
            report.records += 1
            try:
                parse_record(raw.decode("utf-8"))
                continue
            except UnicodeDecodeError as exc:
                message = f"encoding error: invalid UTF-8 at byte {exc.start}"
            except ValueError as exc:
                message = str(exc)
            report.violation_count += 1
            if len(report.violations) < limit:
                report.violations.append((lineno, message))
    return report


def read_corpus(paths: str | os.PathLike | Sequence[str | os.PathLike]) -> Iterator[TokenSequence]:
    """Parse annotated records, raising :class:`RecordError` on the first bad line."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    for chunk in _read_chunks([str(p) for p in paths], DEFAULT_CHUNK):
        for lineno, raw in chunk:
            try:
                yield parse_record(raw.decode("utf-8"))[0]
            except UnicodeDecodeError:
                raise RecordError(lineno, "encoding error") from None
            except ValueError as exc:
                raise RecordError(lineno, str(exc)) from None


def write_corpus(records: Iterable[TokenSequence], path: str | os.PathLike) -> None:
    """Serialise sequences in the pipeline's input format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in records:
            toks = [{"t": t.text, "w": t.word_index, "pos": t.pos.name} for t in seq.tokens]
            fh.write(json.dumps({"id": seq.id, "tokens": toks}, ensure_ascii=False,
                                separators=(",", ":")))
            fh.write("\n")
