"""Sweep-result analysis: score deltas between two masking rates, and how
often a reference strategy beats the others."""

from __future__ import annotations

import bisect
import csv
import io
import math
import os
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .core import MaskrateError, SWEEP_RATES, ValidationError

RESULT_COLUMNS = ("task", "strategy", "rate", "seed", "score")


class AnalysisError(MaskrateError, ValueError):
    pass


class ResultRow(NamedTuple):
    task: str
    strategy: str
    rate: float
    seed: int
    score: float


def _rate_key(rate: float) -> float:
    return round(rate, 9)


@dataclass
class ResultTable:
    """Downstream scores keyed by (task, strategy, rate, seed).

    When ``grid`` is given every rate must lie on it.
    """

    rows: list[ResultRow] = field(default_factory=list)
    grid: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        self.rows = [r if isinstance(r, ResultRow) else ResultRow(*r) for r in self.rows]
        grid = None if self.grid is None else {_rate_key(g) for g in self.grid}
        seen: dict[tuple, int] = {}
        for i, row in enumerate(self.rows):
            key = (row.task, row.strategy, _rate_key(row.rate), row.seed)
            if key in seen:
                raise ValidationError(
                    f"row {i + 1} duplicates row {seen[key] + 1}: "
                    f"task={row.task} strategy={row.strategy} rate={row.rate} seed={row.seed}"
                )
            seen[key] = i
            if grid is not None and _rate_key(row.rate) not in grid:
                raise ValidationError(f"row {i + 1}: rate {row.rate} is not on the declared grid")

    def __len__(self) -> int:
        return len(self.rows)

    def scores(self, task: str, strategy: str, rate: float) -> dict[int, float]:
        rk = _rate_key(rate)
        return {r.seed: r.score for r in self.rows
                if r.task == task and r.strategy == strategy and _rate_key(r.rate) == rk}

    def shifted(self, c: float) -> "ResultTable":
        return ResultTable([r._replace(score=r.score + c) for r in self.rows], self.grid)

    def scaled(self, lam: float) -> "ResultTable":
        return ResultTable([r._replace(score=r.score * lam) for r in self.rows], self.grid)


def load_results(path: str | os.PathLike, grid: Sequence[float] | None = None) -> ResultTable:
    """Read a ``task,strategy,rate,seed,score`` CSV.

    Raises:
        ValidationError: wrong header, malformed number (with line), or duplicate key.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_results(fh, grid)


def parse_results(fh: Iterable[str], grid: Sequence[float] | None = None) -> ResultTable:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return ResultTable([], tuple(grid) if grid else None)
    if tuple(h.strip() for h in header) != RESULT_COLUMNS:
        raise ValidationError(f"expected header {','.join(RESULT_COLUMNS)}, got {','.join(header)}")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise ValidationError(f"line {line}: expected 5 fields, got {len(row)}")
        task, strategy, rate, seed, score = (c.strip() for c in row)
        try:
            parsed = ResultRow(task, strategy, float(rate), int(seed), float(score))
        except ValueError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        if not (math.isfinite(parsed.rate) and math.isfinite(parsed.score)):
            raise ValidationError(f"line {line}: non-finite number")
        rows.append(parsed)
    try:
        return ResultTable(rows, tuple(grid) if grid else None)
    except ValidationError as exc:
        # row numbers inside the table are data rows; the header is line 1
        raise ValidationError(f"{exc} (data rows counted from line 2)") from None


def sem(values: Sequence[float]) -> float | None:
    """Standard error of the mean; ``None`` for fewer than two values."""
    if len(values) < 2:
        return None
    return statistics.stdev(values) / math.sqrt(len(values))


class DeltaRow(NamedTuple):
    task: str
    strategy: str
    delta: float
    sem: float | None


@dataclass
class DeltaReport:
    rows: list[DeltaRow]
    base_rate: float
    target_rate: float
    paired: bool = False

    def get(self, task: str, strategy: str) -> DeltaRow:
        for r in self.rows:
            if r.task == task and r.strategy == strategy:
                return r
        raise KeyError((task, strategy))


def delta_report(table: ResultTable, base_rate: float = 0.15, target_rate: float = 0.6,
                 paired: bool = False) -> DeltaReport:
    """Mean score change from ``base_rate`` to ``target_rate`` per (task, strategy).

    The error is the two per-rate SEMs added in quadrature, or with ``paired``
    the SEM of per-seed differences (seed sets must then match).
    """
    cells = sorted({(r.task, r.strategy) for r in table.rows})
    missing = []
    rows = []
    for task, strategy in cells:
        base = table.scores(task, strategy, base_rate)
        target = table.scores(task, strategy, target_rate)
        if not base:
            missing.append((task, strategy, base_rate))
        if not target:
            missing.append((task, strategy, target_rate))
        if not base or not target:
            continue
        delta = statistics.fmean(target.values()) - statistics.fmean(base.values())
        if paired:
            if set(base) != set(target):
                raise AnalysisError(
                    f"paired mode needs matching seeds for {task}/{strategy}: "
                    f"{sorted(base)} vs {sorted(target)}"
                )
            err = sem([target[s] - base[s] for s in sorted(base)])
        else:
            sb, st = sem(list(base.values())), sem(list(target.values()))
            err = None if sb is None or st is None else math.hypot(sb, st)
        rows.append(DeltaRow(task, strategy, delta, err))
    if missing:
        listing = "; ".join(f"{t}/{s}@{r:g}" for t, s, r in missing)
        raise AnalysisError(f"missing cells: {listing}")
    return DeltaReport(rows, base_rate, target_rate, paired)


INDICATORS = ("reference-wins", "other-wins")


class CompetitivenessRow(NamedTuple):
    task: str
    rate: float
    p_hat: float
    pairs: int


@dataclass
class CompetitivenessReport:
    rows: list[CompetitivenessRow]
    reference: str
    indicator: str = "reference-wins"

    def get(self, task: str, rate: float) -> CompetitivenessRow:
        rk = _rate_key(rate)
        for r in self.rows:
            if r.task == task and _rate_key(r.rate) == rk:
                return r
        raise KeyError((task, rate))


def pairwise_win_rate(reference: Sequence[float], others: Sequence[float],
                      indicator: str = "reference-wins") -> float:
    """Fraction of (reference, other) pairs won strictly; ties count as losses."""
    if not reference or not others:
        raise AnalysisError("both score sets must be non-empty")
    ordered = sorted(others)
    wins = 0
    if indicator == "reference-wins":
        for u in reference:
            wins += bisect.bisect_left(ordered, u)
    elif indicator == "other-wins":
        for u in reference:
            wins += len(ordered) - bisect.bisect_right(ordered, u)
    else:
        raise AnalysisError(f"indicator must be one of {INDICATORS}")
    return wins / (len(reference) * len(others))


def competitiveness(table: ResultTable, reference: str = "uniform",
                    indicator: str = "reference-wins") -> CompetitivenessReport:
    """Per (task, rate), the share of cross pairs where the reference strategy wins.

    Pairs are the cartesian product of the reference's scores (all seeds) with
    every other strategy's scores at the same task and rate.
    """
    if indicator not in INDICATORS:
        raise AnalysisError(f"indicator must be one of {INDICATORS}")
    ref: dict[tuple, list[float]] = defaultdict(list)
    other: dict[tuple, list[float]] = defaultdict(list)
    rates: dict[tuple, float] = {}
    for r in table.rows:
        key = (r.task, _rate_key(r.rate))
        rates.setdefault(key, r.rate)
        (ref if r.strategy == reference else other)[key].append(r.score)
    rows = []
    for key in sorted(rates):
        if not ref.get(key):
            raise AnalysisError(f"reference strategy {reference!r} has no scores for "
                                f"task {key[0]} at rate {rates[key]:g}")
        if not other.get(key):
            raise AnalysisError(f"no other strategy has scores for task {key[0]} at rate {rates[key]:g}")
        u, x = ref[key], other[key]
        rows.append(CompetitivenessRow(key[0], rates[key], pairwise_win_rate(u, x, indicator),
                                       len(u) * len(x)))
    return CompetitivenessReport(rows, reference, indicator)


def _fmt(x: float | None) -> str:
    if x is None:
        return "nan"
    return f"{x:.6f}"


def render_csv(report: DeltaReport | CompetitivenessReport) -> str:
    """CSV text with fixed column order and six-decimal reals."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, DeltaReport):
        w.writerow(["task", "strategy", "delta", "sem"])
        for r in sorted(report.rows, key=lambda r: (r.task, r.strategy)):
            w.writerow([r.task, r.strategy, _fmt(r.delta), _fmt(r.sem)])
    elif isinstance(report, CompetitivenessReport):
        w.writerow(["task", "rate", "p_hat", "pairs"])
        for r in sorted(report.rows, key=lambda r: (r.task, r.rate)):
            w.writerow([r.task, _fmt(r.rate), _fmt(r.p_hat), r.pairs])
    else:
        raise TypeError(f"cannot render {type(report).__name__}")
    return buf.getvalue()


def emit_plot_data(report: DeltaReport | CompetitivenessReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(report))


__all__ = [
    "AnalysisError",
    "CompetitivenessReport",
    "DeltaReport",
    "ResultRow",
    "ResultTable",
    "SWEEP_RATES",
    "competitiveness",
    "delta_report",
    "emit_plot_data",
    "load_results",
    "pairwise_win_rate",
    "render_csv",
    "sem",
]
