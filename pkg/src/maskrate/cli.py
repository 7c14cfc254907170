"""Command line entry point: ``maskrate {mask,validate,pmi-build,stats,analyze}``.

Exit codes: 0 success, 1 validation or configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__, rng
from .analysis import INDICATORS, competitiveness, delta_report, load_results, render_csv
from .core import MaskrateError
from .pipeline import (
    CONFIG_KEYS,
    PipelineIOError,
    config_from_mapping,
    output_stats,
    read_corpus,
    run,
    validate,
)
from .pmi import DEFAULT_MIN_COUNT, DEFAULT_TOP_K, NgramCounts, build_vocab, count_ngrams

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

log = logging.getLogger("maskrate")

# CLI flag -> config key
_MASK_FLAGS = {
    "output": "output",
    "strategy": "strategy",
    "rate": "rate",
    "seed": "seed",
    "pmi_vocab": "pmi_vocab",
    "workers": "workers",
    "stats_out": "stats_out",
    "on_error": "on_error",
    "replacement_vocab": "replacement_vocab",
    "p_mask": "p_mask",
    "p_random": "p_random",
    "p_keep": "p_keep",
    "mask_token": "mask_token",
    "span_q": "span_q",
    "span_max_len": "span_max_len",
    "chunk_size": "chunk_size",
}


def _cmd_mask(args: argparse.Namespace) -> int:
    values: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except OSError as exc:
            log.error("cannot read config %s: %s", args.config, exc.strerror)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            log.error("config %s is not valid JSON: %s", args.config, exc)
            return EXIT_INVALID
        if not isinstance(values, dict):
            log.error("config %s must be a flat JSON object", args.config)
            return EXIT_INVALID
    if args.inputs:
        values["input"] = args.inputs
    for flag, key in _MASK_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            values[key] = v
    try:
        cfg = config_from_mapping(values)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    stats = run(cfg)
    json.dump(stats.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.inputs:
        report = validate(path, limit=args.limit)
        for lineno, message in report.violations:
            print(f"{path}:{lineno}: {message}")
        extra = report.violation_count - len(report.violations)
        if extra > 0:
            print(f"{path}: ... {extra} more violations")
        print(f"{path}: {report.records} records, {report.violation_count} violations",
              file=sys.stderr)
        if not report.ok:
            status = EXIT_INVALID
    return status


def _count_file(args: tuple[str, int]) -> NgramCounts:
    path, n_max = args
    return count_ngrams(read_corpus(path), n_max)


def _cmd_pmi_build(args: argparse.Namespace) -> int:
    if args.n_max < 2:
        log.error("--n-max must be at least 2")
        return EXIT_INVALID
    jobs = [(p, args.n_max) for p in args.inputs]
    counts = NgramCounts(args.n_max)
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for part in pool.map(_count_file, jobs):
                counts.merge(part)
    else:
        for job in jobs:
            counts.merge(_count_file(job))
    vocab = build_vocab(counts, top_k=args.top_k, min_count=args.min_count,
                        orders=tuple(range(2, args.n_max + 1)))
    vocab.save(args.output)
    sizes = ", ".join(f"n={n}: {len(v)}" for n, v in sorted(vocab.entries.items()))
    print(f"wrote {args.output} ({sizes})", file=sys.stderr)
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    stats = output_stats(args.output_file)
    json.dump({"records": stats.records, "tokens": stats.tokens,
               "masked_tokens": stats.masked_tokens, "mean_rate": stats.mean_rate},
              sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _write_report(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze_delta(args: argparse.Namespace) -> int:
    table = load_results(args.results)
    report = delta_report(table, args.base, args.target, paired=args.paired)
    _write_report(render_csv(report), args.output)
    return EXIT_OK


def _cmd_analyze_compete(args: argparse.Namespace) -> int:
    table = load_results(args.results)
    report = competitiveness(table, args.reference, args.indicator)
    _write_report(render_csv(report), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskrate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({rng.BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mask", help="mask and corrupt a JSON Lines corpus")
    m.add_argument("inputs", nargs="*", help="input JSON Lines files")
    m.add_argument("-o", "--output")
    m.add_argument("--config", help="flat JSON config; keys: " + ", ".join(CONFIG_KEYS))
    m.add_argument("--strategy", choices=["uniform", "whole_word", "noun_verb", "span", "pmi"])
    m.add_argument("--rate", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("--pmi-vocab")
    m.add_argument("--workers", type=int)
    m.add_argument("--stats-out")
    m.add_argument("--on-error", choices=["skip", "abort"])
    m.add_argument("--replacement-vocab", help="one token per line; needed when --p-random > 0")
    m.add_argument("--p-mask", type=float)
    m.add_argument("--p-random", type=float)
    m.add_argument("--p-keep", type=float)
    m.add_argument("--mask-token")
    m.add_argument("--span-q", type=float)
    m.add_argument("--span-max-len", type=int)
    m.add_argument("--chunk-size", type=int)
    m.set_defaults(func=_cmd_mask)

    v = sub.add_parser("validate", help="check records against the input schema")
    v.add_argument("inputs", nargs="+")
    v.add_argument("--limit", type=int, default=100)
    v.set_defaults(func=_cmd_validate)

    p = sub.add_parser("pmi-build", help="build a PMI n-gram vocabulary")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    p.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    p.add_argument("--workers", type=int, default=1, help="parallel counting, one input file per task")
    p.set_defaults(func=_cmd_pmi_build)

    s = sub.add_parser("stats", help="recompute masking statistics from a mask output file")
    s.add_argument("output_file")
    s.set_defaults(func=_cmd_stats)

    a = sub.add_parser("analyze", help="analyse sweep results")
    asub = a.add_subparsers(dest="analysis", required=True)
    d = asub.add_parser("delta", help="score change between two masking rates")
    d.add_argument("results", help="CSV with task,strategy,rate,seed,score")
    d.add_argument("--base", type=float, default=0.15)
    d.add_argument("--target", type=float, default=0.60)
    d.add_argument("--paired", action="store_true", help="SEM of per-seed differences")
    d.add_argument("-o", "--output", help="CSV path (default stdout)")
    d.set_defaults(func=_cmd_analyze_delta)
    c = asub.add_parser("compete", help="probability the reference strategy wins")
    c.add_argument("results")
    c.add_argument("--reference", default="uniform")
    c.add_argument("--indicator", choices=INDICATORS, default="reference-wins")
    c.add_argument("-o", "--output", help="CSV path (default stdout)")
    c.set_defaults(func=_cmd_analyze_compete)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (PipelineIOError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except MaskrateError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
