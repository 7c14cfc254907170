"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--records 20000] [--length 40]

Reports records per second for each hot path on a single core.
"""

import argparse
import time

from maskrate import _purepy, rng
from maskrate.strategies import SpanParams

try:
    from maskrate import _kernels
except ImportError:
    _kernels = None


def bench(mod, n_records, length, vocab):
    texts = [f"tok{i}" for i in range(length)]
    cdf = SpanParams().cdf
    seeds = [rng.record_seed(0, f"r{i}") for i in range(n_records)]
    results = {}

    t0 = time.perf_counter()
    for s in seeds:
        mod.RandomStream(s).bernoulli(length, 0.6)
    results["uniform mask"] = n_records / (time.perf_counter() - t0)

    t0 = time.perf_counter()
    for s in seeds:
        mod.RandomStream(s).span_fill(length, 0.45, cdf)
    results["span mask"] = n_records / (time.perf_counter() - t0)

    t0 = time.perf_counter()
    for s in seeds:
        r = mod.RandomStream(s)
        r.corrupt(texts, r.bernoulli(length, 0.6), 0.8, 0.1, vocab, "[MASK]")
    results["uniform mask + corrupt"] = n_records / (time.perf_counter() - t0)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--records", type=int, default=20_000)
    parser.add_argument("--length", type=int, default=40)
    args = parser.parse_args()
    vocab = tuple(f"rep{i}" for i in range(1000))

    backends = [("python", _purepy)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    table = {name: bench(mod, args.records, args.length, vocab) for name, mod in backends}

    names = list(table)
    print(f"{'kernel':<26}" + "".join(f"{n:>16}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for kernel in table[names[0]]:
        row = f"{kernel:<26}" + "".join(f"{table[n][kernel]:>14,.0f}/s" for n in names)
        if len(names) == 2:
            row += f"{table['cython'][kernel] / table['python'][kernel]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
