"""The compiled and pure-Python kernels must produce identical draws."""

import pytest
from hypothesis import given, settings, strategies as st

from maskrate import _purepy, rng
from maskrate.strategies import SpanParams

_kernels = pytest.importorskip("maskrate._kernels")

seeds = st.integers(0, 2**64 - 1)
rates = st.floats(0.0, 1.0)


def pair(seed):
    return _purepy.RandomStream(seed), _kernels.RandomStream(seed)


def test_splitmix_reference_values():
    # First outputs of SplitMix64 seeded with 0, as published with the algorithm.
    r = _purepy.RandomStream(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(seeds)
def test_raw_stream(seed):
    a, b = pair(seed)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    assert a.random() == b.random()
    assert a.below(13) == b.below(13)
    assert a.state == b.state


@given(seeds, st.integers(0, 100), rates)
def test_bernoulli(seed, n, p):
    a, b = pair(seed)
    assert a.bernoulli(n, p) == b.bernoulli(n, p)


@given(seeds, st.integers(1, 60), rates, st.floats(0.05, 0.95), st.integers(1, 12))
@settings(max_examples=200)
def test_span_fill(seed, n, p, q, max_len):
    cdf = SpanParams(q, max_len).cdf
    a, b = pair(seed)
    assert a.span_fill(n, p, cdf) == b.span_fill(n, p, cdf)


@given(seeds, st.data())
def test_sample_indices(seed, data):
    n = data.draw(st.integers(0, 30))
    k = data.draw(st.integers(0, n))
    a, b = pair(seed)
    assert a.sample_indices(k, n) == b.sample_indices(k, n)


@given(seeds, st.lists(st.booleans(), max_size=60))
def test_corrupt(seed, bits):
    mask = bytes(bits)
    texts = [f"t{i}" for i in range(len(bits))]
    a, b = pair(seed)
    assert (a.corrupt(texts, mask, 0.8, 0.1, ["x", "y", "z"], "[MASK]")
            == b.corrupt(texts, mask, 0.8, 0.1, ["x", "y", "z"], "[MASK]"))
    assert (a.corruption_codes(mask, 0.8, 0.1, 3) == b.corruption_codes(mask, 0.8, 0.1, 3))


def test_corrupt_and_codes_consume_the_same_draws(backend):
    mask = bytes([1, 0, 1, 1, 1, 0, 1, 1] * 20)
    texts = [f"t{i}" for i in range(len(mask))]
    vocab = ["x", "y", "z"]
    corrupted, labels = backend.RandomStream(5).corrupt(texts, mask, 0.5, 0.3, vocab, "[M]")
    codes = backend.RandomStream(5).corruption_codes(mask, 0.5, 0.3, len(vocab))
    for i, code in enumerate(codes):
        if code == _purepy.MASK_CODE:
            assert corrupted[i] == "[M]"
        elif code == _purepy.KEEP_CODE:
            assert corrupted[i] == texts[i]
        elif code > 0:
            assert corrupted[i] == vocab[code - 1]
        else:
            assert corrupted[i] == texts[i] and labels[i] is None


def test_expand_groups():
    groups = [[0, 1], [2], [3, 4]]
    assert _purepy.expand_groups(5, groups, b"\x01\x00\x01") == b"\x01\x01\x00\x01\x01"
    assert _kernels.expand_groups(5, groups, b"\x01\x00\x01") == b"\x01\x01\x00\x01\x01"


def test_truncated_geometric_bounds(backend):
    r = backend.RandomStream(3)
    cdf = SpanParams().cdf
    draws = [r.truncated_geometric(cdf) for _ in range(5000)]
    assert min(draws) == 1 and max(draws) == 10


def test_below_rejects_empty_range(backend):
    with pytest.raises(ValueError):
        backend.RandomStream(1).below(0)


def test_backend_selection_reports_compiled():
    assert rng.BACKEND == "cython"
    assert rng.RandomStream is _kernels.RandomStream


@pytest.mark.parametrize("strategy", ["uniform", "whole_word", "noun_verb", "span"])
def test_forced_pure_python_pipeline_is_byte_identical(tmp_path, strategy):
    import os
    import subprocess
    import sys

    from conftest import random_corpus
    from maskrate.pipeline import write_corpus

    corpus = tmp_path / "c.jsonl"
    write_corpus(random_corpus(21, 300), corpus)
    (tmp_path / "rv.txt").write_text("x\ny\nz\n")
    outputs = []
    for pure in ("", "1"):
        out = tmp_path / f"out{pure}.jsonl"
        env = dict(os.environ, MASKRATE_PURE_PYTHON=pure)
        code = ("import sys; from maskrate import rng; from maskrate.cli import main; "
                "print(rng.BACKEND, file=sys.stderr); sys.exit(main(sys.argv[1:]))")
        proc = subprocess.run(
            [sys.executable, "-c", code, "mask", str(corpus), "-o", str(out), "--strategy", strategy,
             "--rate", "0.45", "--seed", "9", "--replacement-vocab", str(tmp_path / "rv.txt")],
            env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr.strip().endswith("python" if pure else "cython")
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_record_seed_is_stable():
    # Frozen values: a change here breaks reproducibility of every masked corpus.
    assert rng.record_seed(0, "a") == rng.record_seed(0, "a")
    assert rng.record_seed(0, "a") != rng.record_seed(1, "a")
    assert rng.record_seed(0, "a") != rng.record_seed(0, "b")
    assert rng.record_seed(0, "a", rng.MASKING) != rng.record_seed(0, "a", rng.CORRUPTION)
    assert rng.record_seed(0, "a") == 14300560184641484674


@given(st.integers(0, 2**64 - 1), st.text(max_size=20), st.integers(0, 3))
def test_record_seed_matches_documented_formula(global_seed, rid, purpose):
    import hashlib

    m64 = 2**64 - 1
    golden = 0x9E3779B97F4A7C15

    def mix(x):
        z = (x + golden) & m64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & m64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & m64
        return z ^ (z >> 31)

    h = int.from_bytes(hashlib.blake2b(rid.encode("utf-8"), digest_size=8).digest(), "little")
    expected = mix(mix(global_seed) ^ h ^ ((purpose * golden) & m64))
    assert rng.record_seed(global_seed, rid, purpose) == expected
