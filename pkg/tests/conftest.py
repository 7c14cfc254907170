import random

import pytest

from maskrate import _purepy
from maskrate.core import POSCategory, Token, TokenSequence

try:
    from maskrate import _kernels
except ImportError:  # pragma: no cover - extension not built
    _kernels = None

BACKENDS = [_purepy] + ([_kernels] if _kernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


def random_sequence(rnd: random.Random, n_tokens: int, rid: str = "r",
                    vocab_size: int = 50, max_pieces: int = 3) -> TokenSequence:
    """Random annotated sequence of exactly ``n_tokens`` tokens."""
    tokens = []
    w = 0
    while len(tokens) < n_tokens:
        pieces = min(rnd.randint(1, max_pieces), n_tokens - len(tokens))
        pos = rnd.choice(list(POSCategory))
        word = f"w{rnd.randrange(vocab_size)}"
        for k in range(pieces):
            text = word if k == 0 else f"##{k}"
            tokens.append(Token(text, w, pos))
        w += 1
    return TokenSequence(rid, tuple(tokens))


def random_corpus(seed: int, n_records: int, n_tokens: int = 40, **kw) -> list[TokenSequence]:
    rnd = random.Random(seed)
    return [random_sequence(rnd, n_tokens, f"rec-{i}", **kw) for i in range(n_records)]


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
