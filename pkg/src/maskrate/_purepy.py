"""Pure-Python random stream and masking kernels.

Mirrors ``_kernels.pyx`` draw for draw. Any change here must be made in the
Cython module as well; ``tests/test_backends.py`` checks the two agree bit-exactly.
"""

from __future__ import annotations

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_TWO_POW_M53 = 1.0 / 9007199254740992.0

MASK_CODE = -1
KEEP_CODE = -2


class RandomStream:
    """SplitMix64 generator.

    ``random()`` returns the top 53 bits scaled to [0, 1); ``below(n)`` is
    ``int(random() * n)``.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _M64

    @property
    def state(self) -> int:
        return self._state

    def next_u64(self) -> int:
        s = (self._state + _GOLDEN) & _M64
        self._state = s
        z = ((s ^ (s >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _TWO_POW_M53

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return int(self.random() * n)

    def bernoulli(self, n: int, p: float) -> bytes:
        """``n`` independent Bernoulli(p) bits as a bytes object of 0/1."""
        rnd = self.random
        return bytes([1 if rnd() < p else 0 for _ in range(n)])

    def truncated_geometric(self, cdf) -> int:
        """Inverse-CDF draw on support {1..len(cdf)}; ``cdf[-1]`` must be 1.0."""
        u = self.random()
        k = 0
        last = len(cdf) - 1
        while k < last and u >= cdf[k]:
            k += 1
        return k + 1

    def sample_indices(self, k: int, n: int) -> list[int]:
        """``k`` distinct indices from range(n) via partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError("sample size out of range")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def span_fill(self, n: int, p: float, cdf) -> tuple[bytes, list[int]]:
        """Mask random spans until masked/n >= p.

        Returns the 0/1 mask and the sampled span lengths in draw order.
        """
        bits = bytearray(n)
        lengths: list[int] = []
        if n == 0:
            return bytes(bits), lengths
        count = 0
        while count / n < p:
            start = self.below(n)
            length = self.truncated_geometric(cdf)
            lengths.append(length)
            end = min(start + length, n)
            for i in range(start, end):
                if not bits[i]:
                    bits[i] = 1
                    count += 1
        return bytes(bits), lengths

    def corruption_codes(self, mask: bytes, p_mask: float, p_random: float,
                         vocab_size: int) -> list[int]:
        """Per-position code: 0 unmasked, MASK_CODE, KEEP_CODE, or 1 + vocab index."""
        threshold = p_mask + p_random
        codes = [0] * len(mask)
        for i, bit in enumerate(mask):
            if not bit:
                continue
            u = self.random()
            if u < p_mask:
                codes[i] = MASK_CODE
            elif u < threshold:
                codes[i] = 1 + self.below(vocab_size)
            else:
                codes[i] = KEEP_CODE
        return codes

    def corrupt(self, texts, mask: bytes, p_mask: float, p_random: float,
                vocab, mask_token: str) -> tuple[list[str], list]:
        """Apply mask/random/keep to ``texts`` at set bits of ``mask``.

        Returns (corrupted tokens, labels) with ``None`` labels at unmasked positions.
        """
        threshold = p_mask + p_random
        n_vocab = len(vocab)
        corrupted = list(texts)
        if len(corrupted) != len(mask):
            raise ValueError("mask and token lengths differ")
        labels: list = [None] * len(corrupted)
        for i, bit in enumerate(mask):
            if not bit:
                continue
            original = corrupted[i]
            labels[i] = original
            u = self.random()
            if u < p_mask:
                corrupted[i] = mask_token
            elif u < threshold:
                corrupted[i] = vocab[self.below(n_vocab)]
        return corrupted, labels


def expand_groups(n: int, groups, draws: bytes) -> bytes:
    bits = bytearray(n)
    for group, bit in zip(groups, draws):
        if bit:
            for i in group:
                bits[i] = 1
    return bytes(bits)
