# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled random stream and masking kernels.

Draw-for-draw twin of ``_purepy``; keep both in sync.
"""

from libc.stdint cimport uint64_t
from cpython.bytes cimport PyBytes_FromStringAndSize, PyBytes_AS_STRING

MASK_CODE = -1
KEEP_CODE = -2

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _TWO_POW_M53 = 1.0 / 9007199254740992.0


cdef class RandomStream:
    """SplitMix64 generator (compiled)."""

    cdef uint64_t _state

    def __init__(self, seed):
        self._state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)

    @property
    def state(self):
        return self._state

    cdef inline uint64_t _next(self) noexcept:
        cdef uint64_t z
        self._state += _GOLDEN
        z = self._state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
        return z ^ (z >> 31)

    cdef inline double _random(self) noexcept:
        return <double>(self._next() >> 11) * _TWO_POW_M53

    cdef inline Py_ssize_t _below(self, Py_ssize_t n) noexcept:
        return <Py_ssize_t>(self._random() * <double>n)

    def next_u64(self):
        return self._next()

    def random(self):
        return self._random()

    def below(self, Py_ssize_t n):
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self._below(n)

    def bernoulli(self, Py_ssize_t n, double p):
        cdef bytes out = PyBytes_FromStringAndSize(NULL, n)
        cdef char* buf = PyBytes_AS_STRING(out)
        cdef Py_ssize_t i
        for i in range(n):
            buf[i] = 1 if self._random() < p else 0
        return out

    cdef inline int _truncgeom(self, double[::1] cdf) noexcept:
        cdef double u = self._random()
        cdef Py_ssize_t k = 0
        cdef Py_ssize_t last = cdf.shape[0] - 1
        while k < last and u >= cdf[k]:
            k += 1
        return <int>(k + 1)

    def truncated_geometric(self, cdf):
        cdef double[::1] table = _as_table(cdf)
        return self._truncgeom(table)

    def sample_indices(self, Py_ssize_t k, Py_ssize_t n):
        if not 0 <= k <= n:
            raise ValueError("sample size out of range")
        pool = list(range(n))
        cdef Py_ssize_t i, j
        for i in range(k):
            j = i + self._below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def span_fill(self, Py_ssize_t n, double p, cdf):
        cdef double[::1] table = _as_table(cdf)
        cdef bytes out = PyBytes_FromStringAndSize(NULL, n)
        cdef char* buf = PyBytes_AS_STRING(out)
        cdef Py_ssize_t i, start, end, count = 0
        cdef int length
        lengths = []
        for i in range(n):
            buf[i] = 0
        if n == 0:
            return out, lengths
        while <double>count / <double>n < p:
            start = self._below(n)
            length = self._truncgeom(table)
            lengths.append(length)
            end = start + length
            if end > n:
                end = n
            for i in range(start, end):
                if not buf[i]:
                    buf[i] = 1
                    count += 1
        return out, lengths

    def corruption_codes(self, const unsigned char[::1] mask, double p_mask,
                         double p_random, Py_ssize_t vocab_size):
        cdef double threshold = p_mask + p_random
        cdef double u
        cdef Py_ssize_t i, n = mask.shape[0]
        codes = [0] * n
        for i in range(n):
            if not mask[i]:
                continue
            u = self._random()
            if u < p_mask:
                codes[i] = MASK_CODE
            elif u < threshold:
                codes[i] = 1 + self._below(vocab_size)
            else:
                codes[i] = KEEP_CODE
        return codes

    def corrupt(self, texts, const unsigned char[::1] mask, double p_mask,
                double p_random, vocab, mask_token):
        cdef double threshold = p_mask + p_random
        cdef double u
        cdef Py_ssize_t i, n = mask.shape[0]
        cdef Py_ssize_t n_vocab = len(vocab)
        cdef list corrupted = list(texts)
        cdef list labels = [None] * n
        if len(corrupted) != n:
            raise ValueError("mask and token lengths differ")
        for i in range(n):
            if not mask[i]:
                continue
            labels[i] = corrupted[i]
            u = self._random()
            if u < p_mask:
                corrupted[i] = mask_token
            elif u < threshold:
                corrupted[i] = vocab[self._below(n_vocab)]
        return corrupted, labels


cdef double[::1] _as_table(cdf):
    import array
    if isinstance(cdf, array.array) and cdf.typecode == "d":
        return cdf
    return array.array("d", cdf)


def expand_groups(Py_ssize_t n, groups, const unsigned char[::1] draws):
    cdef bytes out = PyBytes_FromStringAndSize(NULL, n)
    cdef char* buf = PyBytes_AS_STRING(out)
    cdef Py_ssize_t i, g = 0
    for i in range(n):
        buf[i] = 0
    for group in groups:
        if draws[g]:
            for i in group:
                buf[i] = 1
        g += 1
    return out
