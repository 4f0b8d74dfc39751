"""Random codebooks of typical words and their bookkeeping statistics.

Codewords are drawn i.i.d. from p0 and redrawn until strongly typical; word w
uses an independent substream derived from (seed, w), so generation is
reproducible, order-independent, and parallel-safe, and the first words of a
codebook do not change when the rate grows.

The number of codewords is 2**floor(n*R): the realized rate log2(M)/n is
reported alongside the nominal R, and the deviation threshold of the
typical-codebook test uses the realized rate, consistent with treating the
word count as an exact integer.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .channel import Alphabet, Dmc, Pmf, Sequence
from .errors import CapExceeded, ConfigError, EmptyTypicalSet
from . import typicality as typ
from .typicality import exp2

EXPLICIT_CODEBOOK_CAP = 2**22
REJECTION_CAP = 10**6

_MAGIC = b"AEPC"
_VERSION = 1
_HEADER = struct.Struct("<4sHHIdQ")

__all__ = [
    "EXPLICIT_CODEBOOK_CAP",
    "REJECTION_CAP",
    "Codebook",
    "CodebookStats",
    "generate_codebook",
    "count_in_F",
    "sup_deviation",
    "is_typical_codebook",
    "is_regular_codebook",
    "input_entropy_rate",
    "serialize",
    "deserialize",
]


@dataclass(frozen=True)
class Codebook:
    alphabet: Alphabet
    n: int
    rate: float  # nominal R
    words: np.ndarray  # (num_words, n) uint8 symbol indices
    epsilon: float
    seed: int

    def __post_init__(self):
        w = np.asarray(self.words, dtype=np.uint8)
        object.__setattr__(self, "words", w)
        if w.ndim != 2 or w.shape[1] != self.n:
            raise ConfigError("codeword array shape does not match block length")

    @property
    def num_words(self) -> int:
        return int(self.words.shape[0])

    @property
    def realized_rate(self) -> float:
        return math.log2(self.num_words) / self.n

    def word(self, w: int) -> Sequence:
        return Sequence(self.alphabet, self.words[w].astype(np.int64))

    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """(distinct words, multiplicities) in lexicographic order."""
        uniq, counts = np.unique(self.words, axis=0, return_counts=True)
        return uniq, counts


@dataclass(frozen=True)
class CodebookStats:
    sup_deviation: float
    threshold: float  # n^3 * R / 2^(nR) with the realized rate
    is_typical: bool
    is_regular: bool
    duplicate_count: int
    all_words_typical: bool


def _draw_until_typical(rng, n, cdf, lo, hi, k) -> np.ndarray:
    for _ in range(REJECTION_CAP):
        u = rng.random(n)
        sym = np.searchsorted(cdf, u, side="right")
        counts = np.bincount(sym, minlength=k)
        if np.all(counts >= lo) and np.all(counts <= hi):
            return sym.astype(np.uint8)
    raise CapExceeded(f"rejection cap {REJECTION_CAP} exceeded while drawing a typical word")


def generate_codebook(p0: Pmf, n: int, rate: float, eps: float, seed: int) -> Codebook:
    """2**floor(n*rate) words drawn i.i.d. from p0, rejected until typical."""
    if n < 1:
        raise ConfigError("block length must be at least 1")
    if rate < 0:
        raise ConfigError("rate must be nonnegative")
    h0x = p0.entropy()
    if h0x > 0 and rate >= h0x:
        raise ConfigError(f"rate {rate} must be below H0(X) = {h0x:.6f}")
    num_words = 2 ** int(math.floor(n * rate + 1e-12))
    if num_words > EXPLICIT_CODEBOOK_CAP:
        raise CapExceeded(f"codebook size {num_words} exceeds cap {EXPLICIT_CODEBOOK_CAP}")
    if p0.alphabet.size > 256:
        raise CapExceeded("alphabets beyond 256 symbols are not supported")

    windows = typ.strong_windows(n, p0.probs, eps)
    if windows is None:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    lo = np.array([w[0] for w in windows])
    hi = np.array([w[1] for w in windows])
    # per-symbol windows may each be nonempty while no composition sums to n
    if not int(lo.sum()) <= n <= int(hi.sum()):
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    cdf = np.cumsum(p0.probs)
    cdf[-1] = 1.0
    k = p0.alphabet.size

    words = np.empty((num_words, n), dtype=np.uint8)
    for w in range(num_words):
        rng = np.random.default_rng((seed, w))
        words[w] = _draw_until_typical(rng, n, cdf, lo, hi, k)
    return Codebook(p0.alphabet, n, rate, words, eps, seed)


def _pair_count_tensor(words: np.ndarray, y: np.ndarray, kx: int, ky: int) -> np.ndarray:
    """K[w, a, b] = pair counts of (words[w], y), vectorized over words."""
    m = words.shape[0]
    out = np.zeros((m, kx, ky), dtype=np.int64)
    for a in range(kx):
        wa = words == a
        for b in range(ky):
            out[:, a, b] = np.count_nonzero(wa & (y == b), axis=1)
    return out


def _in_F_mask(words: np.ndarray, y: Sequence, ch: Dmc, p0: Pmf, eps: float) -> np.ndarray:
    """Vectorized F-membership of each word for a fixed output sequence."""
    n = y.n
    kx, ky = ch.input.size, ch.output.size
    kmat = _pair_count_tensor(words, y.symbols, kx, ky)
    rows = kmat.sum(axis=2)
    ok = np.ones(words.shape[0], dtype=bool)
    for a in range(kx):
        p = p0.probs[a]
        if p == 0.0:
            ok &= rows[:, a] == 0
        else:
            ok &= np.abs(rows[:, a] / n - p) < eps / kx
    thr = eps * (1.0 + 1.0 / ky)
    for a in range(kx):
        for b in range(ky):
            p = ch.transition[a, b]
            if p == 0.0:
                ok &= kmat[:, a, b] == 0
            else:
                ok &= np.abs(kmat[:, a, b] - p * rows[:, a]) / n <= thr
    return ok


def count_in_F(cb: Codebook, y: Sequence, ch: Dmc, p0: Pmf, eps: float) -> int:
    """Number of codewords, with multiplicity, inside F(y)."""
    if y.n != cb.n:
        raise ConfigError(f"length mismatch: {y.n} vs {cb.n}")
    return int(_in_F_mask(cb.words, y, ch, p0, eps).sum())


def _typical_output_reps(ch: Dmc, p0: Pmf, n: int, eps: float) -> list[Sequence]:
    """One lexicographically-least representative per typical output class."""
    p0y = ch.output_pmf(p0)
    classes, _ = typ.typical_type_classes(p0y, typ.TypicalityParams(eps, n))
    reps = []
    for cls in classes:
        sym = np.repeat(np.arange(len(cls.counts)), cls.counts)
        reps.append(Sequence(ch.output, sym))
    return reps


def sup_deviation(cb: Codebook, ch: Dmc, p0: Pmf, eps: float) -> float:
    """Largest |N(i|C)/M - P(i)| over typical-output class representatives.

    P(i) is a function of the output type alone; N(i|C) against a fixed
    codebook is evaluated at the lexicographically-least member of each
    class, making this a representative-based statistic.
    """
    best = 0.0
    m = cb.num_words
    for rep in _typical_output_reps(ch, p0, cb.n, eps):
        count = count_in_F(cb, rep, ch, p0, eps)
        p = typ.prob_F(rep, ch, p0, eps)
        best = max(best, abs(count / m - p))
    return best


def _deviation_threshold(cb: Codebook) -> float:
    # n^3 * R / 2^(n R) evaluated with the realized rate log2(M)/n
    return cb.n**3 * cb.realized_rate / cb.num_words


def _all_words_typical(cb: Codebook, p0: Pmf, eps: float) -> bool:
    windows = typ.strong_windows(cb.n, p0.probs, eps)
    if windows is None:
        return False
    lo = np.array([w[0] for w in windows])
    hi = np.array([w[1] for w in windows])
    counts = np.stack([np.count_nonzero(cb.words == a, axis=1) for a in range(p0.alphabet.size)], axis=1)
    return bool(np.all((counts >= lo) & (counts <= hi)))


def is_typical_codebook(cb: Codebook, ch: Dmc, p0: Pmf, eps: float) -> CodebookStats:
    """Both typical-codebook conditions, plus the regular test and duplicates."""
    words_ok = _all_words_typical(cb, p0, eps)
    dev = sup_deviation(cb, ch, p0, eps)
    thr = _deviation_threshold(cb)
    _, mult = cb.distinct()
    dup = int(cb.num_words - mult.size)
    regular = is_regular_codebook(cb, p0, eps)
    return CodebookStats(
        sup_deviation=dev,
        threshold=thr,
        is_typical=bool(words_ok and dev <= thr),
        is_regular=regular,
        duplicate_count=dup,
        all_words_typical=words_ok,
    )


def is_regular_codebook(cb: Codebook, p0: Pmf, eps: float) -> bool:
    """Empirical word frequencies track the typicality-conditioned i.i.d. law.

    The supremum over typical sequences is evaluated exactly: sequences
    present in the codebook contribute |N(x|C)/M - p(x)|; absent sequences
    contribute p(x), whose maximum over each typical class is attained
    whenever the class is not fully covered by the codebook.
    """
    n = cb.n
    denom = typ.prob_typical_set(p0, n, eps)
    if denom == 0.0:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    classes, _ = typ.typical_type_classes(p0, typ.TypicalityParams(eps, n))
    logp0 = np.where(p0.probs > 0, np.log2(np.maximum(p0.probs, 1e-300)), 0.0)
    thr = _deviation_threshold(cb)
    m = cb.num_words

    def seq_prob(counts) -> float:
        lp = 0.0
        for a, c in enumerate(counts):
            if c:
                lp += c * logp0[a]
        return exp2(lp) / denom

    uniq, mult = cb.distinct()
    windows = typ.strong_windows(n, p0.probs, eps)
    lo = np.array([w[0] for w in windows])
    hi = np.array([w[1] for w in windows])
    sup = 0.0
    present_by_class: dict[tuple[int, ...], int] = {}
    for row, c in zip(uniq, mult):
        counts = np.bincount(row, minlength=p0.alphabet.size)
        if np.all(counts >= lo) and np.all(counts <= hi):
            sup = max(sup, abs(c / m - seq_prob(counts)))
            key = tuple(int(v) for v in counts)
            present_by_class[key] = present_by_class.get(key, 0) + 1
    for cls in classes:
        size = typ.exact_multinomial(n, cls.counts)
        if present_by_class.get(cls.counts, 0) < size:
            sup = max(sup, seq_prob(cls.counts))
    return sup <= thr


def input_entropy_rate(cb: Codebook) -> float:
    """(1/n) H(X^n | C = cb) for the uniform message index, duplicates merged."""
    _, mult = cb.distinct()
    p = mult / cb.num_words
    h = float(-np.sum(p * np.log2(p)))
    return h / cb.n


# ---------------------------------------------------------------------------
# binary codebook file (magic "AEPC")
# ---------------------------------------------------------------------------


def _bits_per_symbol(alphabet_size: int) -> int:
    return max(0, (alphabet_size - 1).bit_length())


def serialize(cb: Codebook) -> bytes:
    """Header + packed symbol indices, little-endian bit order, zero padding."""
    header = _HEADER.pack(_MAGIC, _VERSION, cb.n, cb.num_words, cb.epsilon, cb.seed)
    bps = _bits_per_symbol(cb.alphabet.size)
    if bps == 0:
        return header
    flat = cb.words.reshape(-1).astype(np.uint8)
    bits = np.zeros(flat.size * bps, dtype=np.uint8)
    for j in range(bps):
        bits[j::bps] = (flat >> j) & 1
    return header + np.packbits(bits, bitorder="little").tobytes()


def deserialize(data: bytes, alphabet: Alphabet, rate: float | None = None) -> Codebook:
    """Inverse of serialize; the alphabet comes from the channel context."""
    if len(data) < _HEADER.size:
        raise ConfigError("codebook file truncated: header incomplete")
    magic, version, n, num_words, epsilon, seed = _HEADER.unpack(data[: _HEADER.size])
    if magic != _MAGIC:
        raise ConfigError(f"bad magic {magic!r}; not a codebook file")
    if version != _VERSION:
        raise ConfigError(f"unsupported codebook file version {version}")
    bps = _bits_per_symbol(alphabet.size)
    nbits = num_words * n * bps
    expected = _HEADER.size + (nbits + 7) // 8
    if len(data) < expected:
        raise ConfigError("codebook file truncated: payload incomplete")
    if len(data) > expected:
        raise ConfigError("codebook file has trailing data")
    if bps == 0:
        words = np.zeros((num_words, n), dtype=np.uint8)
    else:
        bits = np.unpackbits(
            np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size), bitorder="little"
        )
        if np.any(bits[nbits:]):
            raise ConfigError("codebook file has nonzero padding bits")
        bits = bits[:nbits].reshape(-1, bps)
        flat = np.zeros(bits.shape[0], dtype=np.int64)
        for j in range(bps):
            flat |= bits[:, j].astype(np.int64) << j
        if flat.size and int(flat.max()) >= alphabet.size:
            raise ConfigError("symbol index outside alphabet in codebook file")
        words = flat.astype(np.uint8).reshape(num_words, n)
    realized = math.log2(num_words) / n if num_words else 0.0
    return Codebook(alphabet, n, rate if rate is not None else realized, words, epsilon, seed)
