"""Lossless block compression of the channel output, with and without the
source codebook.

Scenario (a) is a flag + enumerative-index coder over the typical output set:
typical blocks carry their lexicographic rank, anything else escapes to raw
symbols, so the coder is lossless at every block length with a one-bit-per-
block overhead.  Scenario (b) is the optimal fixed-rate codebook-aware
benchmark: it ranks output sequences by their exact codebook-conditional
probability (ties lexicographic) and covers the most probable 2^floor(n*R2).

Ranks, set sizes, and payload widths use exact integer arithmetic.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import exactlaw
from . import typicality as typ
from .channel import Dmc, Pmf, Sequence, single_letter_stats
from .codebook import Codebook
from .errors import ConfigError, EmptyTypicalSet
from .report import ExperimentReport

_MAGIC = b"AEPZ"
_VERSION = 1
_HEADER = struct.Struct("<4sHHdI")

__all__ = [
    "CompressedBlock",
    "CoderReport",
    "TypicalSetCoder",
    "FixedRateCoder",
    "scenario_a_rate",
    "scenario_b_coder",
    "compare_scenarios",
    "encode_stream",
    "decode_stream",
]


@dataclass(frozen=True)
class CompressedBlock:
    """flag 0: enumerative index of a typical block; flag 1: raw symbols."""

    flag: int
    payload: int
    width: int


@dataclass(frozen=True)
class CoderReport:
    rate: float
    error_rate: float
    trials: int


class _BitWriter:
    def __init__(self):
        self.bits: list[int] = []

    def write(self, value: int, width: int):
        for j in range(width):
            self.bits.append((value >> j) & 1)

    def to_bytes(self) -> bytes:
        if not self.bits:
            return b""
        return np.packbits(np.array(self.bits, dtype=np.uint8), bitorder="little").tobytes()


class _BitReader:
    def __init__(self, data: bytes):
        if data:
            self.bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        else:
            self.bits = np.zeros(0, dtype=np.uint8)
        self.pos = 0

    def read(self, width: int) -> int:
        if self.pos + width > self.bits.size:
            raise ConfigError("compressed stream truncated")
        value = 0
        for j in range(width):
            value |= int(self.bits[self.pos + j]) << j
        self.pos += width
        return value

    def padding_clean(self) -> bool:
        return not np.any(self.bits[self.pos :])


class TypicalSetCoder:
    """Enumerative coder for the typical set of p0y at block length n.

    Typical blocks cost 1 + ceil(log2 M) bits; escapes cost 1 + n*ceil(log2 |Y|).
    """

    def __init__(self, p0y: Pmf, n: int, eps: float):
        self.p0y = p0y
        self.n = n
        self.eps = eps
        self.alphabet = p0y.alphabet
        classes, _ = typ.typical_type_classes(p0y, typ.TypicalityParams(eps, n))
        if not classes:
            raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
        self._class_counts = [np.array(c.counts, dtype=np.int64) for c in classes]
        self.set_size = sum(typ.exact_multinomial(n, c.counts) for c in classes)
        self.index_bits = (self.set_size - 1).bit_length() if self.set_size > 1 else 0
        self.raw_bits = n * max(0, (self.alphabet.size - 1).bit_length())
        self._completions_memo: dict[tuple[int, ...], int] = {}

    def _completions(self, used: tuple[int, ...]) -> int:
        """Number of typical completions of a prefix with the given counts."""
        memo = self._completions_memo
        if used in memo:
            return memo[used]
        m = self.n - sum(used)
        total = 0
        u = np.array(used, dtype=np.int64)
        for c in self._class_counts:
            d = c - u
            if np.all(d >= 0):
                total += typ.exact_multinomial(m, tuple(int(v) for v in d))
        memo[used] = total
        return total

    def rank(self, y: Sequence) -> int:
        """Lexicographic rank of a typical block within the typical set."""
        used = [0] * self.alphabet.size
        r = 0
        for i in range(self.n):
            s = int(y.symbols[i])
            for smaller in range(s):
                used[smaller] += 1
                r += self._completions(tuple(used))
                used[smaller] -= 1
            used[s] += 1
        return r

    def unrank(self, r: int) -> Sequence:
        if not 0 <= r < self.set_size:
            raise ConfigError(f"typical-set index {r} out of range")
        used = [0] * self.alphabet.size
        out = np.empty(self.n, dtype=np.int64)
        for i in range(self.n):
            for s in range(self.alphabet.size):
                used[s] += 1
                c = self._completions(tuple(used))
                if r < c:
                    out[i] = s
                    break
                r -= c
                used[s] -= 1
            else:
                raise ConfigError("malformed typical-set index")
        return Sequence(self.alphabet, out)

    def encode_block(self, y: Sequence) -> CompressedBlock:
        if y.n != self.n or y.alphabet != self.alphabet:
            raise ConfigError("block does not match coder alphabet/length")
        if typ.is_strongly_typical(y, self.p0y, self.eps):
            return CompressedBlock(0, self.rank(y), self.index_bits)
        raw = 0
        bps = max(0, (self.alphabet.size - 1).bit_length())
        for i, s in enumerate(y.symbols):
            raw |= int(s) << (i * bps)
        return CompressedBlock(1, raw, self.raw_bits)

    def decode_block(self, block: CompressedBlock) -> Sequence:
        if block.flag == 0:
            if block.width != self.index_bits:
                raise ConfigError("malformed block: wrong index width")
            return self.unrank(block.payload)
        if block.flag != 1:
            raise ConfigError("malformed block: bad flag")
        if block.width != self.raw_bits:
            raise ConfigError("malformed block: wrong raw width")
        bps = max(0, (self.alphabet.size - 1).bit_length())
        out = np.empty(self.n, dtype=np.int64)
        for i in range(self.n):
            s = (block.payload >> (i * bps)) & ((1 << bps) - 1) if bps else 0
            if s >= self.alphabet.size:
                raise ConfigError("malformed block: symbol outside alphabet")
            out[i] = s
        return Sequence(self.alphabet, out)


def scenario_a_rate(n: int, eps: float, p0y: Pmf) -> float:
    """(1 + ceil(log2 M)) / n: the typical-path rate of the flag+index coder."""
    coder = TypicalSetCoder(p0y, n, eps)
    return (1 + coder.index_bits) / n


class FixedRateCoder:
    """Most-probable-set fixed-rate coder for p(y | cb): the optimal benchmark.

    Indices address the 2^floor(n*R2) most probable output sequences (ties
    broken lexicographically); uncovered inputs map to index 0, so the index
    alphabet never exceeds the budget and decoding failure shows up as error
    mass 1 - (covered probability).
    """

    def __init__(self, cb: Codebook, ch: Dmc, rate2: float):
        if rate2 < 0:
            raise ConfigError("R2 must be nonnegative")
        self.n = cb.n
        self.alphabet = ch.output
        q = exactlaw.output_law_given_codebook(cb, ch)
        budget = min(2 ** int(math.floor(cb.n * rate2 + 1e-12)), q.size)
        order = np.argsort(-q, kind="stable")
        self.covered_codes = order[:budget]
        self.error_rate = float(max(0.0, 1.0 - q[self.covered_codes].sum()))
        self.rate = int(math.floor(cb.n * rate2 + 1e-12)) / cb.n
        self._code_to_index = {int(c): i for i, c in enumerate(self.covered_codes)}

    def encode(self, y: Sequence) -> int:
        code = 0
        radix = self.alphabet.size
        for s in y.symbols:
            code = code * radix + int(s)
        return self._code_to_index.get(code, 0)

    def decode(self, index: int) -> Sequence:
        if not 0 <= index < len(self.covered_codes):
            raise ConfigError("index outside coder budget")
        code = int(self.covered_codes[index])
        radix = self.alphabet.size
        out = np.empty(self.n, dtype=np.int64)
        for i in range(self.n - 1, -1, -1):
            out[i] = code % radix
            code //= radix
        return Sequence(self.alphabet, out)

    def report(self) -> CoderReport:
        return CoderReport(rate=self.rate, error_rate=self.error_rate, trials=0)


def scenario_b_coder(cb: Codebook, ch: Dmc, rate2: float) -> FixedRateCoder:
    return FixedRateCoder(cb, ch, rate2)


def compare_scenarios(cfg) -> ExperimentReport:
    """Scenario (a) rate and exact scenario (b) error per block length.

    Requires the source rate above I0(X;Y) — the regime where codebook
    knowledge stops helping the compressor.  Scenario (b) errors are averaged
    over the sampled codebooks at R2 = 0.8 H0(Y) and R2 = H0(Y) + 0.1.
    """
    from .experiments import _pmap, codebook_for

    stats = single_letter_stats(cfg.channel, cfg.p0)
    rate = cfg.rate
    if rate <= stats.i0_xy:
        raise ConfigError(
            f"source rate {rate} must exceed I0(X;Y) = {stats.i0_xy:.9f} "
            "for the scenario comparison"
        )
    p0y = cfg.channel.output_pmf(cfg.p0)
    h0y = stats.h0_y
    r2_low = 0.8 * h0y
    r2_high = h0y + 0.1
    report = ExperimentReport(
        name="relay_compare",
        columns=[
            "n",
            "scenario_a_rate",
            "a_rate_minus_h0y",
            "r2_low",
            "err_low_mean",
            "r2_high",
            "err_high_mean",
        ],
        metadata=cfg.metadata(r2_low=f"{r2_low:.12g}", r2_high=f"{r2_high:.12g}"),
    )
    for n in cfg.n_grid:
        a_rate = scenario_a_rate(n, cfg.epsilon, p0y)

        def job(idx: int):
            cb = codebook_for(cfg, rate, n, idx)
            q = exactlaw.output_law_given_codebook(cb, cfg.channel)
            order = np.argsort(-q, kind="stable")
            sorted_q = q[order]
            errs = []
            for r2 in (r2_low, r2_high):
                budget = min(2 ** int(math.floor(n * r2 + 1e-12)), q.size)
                errs.append(float(max(0.0, 1.0 - sorted_q[:budget].sum())))
            return errs

        results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
        err_low = sum(r[0] for r in results) / cfg.codebooks
        err_high = sum(r[1] for r in results) / cfg.codebooks
        report.add(n, a_rate, a_rate - h0y, r2_low, err_low, r2_high, err_high)
    return report


# ---------------------------------------------------------------------------
# compressed stream file (magic "AEPZ")
# ---------------------------------------------------------------------------


def encode_stream(ys: list[Sequence], p0y: Pmf, eps: float) -> bytes:
    """Header + concatenated flag/payload blocks, little-endian bit packing."""
    if not ys:
        raise ConfigError("cannot encode an empty block list")
    n = ys[0].n
    coder = TypicalSetCoder(p0y, n, eps)
    writer = _BitWriter()
    for y in ys:
        block = coder.encode_block(y)
        writer.write(block.flag, 1)
        writer.write(block.payload, block.width)
    header = _HEADER.pack(_MAGIC, _VERSION, n, eps, len(ys))
    return header + writer.to_bytes()


def decode_stream(data: bytes, p0y: Pmf) -> tuple[list[Sequence], float]:
    """Inverse of encode_stream; returns (blocks, epsilon from the header)."""
    if len(data) < _HEADER.size:
        raise ConfigError("compressed stream truncated: header incomplete")
    magic, version, n, eps, count = _HEADER.unpack(data[: _HEADER.size])
    if magic != _MAGIC:
        raise ConfigError(f"bad magic {magic!r}; not a compressed stream")
    if version != _VERSION:
        raise ConfigError(f"unsupported stream version {version}")
    coder = TypicalSetCoder(p0y, n, eps)
    reader = _BitReader(data[_HEADER.size :])
    out = []
    for _ in range(count):
        flag = reader.read(1)
        width = coder.index_bits if flag == 0 else coder.raw_bits
        payload = reader.read(width)
        out.append(coder.decode_block(CompressedBlock(flag, payload, width)))
    if not reader.padding_clean():
        raise ConfigError("compressed stream has nonzero padding bits")
    return out, eps
