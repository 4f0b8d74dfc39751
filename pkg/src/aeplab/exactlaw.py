"""Exact output-sequence laws for an explicit codebook.

Everything here enumerates the full output space |Y|^n (capped at 2^22
sequences) and is exact to float accumulation error.  Sequences are packed
big-endian into integer codes so that numeric order equals lexicographic
order; all reductions run in a fixed order so results are bit-stable
regardless of caller parallelism.

The product law q(y) = mean_w prod_i p(y_i | x_w,i) is assembled by splitting
positions into two halves: per distinct first-half pattern d the law factors
as u_d (x) v, so Q = U^T V with one small contraction instead of M * |Y|^n
work.  The same split powers the exact maximum-likelihood error via a
max-product contraction.
"""

from __future__ import annotations

import numpy as np

from .channel import Dmc
from .codebook import Codebook
from .errors import CapExceeded

CAP_OUTPUT_ENUM = 2**22
CAP_LAW_WORK = 2**26  # num_words * |Y|^(n - n//2) elements held at once

__all__ = [
    "CAP_OUTPUT_ENUM",
    "CAP_LAW_WORK",
    "all_sequences",
    "code_symbol_counts",
    "output_law_given_codebook",
    "ml_correct_mass",
    "entropy_bits_of_law",
]


def _check_enum(radix: int, n: int) -> int:
    total = radix**n
    if total > CAP_OUTPUT_ENUM:
        raise CapExceeded(f"output enumeration {radix}^{n} exceeds cap 2^22")
    return total


def all_sequences(radix: int, n: int) -> np.ndarray:
    """(radix^n, n) array of every sequence, in lexicographic order."""
    total = _check_enum(radix, n)
    out = np.empty((total, n), dtype=np.int8)
    c = np.arange(total, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        out[:, i] = c % radix
        c //= radix
    return out


def code_symbol_counts(radix: int, n: int) -> np.ndarray:
    """(radix^n, radix) symbol-count matrix indexed by packed code."""
    total = _check_enum(radix, n)
    counts = np.zeros((total, radix), dtype=np.int16)
    c = np.arange(total, dtype=np.int64)
    for _ in range(n):
        d = c % radix
        for s in range(radix):
            counts[:, s] += d == s
        c //= radix
    return counts


def _half_products(words_half: np.ndarray, trans: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Per-word product vectors prod_i T[x_i, y_i] over all half-outputs."""
    m, h = words_half.shape
    radix = trans.shape[1]
    out = np.empty((m, radix**h), dtype=np.float64)
    for start in range(0, m, chunk):
        block = words_half[start : start + chunk]
        acc = np.ones((block.shape[0], 1), dtype=np.float64)
        for j in range(h):
            rows = trans[block[:, j].astype(np.int64)]  # (b, radix)
            acc = (acc[:, :, None] * rows[:, None, :]).reshape(block.shape[0], -1)
        out[start : start + chunk] = acc
    return out


def _split_factors(cb: Codebook, ch: Dmc) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """(U, V_all, group index, h): first-half factor per distinct pattern."""
    n = cb.n
    radix = ch.output.size
    _check_enum(radix, n)
    h = n // 2
    if cb.num_words * radix ** (n - h) > CAP_LAW_WORK:
        raise CapExceeded("codebook output-law work exceeds cap")
    uniq, inverse = np.unique(cb.words[:, :h], axis=0, return_inverse=True)
    u = _half_products(uniq, ch.transition)
    v = _half_products(cb.words[:, h:], ch.transition)
    return u, v, inverse.astype(np.int64), h


def output_law_given_codebook(cb: Codebook, ch: Dmc) -> np.ndarray:
    """q over packed output codes: q(y) = (1/M) sum_w p(y | x_w). Sums to 1."""
    u, v, inverse, h = _split_factors(cb, ch)
    radix = ch.output.size
    n = cb.n
    d = u.shape[0]
    v_grouped = np.zeros((d, radix ** (n - h)), dtype=np.float64)
    np.add.at(v_grouped, inverse, v)
    # einsum with optimize=False keeps the reduction order fixed (no BLAS dispatch)
    q = np.einsum("dh,dl->hl", u, v_grouped, optimize=False)
    return q.reshape(-1) / cb.num_words


def ml_correct_mass(cb: Codebook, ch: Dmc) -> float:
    """(1/M) sum_y max_w p(y | x_w): success probability of the ML decoder.

    The tie rule (smallest message index) does not change this value, because
    the decoded word's likelihood equals the maximum either way.
    """
    u, v, inverse, h = _split_factors(cb, ch)
    radix = ch.output.size
    n = cb.n
    d = u.shape[0]
    l = radix ** (n - h)
    v_max = np.zeros((d, l), dtype=np.float64)
    np.maximum.at(v_max, inverse, v)
    total = 0.0
    for ya in range(u.shape[1]):
        cand = u[:, ya][:, None] * v_max  # (d, l)
        total += float(cand.max(axis=0).sum())
    return total / cb.num_words


def entropy_bits_of_law(q: np.ndarray) -> float:
    nz = q[q > 0]
    return float(-np.sum(nz * np.log2(nz)))
