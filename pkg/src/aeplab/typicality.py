"""Strong/joint/conditional/weak typicality and exact type-class probabilities.

The membership tests follow the working definitions exactly, including the
strict "<" for strong and joint typicality versus the non-strict "<=" for
conditional typicality; boundary behavior is part of the contract.

All set sizes and probabilities are computed over compositions (symbol-count
vectors) rather than individual sequences: every test implemented here depends
only on the (joint) type, so summing multinomial weights over the compositions
inside the typicality windows is exact.  Multinomial coefficients are handled
as log2 values via the log-gamma function; windows are derived by scanning
integer counts through the *same* float expressions the membership tests use,
so enumeration and membership can never disagree on a boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import gammaln

from .channel import Dmc, JointPmf, Pmf, Sequence, pair_counts, seq_log_prob
from .errors import ConfigError, EmptyTypicalSet

LN2 = math.log(2.0)


def exp2(v: float) -> float:
    return 2.0**v

__all__ = [
    "TypicalityParams",
    "TypeClass",
    "JointComposition",
    "TypicalClasses",
    "log2_multinomial",
    "exact_multinomial",
    "log2_sum_exp2",
    "is_strongly_typical",
    "is_jointly_typical",
    "is_cond_typical",
    "is_weakly_typical",
    "strong_windows",
    "cond_row_windows",
    "bounded_compositions",
    "contingency_tables",
    "typical_type_classes",
    "in_F",
    "joint_typicality_margin",
    "prob_F",
    "prob_typical_noise",
    "prob_typical_noise_of_type",
    "prob_typical_set",
    "cond_output_prob_given_E",
]


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float
    n: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.n < 1:
            raise ConfigError("block length must be at least 1")


@dataclass(frozen=True)
class TypeClass:
    """A composition of n together with the log2 of its multinomial size."""

    counts: tuple[int, ...]
    multiplicity: float

    @property
    def n(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class JointComposition:
    """Joint type {N(a, b)}; projections give the X- and Y-compositions."""

    counts: np.ndarray

    def x_counts(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def y_counts(self) -> np.ndarray:
        return self.counts.sum(axis=0)


class TypicalClasses(NamedTuple):
    classes: list[TypeClass]
    log2_size: float  # -inf when the window excludes every composition


_LGAMMA_CACHE: np.ndarray = gammaln(np.arange(1, 2)).astype(np.float64)


def _lgamma_table(n: int) -> np.ndarray:
    """log-gamma(i+1) for i = 0..n, cached and grown on demand."""
    global _LGAMMA_CACHE
    if _LGAMMA_CACHE.size <= n:
        _LGAMMA_CACHE = gammaln(np.arange(1.0, n + 2.0))
    return _LGAMMA_CACHE


def log2_multinomial(n: int, counts) -> float:
    """log2 of n! / prod(counts!) via log-gamma."""
    lg = _lgamma_table(n)
    total = lg[n]
    for c in counts:
        total -= lg[c]
    return float(total / LN2)


def exact_multinomial(n: int, counts) -> int:
    """Exact integer multinomial coefficient (arbitrary precision)."""
    result = 1
    remaining = n
    for c in counts:
        result *= math.comb(remaining, int(c))
        remaining -= int(c)
    return result


def log2_sum_exp2(values) -> float:
    """log2 of a sum of 2**v terms, stable in the log domain."""
    arr = [v for v in values if v != float("-inf")]
    if not arr:
        return float("-inf")
    m = max(arr)
    return m + math.log2(sum(exp2(v - m) for v in arr))


# ---------------------------------------------------------------------------
# membership tests
# ---------------------------------------------------------------------------


def _strong_ok(counts: np.ndarray, n: int, probs: np.ndarray, eps: float) -> bool:
    k = probs.size
    for a in range(k):
        p = probs[a]
        c = int(counts[a])
        if p == 0.0:
            if c != 0:
                return False
        elif not abs(c / n - p) < eps / k:
            return False
    return True


def is_strongly_typical(s: Sequence, p: Pmf, eps: float) -> bool:
    """Empirical law within eps/|alphabet| of p (strict), zero-mass symbols absent."""
    if s.alphabet != p.alphabet:
        raise ConfigError("sequence alphabet does not match pmf alphabet")
    return _strong_ok(s.counts(), s.n, p.probs, eps)


def is_jointly_typical(x: Sequence, y: Sequence, joint: JointPmf, eps: float) -> bool:
    """Pair counts within eps/(|X||Y|) of the joint law (strict), zero-mass pairs absent."""
    if x.n != y.n:
        raise ConfigError(f"length mismatch: {x.n} vs {y.n}")
    counts = pair_counts(x, y).matrix
    return _strong_ok(counts.ravel(), x.n, joint.probs.ravel(), eps)


def _cond_ok(counts: np.ndarray, n: int, trans: np.ndarray, thr: float) -> bool:
    rows = counts.sum(axis=1)
    kx, ky = trans.shape
    for a in range(kx):
        for b in range(ky):
            p = trans[a, b]
            c = int(counts[a, b])
            if p == 0.0:
                if c != 0:
                    return False
            elif not abs(c - p * rows[a]) / n <= thr:
                return False
    return True


def is_cond_typical(y: Sequence, x: Sequence, ch: Dmc, eps: float) -> bool:
    """Conditional typicality of y given x: pair counts track p(b|a) N(a|x).

    The deviation test is non-strict (<=), unlike the strong/joint tests.
    """
    if x.n != y.n:
        raise ConfigError(f"length mismatch: {x.n} vs {y.n}")
    if x.alphabet != ch.input or y.alphabet != ch.output:
        raise ConfigError("sequence alphabets do not match channel")
    counts = pair_counts(x, y).matrix
    thr = eps * (1.0 + 1.0 / ch.output.size)
    return _cond_ok(counts, x.n, ch.transition, thr)


def is_weakly_typical(s: Sequence, p: Pmf, eps: float) -> bool:
    """Sample entropy rate -log2(p(s))/n within eps of H(p) (strict)."""
    lp = seq_log_prob(s, p)
    if lp == float("-inf"):
        return False
    return abs(-lp / s.n - p.entropy()) < eps


# ---------------------------------------------------------------------------
# windows and composition enumeration
# ---------------------------------------------------------------------------


def strong_windows(n: int, probs: np.ndarray, eps: float) -> list[tuple[int, int]] | None:
    """Per-symbol allowed count ranges for the strong-typicality test.

    Returns inclusive (lo, hi) per symbol, or None if some symbol admits no
    count.  Ranges are found by scanning 0..n through the same expression
    as the membership test, so boundaries agree bit-for-bit.
    """
    k = probs.size
    out: list[tuple[int, int]] = []
    for a in range(k):
        p = float(probs[a])
        if p == 0.0:
            out.append((0, 0))
            continue
        ok = [c for c in range(n + 1) if abs(c / n - p) < eps / k]
        if not ok:
            return None
        out.append((ok[0], ok[-1]))
    return out


def cond_row_windows(
    r_a: int, trans_row: np.ndarray, n: int, eps: float, ny: int
) -> list[tuple[int, int]] | None:
    """Allowed per-output counts for one input symbol appearing r_a times."""
    thr = eps * (1.0 + 1.0 / ny)
    out: list[tuple[int, int]] = []
    for b in range(ny):
        p = float(trans_row[b])
        if p == 0.0:
            out.append((0, 0))
            continue
        ok = [c for c in range(r_a + 1) if abs(c - p * r_a) / n <= thr]
        if not ok:
            return None
        out.append((ok[0], ok[-1]))
    return out


def bounded_compositions(total: int, bounds: list[tuple[int, int]]) -> Iterator[tuple[int, ...]]:
    """All integer vectors within per-part inclusive bounds summing to total."""
    k = len(bounds)
    min_suffix = [0] * (k + 1)
    max_suffix = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        min_suffix[i] = min_suffix[i + 1] + bounds[i][0]
        max_suffix[i] = max_suffix[i + 1] + bounds[i][1]
    vec = [0] * k

    def rec(i: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if i == k:
            if remaining == 0:
                yield tuple(vec)
            return
        lo = max(bounds[i][0], remaining - max_suffix[i + 1])
        hi = min(bounds[i][1], remaining - min_suffix[i + 1])
        for c in range(lo, hi + 1):
            vec[i] = c
            yield from rec(i + 1, remaining - c)

    yield from rec(0, total)


def contingency_tables(
    row_sums: list[int],
    col_sums: list[int],
    cell_bounds: list[list[tuple[int, int]]] | None = None,
) -> Iterator[np.ndarray]:
    """All nonnegative integer matrices with the given margins.

    cell_bounds, when given, restricts each entry to an inclusive range;
    used to thread typicality windows through the enumeration.
    """
    kx, ky = len(row_sums), len(col_sums)
    if sum(row_sums) != sum(col_sums):
        return
    mat = np.zeros((kx, ky), dtype=np.int64)
    col_rem = list(col_sums)

    def rec(a: int) -> Iterator[np.ndarray]:
        if a == kx:
            yield mat.copy()
            return
        bounds = []
        for b in range(ky):
            lo, hi = 0, min(row_sums[a], col_rem[b])
            if cell_bounds is not None:
                lo = max(lo, cell_bounds[a][b][0])
                hi = min(hi, cell_bounds[a][b][1])
            if a == kx - 1:
                # last row is forced to close the column sums
                lo = max(lo, col_rem[b])
                hi = min(hi, col_rem[b])
            bounds.append((lo, hi))
        for row in bounded_compositions(row_sums[a], bounds):
            mat[a, :] = row
            for b in range(ky):
                col_rem[b] -= row[b]
            yield from rec(a + 1)
            for b in range(ky):
                col_rem[b] += row[b]

    yield from rec(0)


def typical_type_classes(p: Pmf, params: TypicalityParams) -> TypicalClasses:
    """Compositions whose sequences pass the strong-typicality test, with sizes.

    Classes come back in lexicographic count order.  An empty result is not an
    error; it is flagged by an empty list and log2_size = -inf.
    """
    n = params.n
    windows = strong_windows(n, p.probs, params.epsilon)
    classes: list[TypeClass] = []
    if windows is not None:
        for counts in bounded_compositions(n, windows):
            classes.append(TypeClass(counts, log2_multinomial(n, counts)))
    log2_size = log2_sum_exp2(c.multiplicity for c in classes)
    return TypicalClasses(classes, log2_size)


# ---------------------------------------------------------------------------
# the F set and the exact probability functionals
# ---------------------------------------------------------------------------


def in_F(x: Sequence, y: Sequence, ch: Dmc, p0: Pmf, eps: float) -> bool:
    """x is strongly typical and can reach y under typical channel noise."""
    return is_strongly_typical(x, p0, eps) and is_cond_typical(y, x, ch, eps)


def joint_typicality_margin(x: Sequence, y: Sequence, joint: JointPmf) -> float:
    """Smallest threshold at which (x, y) passes the joint test.

    Returns the max over positive-mass pairs of |N(a,b)/n - p(a,b)| scaled by
    |X||Y|; the pair is eps-jointly typical exactly when eps exceeds this
    margin (strictly).  Infinite when a zero-mass pair occurs.  This is the
    measured counterpart of the inflated threshold under which pairs accepted
    by the marginal+conditional tests are jointly typical.
    """
    if x.n != y.n:
        raise ConfigError(f"length mismatch: {x.n} vs {y.n}")
    n = x.n
    counts = pair_counts(x, y).matrix
    kx, ky = joint.probs.shape
    margin = 0.0
    for a in range(kx):
        for b in range(ky):
            p = joint.probs[a, b]
            c = int(counts[a, b])
            if p == 0.0:
                if c != 0:
                    return float("inf")
            else:
                margin = max(margin, abs(c / n - p) * kx * ky)
    return margin


def prob_typical_set(p: Pmf, n: int, eps: float) -> float:
    """Pr(X~ in A(X)) for X~ i.i.d. p: the rejection-sampling acceptance rate."""
    windows = strong_windows(n, p.probs, eps)
    if windows is None:
        return 0.0
    logp = _safe_log2(p.probs)
    total = 0.0
    for counts in bounded_compositions(n, windows):
        w = log2_multinomial(n, counts)
        for a, c in enumerate(counts):
            if c:
                w += c * logp[a]
        total += exp2(w)
    return min(total, 1.0)


def _safe_log2(probs: np.ndarray) -> np.ndarray:
    out = np.full(probs.shape, float("-inf"))
    nz = probs > 0
    out[nz] = np.log2(probs[nz])
    return out


def prob_F(y: Sequence, ch: Dmc, p0: Pmf, eps: float) -> float:
    """Exact Pr(X~ in F(y) | X~ typical) for X~ i.i.d. p0.

    Sums over joint compositions compatible with y's type: for each output
    symbol b, a composition of the x symbols on the N(b|y) positions carrying
    b, weighted by multinomial placement counts times the i.i.d. p0 mass,
    restricted to compositions passing the F-membership windows.
    """
    if y.alphabet != ch.output or p0.alphabet != ch.input:
        raise ConfigError("alphabet mismatch")
    n = y.n
    kx, ky = ch.input.size, ch.output.size
    denom = prob_typical_set(p0, n, eps)
    if denom == 0.0:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")

    m = y.counts()
    x_windows = strong_windows(n, p0.probs, eps)
    if x_windows is None:  # unreachable given denom > 0, kept for clarity
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    logp0 = _safe_log2(p0.probs)
    thr = eps * (1.0 + 1.0 / ky)
    trans = ch.transition

    cols = [int(c) for c in m]
    # enumerate K column by column; K[a, b] = count of positions with x=a, y=b
    col_comps: list[list[tuple[int, ...]]] = []
    for b in range(ky):
        per_cell = [(0, min(cols[b], x_windows[a][1])) for a in range(kx)]
        col_comps.append(list(bounded_compositions(cols[b], per_cell)))

    # the conditional-typicality test needs complete rows, so filter at the end
    num = 0.0
    kmat = np.zeros((kx, ky), dtype=np.int64)

    def rec2(b: int, weight: float):
        nonlocal num
        if b == ky:
            rows = kmat.sum(axis=1)
            for a in range(kx):
                if not x_windows[a][0] <= rows[a] <= x_windows[a][1]:
                    return
            if not _cond_ok(kmat, n, trans, thr):
                return
            w = weight
            for a in range(kx):
                if rows[a]:
                    w += int(rows[a]) * logp0[a]
            num += exp2(w)
            return
        for comp in col_comps[b]:
            skip = False
            for a in range(kx):
                if comp[a] and trans[a, b] == 0.0:
                    skip = True
                    break
            if skip:
                continue
            kmat[:, b] = comp
            rec2(b + 1, weight + log2_multinomial(cols[b], comp))
        kmat[:, b] = 0

    rec2(0, 0.0)
    return min(num / denom, 1.0)


def prob_typical_noise_of_type(
    x_counts, ch: Dmc, eps: float, n: int
) -> float:
    """Pr(Y^n conditionally typical | x) as a function of x's type only.

    Factorizes over input symbols: the outputs on the N(a|x) positions
    carrying symbol a form an independent multinomial, and the window on
    each row of pair counts depends only on N(a|x).
    """
    ky = ch.output.size
    log_t = _safe_log2(ch.transition)
    total_log = 0.0
    for a, r_a in enumerate(int(c) for c in x_counts):
        if r_a == 0:
            continue
        windows = cond_row_windows(r_a, ch.transition[a], n, eps, ky)
        if windows is None:
            return 0.0
        acc = 0.0
        for comp in bounded_compositions(r_a, windows):
            w = log2_multinomial(r_a, comp)
            for b, c in enumerate(comp):
                if c:
                    w += c * log_t[a, b]
            acc += exp2(w)
        if acc == 0.0:
            return 0.0
        total_log += math.log2(min(acc, 1.0))
    return exp2(total_log)


def prob_typical_noise(x: Sequence, ch: Dmc, eps: float) -> float:
    """Exact Pr(Y^n in A(Y|x)) for the given input sequence."""
    if x.alphabet != ch.input:
        raise ConfigError("sequence alphabet does not match channel input")
    return prob_typical_noise_of_type(x.counts(), ch, eps, x.n)


def cond_output_prob_given_E(y: Sequence, x: Sequence, ch: Dmc, eps: float) -> float:
    """p(y|x) / Pr(noise typical | x) when y is conditionally typical, else 0."""
    if not is_cond_typical(y, x, ch, eps):
        return 0.0
    counts = pair_counts(x, y).matrix
    log_t = _safe_log2(ch.transition)
    logp = 0.0
    for a in range(ch.input.size):
        for b in range(ch.output.size):
            c = int(counts[a, b])
            if c:
                logp += c * log_t[a, b]
    pe = prob_typical_noise(x, ch, eps)
    return exp2(logp) / pe
