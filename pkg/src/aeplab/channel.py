"""Alphabets, distributions, channels, and single-letter information quantities.

All entropies and information quantities are in bits (base-2 logs) with the
convention 0*log(0) = 0.  Distributions are validated to 1e-9 absolute and are
never renormalized silently.  Probabilities of whole sequences are handled in
the log domain throughout (plain products underflow around n = 40).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

PROB_TOL = 1e-9

__all__ = [
    "PROB_TOL",
    "Alphabet",
    "Pmf",
    "Dmc",
    "JointPmf",
    "SingleLetterStats",
    "Sequence",
    "PairCounts",
    "validate_channel",
    "entropy_bits",
    "single_letter_stats",
    "capacity",
    "pair_counts",
    "simulate_output",
    "seq_log_prob",
]


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite alphabet; index <-> label is a bijection."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise ConfigError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("duplicate symbol label in alphabet")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, label: str) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise ConfigError(f"unknown symbol label {label!r}") from None

    @staticmethod
    def of(labels) -> "Alphabet":
        return Alphabet(tuple(str(s) for s in labels))


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over a finite alphabet."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.shape != (self.alphabet.size,):
            raise ConfigError("pmf length does not match alphabet size")
        if np.any(p < 0):
            raise ConfigError("negative entry in pmf")
        if abs(float(p.sum()) - 1.0) > PROB_TOL:
            raise ConfigError(f"pmf sum {float(p.sum()):.12g} outside 1 +/- {PROB_TOL}")

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def entropy(self) -> float:
        return entropy_bits(self.probs)


@dataclass(frozen=True)
class Dmc:
    """Discrete memoryless channel: input/output alphabets plus p(y|x) rows."""

    input: Alphabet
    output: Alphabet
    transition: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=np.float64)
        object.__setattr__(self, "transition", t)
        if t.shape != (self.input.size, self.output.size):
            raise ConfigError("transition matrix dimensions do not match alphabets")
        if np.any(t < 0):
            raise ConfigError("negative entry in transition matrix")
        sums = t.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            a = int(bad[0])
            raise ConfigError(
                f"row sum {sums[a]:.12g} for input {self.input.symbols[a]!r} "
                f"outside 1 +/- {PROB_TOL}"
            )

    def output_pmf(self, p0: Pmf) -> Pmf:
        """Marginal p0(y) induced by input distribution p0(x)."""
        if p0.alphabet != self.input:
            raise ConfigError("input pmf alphabet does not match channel input")
        return Pmf(self.output, p0.probs @ self.transition)


@dataclass(frozen=True)
class JointPmf:
    """Joint distribution p(a, b) over an input/output alphabet pair."""

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.shape != (self.x_alphabet.size, self.y_alphabet.size):
            raise ConfigError("joint pmf shape does not match alphabets")
        if np.any(p < 0):
            raise ConfigError("negative entry in joint pmf")
        if abs(float(p.sum()) - 1.0) > PROB_TOL:
            raise ConfigError("joint pmf does not sum to 1")

    @staticmethod
    def from_input_and_channel(p0: Pmf, ch: Dmc) -> "JointPmf":
        if p0.alphabet != ch.input:
            raise ConfigError("input pmf alphabet does not match channel input")
        return JointPmf(ch.input, ch.output, p0.probs[:, None] * ch.transition)


@dataclass(frozen=True)
class SingleLetterStats:
    """Entropies/information of the pair law p0(x) p(y|x), plus channel capacity."""

    h0_x: float
    h0_y: float
    h0_xy: float
    h0_y_given_x: float
    i0_xy: float
    capacity: float
    capacity_input: Pmf


@dataclass(frozen=True)
class Sequence:
    """Length-n word over an alphabet, stored as symbol indices."""

    alphabet: Alphabet
    symbols: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=np.int64)
        object.__setattr__(self, "symbols", s)
        if s.ndim != 1 or s.size < 1:
            raise ConfigError("sequence must be a nonempty 1-d vector")
        if s.size and (int(s.min()) < 0 or int(s.max()) >= self.alphabet.size):
            raise ConfigError("symbol index outside alphabet")

    @property
    def n(self) -> int:
        return int(self.symbols.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.symbols, minlength=self.alphabet.size)

    def labels(self) -> list[str]:
        return [self.alphabet.symbols[i] for i in self.symbols]

    @staticmethod
    def from_labels(alphabet: Alphabet, labels) -> "Sequence":
        return Sequence(alphabet, np.array([alphabet.index(str(c)) for c in labels]))


@dataclass(frozen=True)
class PairCounts:
    """Occurrence counts N(a, b | x^n, y^n); row sums are the N(a | x^n)."""

    matrix: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "n", int(m.sum()))

    def row_counts(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def col_counts(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


def validate_channel(input_symbols, output_symbols, matrix) -> Dmc:
    """Build a Dmc from raw pieces, rejecting anything that needs repair."""
    return Dmc(Alphabet.of(input_symbols), Alphabet.of(output_symbols), np.asarray(matrix, dtype=np.float64))


def entropy_bits(probs) -> float:
    """Shannon entropy in bits with 0*log(0) = 0."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def single_letter_stats(ch: Dmc, p0: Pmf, cap_tol: float = 1e-10) -> SingleLetterStats:
    """All single-letter quantities of p0(x, y) = p0(x) p(y|x), in bits."""
    if p0.alphabet != ch.input:
        raise ConfigError("input pmf alphabet does not match channel input")
    joint = p0.probs[:, None] * ch.transition
    h0_x = entropy_bits(p0.probs)
    h0_y = entropy_bits(joint.sum(axis=0))
    h0_xy = entropy_bits(joint)
    h0_y_given_x = h0_xy - h0_x
    i0_xy = h0_y - h0_y_given_x
    cap, cap_in = capacity(ch, cap_tol)
    return SingleLetterStats(h0_x, h0_y, h0_xy, h0_y_given_x, i0_xy, cap, cap_in)


def capacity(ch: Dmc, tol: float = 1e-10, max_iter: int = 100_000) -> tuple[float, Pmf]:
    """Channel capacity in bits by alternating maximization.

    Iterates the standard two-step update of the input distribution and stops
    once the duality gap (max-row divergence minus the current lower bound)
    drops below ``tol``, which certifies the estimate.
    """
    if tol <= 0:
        raise ConfigError("capacity tolerance must be positive")
    t = ch.transition
    k = ch.input.size
    with np.errstate(divide="ignore"):
        log_t = np.where(t > 0, np.log2(np.maximum(t, 1e-300)), 0.0)
    r = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        q = r[:, None] * t  # q(x|y) up to normalization
        col = q.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_col = np.where(col > 0, np.log2(np.maximum(col, 1e-300)), 0.0)
        # D(p(.|x) || q_Y) per input, in bits; rows with r=0 still meaningful
        d = np.einsum("ab,ab->a", t, log_t - log_col[None, :])
        lower = float(np.dot(r, d))
        upper = float(d.max())
        if upper - lower <= tol:
            cap = max(lower, 0.0)
            return cap, Pmf(ch.input, r / r.sum())
        w = r * np.exp2(d - upper)
        s = w.sum()
        if not np.isfinite(s) or s <= 0:
            raise ConfigError("capacity iteration degenerated; channel spec ill-conditioned")
        r = w / s
    raise ConfigError(f"capacity iteration did not converge within {max_iter} steps")


def pair_counts(x: Sequence, y: Sequence) -> PairCounts:
    """Exact joint occurrence counts of (x_i, y_i) pairs."""
    if x.n != y.n:
        raise ConfigError(f"length mismatch: {x.n} vs {y.n}")
    nx, ny = x.alphabet.size, y.alphabet.size
    flat = x.symbols * ny + y.symbols
    m = np.bincount(flat, minlength=nx * ny).reshape(nx, ny)
    return PairCounts(m)


def simulate_output(x: Sequence, ch: Dmc, seed: int) -> Sequence:
    """Sample Y^n from the channel, i.i.d. per position, reproducibly.

    The same (x, seed) always yields the same output: one uniform draw per
    position, inverted through the per-row CDF.
    """
    if x.alphabet != ch.input:
        raise ConfigError("sequence alphabet does not match channel input")
    rng = np.random.default_rng(seed)
    u = rng.random(x.n)
    cdf = np.cumsum(ch.transition, axis=1)
    cdf[:, -1] = 1.0
    rows = cdf[x.symbols]
    y = np.sum(u[:, None] >= rows, axis=1)
    y = np.minimum(y, ch.output.size - 1)
    return Sequence(ch.output, y)


def seq_log_prob(s: Sequence, p: Pmf) -> float:
    """log2 probability of s under i.i.d. p; -inf if any symbol has zero mass."""
    counts = np.bincount(s.symbols, minlength=p.alphabet.size)
    if np.any(counts[p.probs == 0] > 0):
        return float("-inf")
    nz = counts > 0
    return float(np.dot(counts[nz], np.log2(p.probs[nz])))
