"""Shared fixtures and independent brute-force oracles.

The oracles enumerate sequence spaces directly with numpy and re-state the
typicality definitions from scratch; they deliberately do not reuse the
package's window or type-class machinery.
"""

import functools
import itertools

import numpy as np
import pytest

from aeplab.channel import Dmc, Pmf, Sequence
from aeplab.channels import canned_channels, reference_channel


@pytest.fixture(scope="session")
def ref():
    ch, p0 = reference_channel()
    return ch, p0


@pytest.fixture(scope="session")
def canned():
    return canned_channels()


@functools.lru_cache(maxsize=64)
def _enum_cached(radix: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(radix), repeat=n)), dtype=np.int64)


def enum_sequences(radix: int, n: int) -> np.ndarray:
    """All sequences over {0..radix-1}^n, lexicographic, via itertools."""
    return _enum_cached(radix, n)


def brute_counts(seqs: np.ndarray, radix: int) -> np.ndarray:
    return np.stack([(seqs == s).sum(axis=1) for s in range(radix)], axis=1)


def brute_strongly_typical(seqs: np.ndarray, probs: np.ndarray, eps: float) -> np.ndarray:
    """Definition restated: strict window for positive mass, zero count otherwise."""
    n = seqs.shape[1]
    k = probs.size
    counts = brute_counts(seqs, k)
    ok = np.ones(seqs.shape[0], dtype=bool)
    for a in range(k):
        if probs[a] == 0:
            ok &= counts[:, a] == 0
        else:
            ok &= np.abs(counts[:, a] / n - probs[a]) < eps / k
    return ok


def brute_pair_counts(xs: np.ndarray, y: np.ndarray, kx: int, ky: int) -> np.ndarray:
    """(num_x, kx, ky) pair counts of each x row against a fixed y."""
    out = np.zeros((xs.shape[0], kx, ky), dtype=np.int64)
    for a in range(kx):
        xa = xs == a
        for b in range(ky):
            out[:, a, b] = (xa & (y == b)).sum(axis=1)
    return out


def brute_cond_typical(xs: np.ndarray, y: np.ndarray, trans: np.ndarray, eps: float) -> np.ndarray:
    """Conditional typicality of fixed y given each x row (non-strict test)."""
    n = xs.shape[1]
    kx, ky = trans.shape
    kmat = brute_pair_counts(xs, y, kx, ky)
    rows = kmat.sum(axis=2)
    thr = eps * (1.0 + 1.0 / ky)
    ok = np.ones(xs.shape[0], dtype=bool)
    for a in range(kx):
        for b in range(ky):
            if trans[a, b] == 0:
                ok &= kmat[:, a, b] == 0
            else:
                ok &= np.abs(kmat[:, a, b] - trans[a, b] * rows[:, a]) / n <= thr
    return ok


def brute_cond_typical_outputs(x: np.ndarray, ys: np.ndarray, trans: np.ndarray, eps: float) -> np.ndarray:
    """Conditional typicality of each y row given one fixed x."""
    n = x.size
    kx, ky = trans.shape
    thr = eps * (1.0 + 1.0 / ky)
    ok = np.ones(ys.shape[0], dtype=bool)
    for a in range(kx):
        xa = x == a
        r_a = int(xa.sum())
        for b in range(ky):
            counts = ((ys == b) & xa[None, :]).sum(axis=1)
            if trans[a, b] == 0:
                ok &= counts == 0
            else:
                ok &= np.abs(counts - trans[a, b] * r_a) / n <= thr
    return ok


def brute_seq_probs(seqs: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """i.i.d. probability of each row under probs."""
    out = np.ones(seqs.shape[0])
    for a in range(probs.size):
        out *= probs[a] ** (seqs == a).sum(axis=1)
    return out


def brute_channel_probs(x: np.ndarray, ys: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """p(y|x) for a fixed x against each y row."""
    return np.prod(trans[x[None, :], ys], axis=1)


def seq_of(alphabet, arr) -> Sequence:
    return Sequence(alphabet, np.asarray(arr, dtype=np.int64))
