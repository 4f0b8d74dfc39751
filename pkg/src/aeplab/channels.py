"""Canned channels used by the experiments and the test oracles."""

from __future__ import annotations

import numpy as np

from .channel import Alphabet, Dmc, Pmf

__all__ = [
    "uniform_pmf",
    "identity_channel",
    "bsc",
    "z_channel",
    "useless_channel",
    "symmetric_channel",
    "canned_channels",
    "reference_channel",
]


def uniform_pmf(alphabet: Alphabet) -> Pmf:
    return Pmf(alphabet, np.full(alphabet.size, 1.0 / alphabet.size))


def _binary() -> tuple[Alphabet, Alphabet]:
    return Alphabet.of("01"), Alphabet.of("01")


def identity_channel(k: int = 2) -> Dmc:
    a = Alphabet.of([str(i) for i in range(k)])
    return Dmc(a, a, np.eye(k))


def bsc(p: float) -> Dmc:
    x, y = _binary()
    return Dmc(x, y, np.array([[1 - p, p], [p, 1 - p]]))


def z_channel(p: float) -> Dmc:
    """0 passes clean; 1 flips to 0 with probability p."""
    x, y = _binary()
    return Dmc(x, y, np.array([[1.0, 0.0], [p, 1 - p]]))


def useless_channel(k: int = 2) -> Dmc:
    """Identical rows: the output is independent of the input."""
    a = Alphabet.of([str(i) for i in range(k)])
    return Dmc(a, a, np.full((k, k), 1.0 / k))


def symmetric_channel(k: int, p: float) -> Dmc:
    """k-ary symmetric: total error probability p split over the other symbols."""
    a = Alphabet.of([str(i) for i in range(k)])
    off = p / (k - 1)
    t = np.full((k, k), off)
    np.fill_diagonal(t, 1 - p)
    return Dmc(a, a, t)


def canned_channels() -> dict[str, tuple[Dmc, Pmf]]:
    """The six reference channels, each with a uniform input distribution."""
    chans = {
        "identity": identity_channel(2),
        "bsc01": bsc(0.1),
        "bsc03": bsc(0.3),
        "z02": z_channel(0.2),
        "useless": useless_channel(2),
        "sym3_01": symmetric_channel(3, 0.1),
    }
    return {name: (ch, uniform_pmf(ch.input)) for name, ch in chans.items()}


def reference_channel() -> tuple[Dmc, Pmf]:
    """The in-repo reference config channel: BSC(0.1) with uniform input."""
    ch = bsc(0.1)
    return ch, uniform_pmf(ch.input)
