"""Parser for the plain-text channel spec format.

Grammar (one key per line, '#' starts a comment):

    input: 0 1
    output: 0 1
    row 0: 0.9 0.1
    row 1: 0.1 0.9
    p0: 0.5 0.5
    epsilon: 0.1        # optional default
    R: 0.5              # optional default
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Dmc, Pmf, validate_channel
from .errors import ConfigError

__all__ = ["ChannelSpec", "parse_channel_spec", "render_channel_spec"]


@dataclass(frozen=True)
class ChannelSpec:
    dmc: Dmc
    p0: Pmf
    epsilon: float | None = None
    rate: float | None = None


def _floats(key: str, body: str) -> list[float]:
    try:
        return [float(tok) for tok in body.split()]
    except ValueError:
        raise ConfigError(f"non-numeric value in {key!r} line") from None


def parse_channel_spec(text: str) -> ChannelSpec:
    input_syms: list[str] | None = None
    output_syms: list[str] | None = None
    rows: dict[str, list[float]] = {}
    p0_vals: list[float] | None = None
    epsilon: float | None = None
    rate: float | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"line {lineno}: expected 'key: values', got {raw.strip()!r}")
        key, body = (part.strip() for part in line.split(":", 1))
        if key == "input":
            input_syms = body.split()
        elif key == "output":
            output_syms = body.split()
        elif key.startswith("row "):
            label = key[4:].strip()
            if not label:
                raise ConfigError(f"line {lineno}: row line missing input label")
            if label in rows:
                raise ConfigError(f"line {lineno}: duplicate row for input {label!r}")
            rows[label] = _floats(key, body)
        elif key == "p0":
            p0_vals = _floats(key, body)
        elif key == "epsilon":
            vals = _floats(key, body)
            if len(vals) != 1:
                raise ConfigError(f"line {lineno}: epsilon takes one value")
            epsilon = vals[0]
        elif key == "R":
            vals = _floats(key, body)
            if len(vals) != 1:
                raise ConfigError(f"line {lineno}: R takes one value")
            rate = vals[0]
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    if not input_syms:
        raise ConfigError("missing 'input:' line")
    if not output_syms:
        raise ConfigError("missing 'output:' line")
    if p0_vals is None:
        raise ConfigError("missing 'p0:' line")

    missing = [s for s in input_syms if s not in rows]
    if missing:
        raise ConfigError(f"dimension mismatch: no row for input symbol(s) {missing}")
    extra = [s for s in rows if s not in input_syms]
    if extra:
        raise ConfigError(f"row given for unknown input symbol(s) {extra}")
    matrix = []
    for s in input_syms:
        if len(rows[s]) != len(output_syms):
            raise ConfigError(
                f"dimension mismatch: row {s!r} has {len(rows[s])} entries, "
                f"expected {len(output_syms)}"
            )
        matrix.append(rows[s])
    if len(p0_vals) != len(input_syms):
        raise ConfigError("dimension mismatch: p0 length does not match input alphabet")

    dmc = validate_channel(input_syms, output_syms, matrix)
    p0 = Pmf(dmc.input, np.array(p0_vals))
    return ChannelSpec(dmc=dmc, p0=p0, epsilon=epsilon, rate=rate)


def render_channel_spec(spec: ChannelSpec) -> str:
    """Canonical one-line-per-key rendering (used for report metadata echoes)."""
    dmc, p0 = spec.dmc, spec.p0
    lines = [
        "input: " + " ".join(dmc.input.symbols),
        "output: " + " ".join(dmc.output.symbols),
    ]
    for a, label in enumerate(dmc.input.symbols):
        lines.append(f"row {label}: " + " ".join(f"{v:.12g}" for v in dmc.transition[a]))
    lines.append("p0: " + " ".join(f"{v:.12g}" for v in p0.probs))
    if spec.epsilon is not None:
        lines.append(f"epsilon: {spec.epsilon:.12g}")
    if spec.rate is not None:
        lines.append(f"R: {spec.rate:.12g}")
    return "\n".join(lines)
