"""Experiment reports and their CSV rendering.

A report is a named table plus metadata.  CSV layout: '#'-prefixed metadata
lines (config echo, seed, version), one header row, then data rows in a fixed
(n, trial) order.  Floats print with 12 significant digits; rendering the same
report twice is byte-identical.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ExperimentReport:
    name: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row width {len(values)} != {len(self.columns)} columns")
        self.rows.append(tuple(values))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"CSV value may not contain separators: {s!r}")
    return s


def version_string() -> str:
    from . import __version__

    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def render_csv(report: ExperimentReport) -> str:
    lines = [f"# report: {report.name}"]
    for key, value in report.metadata.items():
        for part in str(value).splitlines():
            lines.append(f"# {key}: {part}")
    lines.append(",".join(report.columns))
    for row in report.rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Inverse of render_csv, loose enough for tests: (columns, rows, metadata)."""
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta.setdefault(k.strip(), v.strip())
            continue
        if not columns:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return columns, rows, meta
