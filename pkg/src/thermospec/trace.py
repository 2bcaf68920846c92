"""Spectral traces and their CSV form.

CSV layout::

    # value_kind = thermometer_voltage
    # seed = 7
    frequency_hz,value
    7016000000.0,0.000312...

Metadata lines are ``# key = value``; values that parse as JSON are decoded
as such, everything else is kept as a string.
"""
from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .reports import atomic_write_text, fmt

MIN_POINTS = 8
HEADER = "frequency_hz,value"


class TraceFormatError(ValueError):
    pass


class ValueKind(str, enum.Enum):
    THERMOMETER_VOLTAGE = "thermometer_voltage"
    BOLOMETER_POWER = "bolometer_power"
    BOLOMETER_TEMPERATURE = "bolometer_temperature"


@dataclass
class SpectralTrace:
    frequencies: np.ndarray
    values: np.ndarray
    value_kind: ValueKind
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.value_kind = ValueKind(self.value_kind)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.values.shape:
            raise TraceFormatError("frequencies and values must be 1-D arrays of equal length")
        if self.frequencies.size < MIN_POINTS:
            raise TraceFormatError(f"trace needs at least {MIN_POINTS} points, got {self.frequencies.size}")
        if np.any(np.diff(self.frequencies) <= 0):
            raise TraceFormatError("frequencies must be strictly increasing")
        if not (np.all(np.isfinite(self.frequencies)) and np.all(np.isfinite(self.values))):
            raise TraceFormatError("trace contains non-finite entries")

    def __len__(self):
        return self.frequencies.size

    def to_csv(self) -> str:
        out = io.StringIO()
        meta = {"value_kind": self.value_kind.value, **{k: v for k, v in self.metadata.items() if k != "value_kind"}}
        for k, v in meta.items():
            out.write(f"# {k} = {v if isinstance(v, str) else json.dumps(v)}\n")
        out.write(HEADER + "\n")
        for f, v in zip(self.frequencies, self.values):
            out.write(f"{fmt(f)},{fmt(v)}\n")
        return out.getvalue()

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def _decode(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_trace_csv(text: str, value_kind: str | None = None) -> SpectralTrace:
    """Parse trace CSV.  ``value_kind`` overrides (or supplies) the header declaration."""
    meta = {}
    rows = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:]
            if "=" in body:
                k, _, v = body.partition("=")
                meta[k.strip()] = _decode(v.strip())
            continue
        if not header_seen:
            if s.replace(" ", "") != HEADER:
                raise TraceFormatError(f"line {lineno}: expected header {HEADER!r}, got {s!r}")
            header_seen = True
            continue
        parts = s.split(",")
        if len(parts) != 2:
            raise TraceFormatError(f"line {lineno}: expected two columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from exc
    if not header_seen:
        raise TraceFormatError(f"missing header {HEADER!r}")
    kind = value_kind or meta.pop("value_kind", None)
    meta.pop("value_kind", None)
    if kind is None:
        raise TraceFormatError("value_kind not declared in the file header or on the command line")
    try:
        kind = ValueKind(kind)
    except ValueError as exc:
        raise TraceFormatError(f"unknown value_kind {kind!r}; expected one of {[k.value for k in ValueKind]}") from exc
    if not rows:
        raise TraceFormatError("trace has no data rows")
    arr = np.array(rows)
    return SpectralTrace(arr[:, 0], arr[:, 1], kind, meta)


def read_trace_csv(path, value_kind: str | None = None) -> SpectralTrace:
    return parse_trace_csv(Path(path).read_text(), value_kind)
