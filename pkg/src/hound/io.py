"""Plain-text formats used by the command line tool.

Sample CSV
    Optional header row, ``#`` comment lines ignored, columns picked by
    zero-based index or by header name.

Signal config (``key = value`` per line, ``#`` comments)::

    poly = 5, -0.004, 0.0003, -0.00002, 0.000001
    harmonic = 1.0, 0.5, 0.0        # amplitude, angular frequency, phase; repeatable
    sigma = 0.7
    seed = 12345
    t_start = 0
    t_end = 20000
    dt = 1
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, TextIO

from .signals import SignalSpec


class InputError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


@dataclass
class Row:
    line: int
    t: float | None
    f: float


def _resolve(col: str | int | None, header: list[str] | None, width: int, default: int) -> int:
    if col is None:
        return default
    if isinstance(col, int) or str(col).lstrip("-").isdigit():
        idx = int(col)
        return idx if idx >= 0 else width + idx
    if header is None:
        raise InputError(f"column {col!r} given by name but input has no header")
    try:
        return header.index(str(col))
    except ValueError:
        raise InputError(f"column {col!r} not in header {header}") from None


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_samples(
    stream: TextIO,
    t_col: str | int | None = 0,
    f_col: str | int | None = None,
    with_time: bool = True,
) -> Iterator[Row]:
    """Yield rows lazily; ``f_col=None`` means the last column.

    Values that parse as floats but are NaN/inf are passed through so the
    caller can count them as rejected rather than as parse failures.
    """
    reader = csv.reader(stream)
    header = None
    t_idx = f_idx = None
    for lineno, fields in enumerate(reader, start=1):
        if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
            continue
        fields = [x.strip() for x in fields]
        if f_idx is None:
            if not all(_is_float(x) for x in fields):
                if header is not None:
                    raise InputError(f"unparseable row {fields}", lineno)
                header = fields
                continue
            width = len(fields)
            f_idx = _resolve(f_col, header, width, width - 1)
            t_idx = _resolve(t_col, header, width, 0) if with_time else None
        try:
            f = float(fields[f_idx])
            t = float(fields[t_idx]) if t_idx is not None else None
        except (ValueError, IndexError):
            raise InputError(f"cannot parse row {fields}", lineno) from None
        yield Row(lineno, t, f)


def _floats(value: str, key: str, line: int) -> list[float]:
    try:
        return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad number list for {key!r}: {value!r}", line) from None


@dataclass
class SignalConfig:
    spec: SignalSpec
    t_start: float = 0.0
    t_end: float = 100.0
    dt: float = 1.0
    extra: dict = field(default_factory=dict)


def parse_signal_config(text: str) -> SignalConfig:
    poly: list[float] = []
    harmonics: list[tuple[float, float, float]] = []
    vals: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"expected 'key = value', got {raw!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key == "poly":
            poly = _floats(value, key, lineno)
        elif key == "harmonic":
            h = _floats(value, key, lineno)
            if len(h) == 2:
                h.append(0.0)
            if len(h) != 3:
                raise InputError("harmonic needs amplitude, omega[, phase]", lineno)
            harmonics.append((h[0], h[1], h[2]))
        elif key in ("sigma", "seed", "t_start", "t_end", "dt"):
            try:
                vals[key] = int(value) if key == "seed" else float(value)
            except ValueError:
                raise InputError(f"bad value for {key!r}: {value!r}", lineno) from None
        else:
            raise InputError(f"unknown key {key!r}", lineno)
    spec = SignalSpec(tuple(poly), tuple(harmonics), vals.get("sigma", 0.0), int(vals.get("seed", 0)))
    cfg = SignalConfig(spec, vals.get("t_start", 0.0), vals.get("t_end", 100.0), vals.get("dt", 1.0))
    if not (cfg.dt > 0 and cfg.t_end >= cfg.t_start and math.isfinite(cfg.t_end)):
        raise InputError("need dt > 0 and t_end >= t_start")
    return cfg


def format_signal_config(cfg: SignalConfig) -> str:
    s = cfg.spec
    lines = []
    if s.poly:
        lines.append("poly = " + ", ".join(repr(k) for k in s.poly))
    for h in s.harmonics:
        lines.append("harmonic = " + ", ".join(repr(v) for v in h))
    lines += [
        f"sigma = {s.noise_sigma!r}",
        f"seed = {s.seed}",
        f"t_start = {cfg.t_start!r}",
        f"t_end = {cfg.t_end!r}",
        f"dt = {cfg.dt!r}",
    ]
    return "\n".join(lines) + "\n"
