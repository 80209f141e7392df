"""Receiver log and transmitter configuration parsing.

Measurement logs are CSV files with the header
``epoch_s,transmitter_id,phase_rad,snr_db``.  Lines starting with ``#`` are
comments; a ``# origin=<ISO-8601>`` comment declares the epoch origin.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
TWO_PI = 2.0 * math.pi

LOG_COLUMNS = ("epoch_s", "transmitter_id", "phase_rad", "snr_db")


class LogFormatError(ValueError):
    """Raised when a measurement log cannot be parsed.

    ``problems`` holds ``(line_number, message)`` pairs for every rejected row.
    """

    def __init__(self, message: str, problems: list[tuple[int, str]] | None = None):
        self.problems = problems or []
        if self.problems:
            detail = "; ".join(f"line {ln}: {msg}" for ln, msg in self.problems[:10])
            if len(self.problems) > 10:
                detail += f"; ... ({len(self.problems) - 10} more)"
            message = f"{message}: {detail}"
        super().__init__(message)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TransmitterConfig:
    id: str
    name: str
    carrier_frequency: float  # Hz

    def __post_init__(self):
        if not self.id:
            raise ConfigError("transmitter id must be non-empty")
        f = float(self.carrier_frequency)
        if not math.isfinite(f) or f <= 0:
            raise ConfigError(f"transmitter {self.id!r}: carrier_frequency_hz must be positive, got {f}")
        object.__setattr__(self, "carrier_frequency", f)

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters."""
        return SPEED_OF_LIGHT / self.carrier_frequency


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RawPhaseSeries:
    """Wrapped phase and SNR per epoch for one transmitter.

    Arrays are copied to read-only float64 on construction and validated:
    equal lengths, phase in [0, 2*pi), strictly increasing epochs.
    """

    transmitter_id: str
    epochs: np.ndarray
    phase_raw: np.ndarray
    snr_db: np.ndarray
    origin: str | None = field(default=None)

    def __post_init__(self):
        epochs = np.array(self.epochs, dtype=np.float64).ravel()
        phase = np.array(self.phase_raw, dtype=np.float64).ravel()
        snr = np.array(self.snr_db, dtype=np.float64).ravel()
        if not (len(epochs) == len(phase) == len(snr)):
            raise ValueError(
                f"series {self.transmitter_id!r}: array lengths differ "
                f"({len(epochs)}, {len(phase)}, {len(snr)})"
            )
        if len(epochs) == 0:
            raise ValueError(f"series {self.transmitter_id!r} is empty")
        if not np.all(np.isfinite(epochs)) or not np.all(np.isfinite(snr)):
            raise ValueError(f"series {self.transmitter_id!r}: non-finite epoch or SNR")
        bad = ~((phase >= 0.0) & (phase < TWO_PI))
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"series {self.transmitter_id!r}: phase {phase[k]!r} at epoch {epochs[k]!r} outside [0, 2pi)"
            )
        steps = np.diff(epochs)
        if (steps <= 0).any():
            k = int(np.flatnonzero(steps <= 0)[0])
            raise ValueError(
                f"series {self.transmitter_id!r}: epochs not strictly increasing "
                f"({epochs[k]!r} -> {epochs[k + 1]!r})"
            )
        object.__setattr__(self, "epochs", _readonly(epochs))
        object.__setattr__(self, "phase_raw", _readonly(phase))
        object.__setattr__(self, "snr_db", _readonly(snr))

    def __len__(self) -> int:
        return len(self.epochs)

    def __eq__(self, other):
        if not isinstance(other, RawPhaseSeries):
            return NotImplemented
        return (
            self.transmitter_id == other.transmitter_id
            and self.origin == other.origin
            and np.array_equal(self.epochs, other.epochs)
            and np.array_equal(self.phase_raw, other.phase_raw)
            and np.array_equal(self.snr_db, other.snr_db)
        )

    __hash__ = None


@dataclass(frozen=True)
class LogSchema:
    columns: tuple[str, ...] = LOG_COLUMNS
    comment: str = "#"
    delimiter: str = ","


DEFAULT_SCHEMA = LogSchema()


def _as_text(stream: TextIO | str) -> TextIO:
    return io.StringIO(stream) if isinstance(stream, str) else stream


def parse_log(stream: TextIO | str, schema: LogSchema = DEFAULT_SCHEMA) -> list[RawPhaseSeries]:
    """Parse a measurement CSV into one series per transmitter.

    Series are returned in order of first appearance.  Rows of one transmitter
    must appear with strictly increasing epochs; every bad row is collected
    and reported together in a single :class:`LogFormatError`.
    """
    stream = _as_text(stream)
    origin = None
    header = None
    groups: dict[str, list[tuple[float, float, float]]] = {}
    last_epoch: dict[str, tuple[float, int]] = {}
    problems: list[tuple[int, str]] = []

    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith(schema.comment):
            body = text[len(schema.comment):].strip()
            if body.startswith("origin="):
                origin = body[len("origin="):].strip()
            continue
        fields = next(csv.reader([text], delimiter=schema.delimiter))
        fields = [f.strip() for f in fields]
        if header is None:
            if tuple(fields) != tuple(schema.columns):
                raise LogFormatError(
                    f"line {lineno}: expected header {','.join(schema.columns)!r}, got {text!r}"
                )
            header = fields
            continue
        if len(fields) != len(header):
            problems.append((lineno, f"expected {len(header)} fields, got {len(fields)}"))
            continue
        rec = dict(zip(header, fields))
        tid = rec["transmitter_id"]
        try:
            epoch = float(rec["epoch_s"])
            phase = float(rec["phase_rad"])
            snr = float(rec["snr_db"])
        except ValueError as exc:
            problems.append((lineno, f"malformed number ({exc})"))
            continue
        if not tid:
            problems.append((lineno, "empty transmitter_id"))
            continue
        if not (math.isfinite(epoch) and math.isfinite(snr)):
            problems.append((lineno, "non-finite epoch or SNR"))
            continue
        if not (0.0 <= phase < TWO_PI):
            problems.append((lineno, f"phase {phase!r} rad outside [0, 2pi)"))
            continue
        prev = last_epoch.get(tid)
        if prev is not None and epoch <= prev[0]:
            problems.append(
                (lineno, f"{tid}: epoch {epoch!r} does not follow {prev[0]!r} (line {prev[1]})")
            )
            continue
        last_epoch[tid] = (epoch, lineno)
        groups.setdefault(tid, []).append((epoch, phase, snr))

    if header is None:
        raise LogFormatError("empty log: no header found")
    if problems:
        raise LogFormatError("rejected rows", problems)
    if not groups:
        raise LogFormatError("log contains a header but no measurement rows")

    out = []
    for tid, rows in groups.items():
        arr = np.array(rows, dtype=np.float64)
        out.append(RawPhaseSeries(tid, arr[:, 0], arr[:, 1], arr[:, 2], origin=origin))
    return out


def render_log(series: Iterable[RawPhaseSeries], schema: LogSchema = DEFAULT_SCHEMA) -> str:
    """Render series to the measurement CSV format.

    Floats are written with ``repr`` so that :func:`parse_log` recovers every
    value bit-for-bit.  Rows are grouped per transmitter.
    """
    series = list(series)
    buf = io.StringIO()
    origins = {s.origin for s in series if s.origin is not None}
    if len(origins) > 1:
        raise ValueError(f"series declare different origins: {sorted(origins)}")
    if origins:
        buf.write(f"{schema.comment} origin={origins.pop()}\n")
    buf.write(schema.delimiter.join(schema.columns) + "\n")
    for s in series:
        if schema.delimiter in s.transmitter_id:
            raise ValueError(f"transmitter id {s.transmitter_id!r} contains the delimiter")
        for e, p, q in zip(s.epochs.tolist(), s.phase_raw.tolist(), s.snr_db.tolist()):
            buf.write(f"{e!r}{schema.delimiter}{s.transmitter_id}{schema.delimiter}{p!r}{schema.delimiter}{q!r}\n")
    return buf.getvalue()


def load_config(stream: TextIO | str) -> list[TransmitterConfig]:
    """Load transmitter definitions from a JSON document.

    Accepts either a list of objects or ``{"transmitters": [...]}``; each
    object needs ``id``, ``name`` and ``carrier_frequency_hz``.
    """
    try:
        doc = json.load(_as_text(stream))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if isinstance(doc, dict):
        if "transmitters" not in doc:
            raise ConfigError("config object missing field 'transmitters'")
        doc = doc["transmitters"]
    if not isinstance(doc, list) or not doc:
        raise ConfigError("config must list at least one transmitter")

    out: list[TransmitterConfig] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"transmitter entry {i} is not an object")
        for key in ("id", "name", "carrier_frequency_hz"):
            if key not in entry:
                raise ConfigError(f"transmitter entry {i}: missing field {key!r}")
        tid = str(entry["id"])
        if tid in seen:
            raise ConfigError(f"duplicate transmitter id {tid!r}")
        seen.add(tid)
        try:
            freq = float(entry["carrier_frequency_hz"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"transmitter {tid!r}: bad carrier_frequency_hz") from exc
        out.append(TransmitterConfig(tid, str(entry["name"]), freq))
    return out


def dump_config(configs: Iterable[TransmitterConfig]) -> str:
    return json.dumps(
        {
            "transmitters": [
                {"id": c.id, "name": c.name, "carrier_frequency_hz": c.carrier_frequency}
                for c in configs
            ]
        },
        indent=2,
    )
