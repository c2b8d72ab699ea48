"""Time-series containers, CSV ingestion and zero-phase band-pass filtering."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Mapping

import numpy as np
from scipy import signal as sps

if TYPE_CHECKING:
    from .events import EventList


class Channel(str, Enum):
    AP = "AP"
    ML = "ML"
    V = "V"
    TIL = "TIL"
    OBL = "OBL"
    ROT = "ROT"
    FOOT_SAG_L = "FOOT_SAG_L"
    FOOT_SAG_R = "FOOT_SAG_R"

    def __str__(self) -> str:
        return self.value


PELVIS_CHANNELS = (Channel.AP, Channel.ML, Channel.V, Channel.TIL, Channel.OBL, Channel.ROT)
FOOT_CHANNELS = (Channel.FOOT_SAG_L, Channel.FOOT_SAG_R)
ALL_CHANNELS = PELVIS_CHANNELS + FOOT_CHANNELS

ACCELERATION_CHANNELS = frozenset({Channel.AP, Channel.ML, Channel.V})  # m/s^2
ANGULAR_CHANNELS = frozenset({Channel.TIL, Channel.OBL, Channel.ROT})  # deg/s

GROUPS = ("healthy", "patient")


class SignalError(ValueError):
    """Raised for malformed recordings or filter configurations."""


class RecordingParseError(SignalError):
    pass


def parse_channels(spec: str | list) -> tuple[Channel, ...]:
    """Parse ``"AP,ML,V"`` (or a list of tags) into pelvis channels, rejecting duplicates."""
    tags = [t.strip() for t in spec.split(",")] if isinstance(spec, str) else list(spec)
    try:
        chans = tuple(Channel(str(t)) for t in tags if str(t))
    except ValueError as exc:
        raise SignalError(f"unknown channel in {spec!r}; valid: {[c.value for c in PELVIS_CHANNELS]}") from exc
    if not chans:
        raise SignalError("empty channel subset")
    if len(set(chans)) != len(chans):
        raise SignalError(f"duplicate channels in subset {[c.value for c in chans]}")
    for c in chans:
        if c not in PELVIS_CHANNELS:
            raise SignalError(f"{c.value} is not a pelvis channel")
    return chans


@dataclass(frozen=True)
class Series:
    values: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise SignalError("series must be one-dimensional with at least one sample")
        if not np.all(np.isfinite(v)):
            raise SignalError("series contains non-finite values")
        if not self.sample_rate_hz > 0:
            raise SignalError(f"sample rate must be positive, got {self.sample_rate_hz}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self.sample_rate_hz == other.sample_rate_hz and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Recording:
    subject_id: str
    group: str
    pelvis: Mapping[Channel, Series]
    feet: Mapping[Channel, Series]
    truth_events: "EventList | None" = None
    trial: str = ""

    def __post_init__(self) -> None:
        if self.group not in GROUPS:
            raise SignalError(f"group must be one of {GROUPS}, got {self.group!r}")
        if set(self.pelvis) != set(PELVIS_CHANNELS):
            raise SignalError(f"pelvis must hold exactly {[c.value for c in PELVIS_CHANNELS]}")
        if set(self.feet) != set(FOOT_CHANNELS):
            raise SignalError(f"feet must hold exactly {[c.value for c in FOOT_CHANNELS]}")
        series = list(self.pelvis.values()) + list(self.feet.values())
        if len({len(s) for s in series}) != 1:
            raise SignalError("all series of a recording must have equal length")
        if len({s.sample_rate_hz for s in series}) != 1:
            raise SignalError("all series of a recording must share one sample rate")
        object.__setattr__(self, "pelvis", {c: self.pelvis[c] for c in PELVIS_CHANNELS})
        object.__setattr__(self, "feet", {c: self.feet[c] for c in FOOT_CHANNELS})

    @property
    def recording_id(self) -> str:
        return f"{self.subject_id}_{self.trial}" if self.trial else self.subject_id

    @property
    def n(self) -> int:
        return len(self.pelvis[Channel.AP])

    @property
    def sample_rate_hz(self) -> float:
        return self.pelvis[Channel.AP].sample_rate_hz

    def channel(self, ch: Channel) -> Series:
        return self.pelvis[ch] if ch in self.pelvis else self.feet[ch]

    def matrix(self, channels: tuple[Channel, ...] | list[Channel]) -> np.ndarray:
        """Stack the requested channels as an ``(n, len(channels))`` array."""
        return np.stack([self.channel(c).values for c in channels], axis=1)

    def replace(self, **changes) -> "Recording":
        kw = dict(subject_id=self.subject_id, group=self.group, pelvis=self.pelvis,
                  feet=self.feet, truth_events=self.truth_events, trial=self.trial)
        kw.update(changes)
        return Recording(**kw)


@dataclass(frozen=True)
class BandSpec:
    low_hz: float = 0.5
    high_hz: float = 6.0
    order: int = 4

    def check(self, sample_rate_hz: float) -> None:
        nyq = sample_rate_hz / 2.0
        if not (0 < self.low_hz < self.high_hz < nyq):
            raise SignalError(
                f"band {self.low_hz}-{self.high_hz} Hz invalid for sample rate {sample_rate_hz} Hz "
                f"(need 0 < low < high < {nyq})")
        if self.order < 1:
            raise SignalError("filter order must be >= 1")


DEFAULT_BAND = BandSpec()


# ----------------------------------------------------------------------------
# CSV ingestion


@dataclass(frozen=True)
class ColumnSchema:
    """Maps channel tags to CSV column names; identity mapping by default."""
    columns: Mapping[Channel, str] = field(default_factory=lambda: {c: c.value for c in ALL_CHANNELS})

    @classmethod
    def from_json(cls, path: str | Path) -> "ColumnSchema":
        raw = json.loads(Path(path).read_text())
        cols = {c: c.value for c in ALL_CHANNELS}
        for tag, name in raw.items():
            try:
                cols[Channel(tag)] = str(name)
            except ValueError:
                raise SignalError(f"schema names unknown channel {tag!r}") from None
        return cls(cols)


def load_recording(path: str | Path, schema: ColumnSchema | None = None, *,
                   sample_rate_hz: float = 100.0, subject_id: str | None = None,
                   group: str = "healthy", trial: str = "") -> Recording:
    """Read an 8-channel recording from a comma-separated file.

    The file needs a header row naming the columns; a ``time`` column is
    allowed and ignored. Errors name the offending column or row index.
    """
    schema = schema or ColumnSchema()
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise RecordingParseError(f"{path}: empty recording (no header)") from None
        index = {}
        for ch in ALL_CHANNELS:
            name = schema.columns[ch]
            if name not in header:
                raise RecordingParseError(f"{path}: missing column {name!r} for channel {ch.value}")
            index[ch] = header.index(name)
        rows = []
        for i, row in enumerate(reader):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise RecordingParseError(
                    f"{path}: ragged row {i} has {len(row)} cells, header has {len(header)}")
            vals = []
            for ch in ALL_CHANNELS:
                cell = row[index[ch]]
                try:
                    v = float(cell)
                except ValueError:
                    raise RecordingParseError(
                        f"{path}: non-numeric cell {cell!r} in column {schema.columns[ch]!r} at row {i}") from None
                if not math.isfinite(v):
                    raise RecordingParseError(
                        f"{path}: non-finite cell {cell!r} in column {schema.columns[ch]!r} at row {i}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise RecordingParseError(f"{path}: empty recording")
    data = np.asarray(rows, dtype=np.float64)
    series = {ch: Series(data[:, k], sample_rate_hz) for k, ch in enumerate(ALL_CHANNELS)}
    return Recording(
        subject_id=subject_id if subject_id is not None else path.stem,
        group=group,
        pelvis={c: series[c] for c in PELVIS_CHANNELS},
        feet={c: series[c] for c in FOOT_CHANNELS},
        trial=trial,
    )


def save_recording(rec: Recording, path: str | Path, schema: ColumnSchema | None = None) -> None:
    """Write ``rec`` in the format :func:`load_recording` reads; values round-trip exactly."""
    schema = schema or ColumnSchema()
    data = rec.matrix(list(ALL_CHANNELS))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [schema.columns[c] for c in ALL_CHANNELS])
        dt = 1.0 / rec.sample_rate_hz
        for i, row in enumerate(data):
            # repr() of a float is the shortest string that parses back to the same double
            w.writerow([repr(round(i * dt, 9))] + [repr(float(v)) for v in row])


# ----------------------------------------------------------------------------
# Filtering


def _design(band: BandSpec, sample_rate_hz: float) -> np.ndarray:
    band.check(sample_rate_hz)
    return sps.butter(band.order, [band.low_hz, band.high_hz], btype="bandpass",
                      output="sos", fs=sample_rate_hz)


def frequency_response(band: BandSpec, sample_rate_hz: float, freqs_hz) -> np.ndarray:
    """Complex response of the single-pass filter at ``freqs_hz``."""
    sos = _design(band, sample_rate_hz)
    _, h = sps.sosfreqz(sos, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)), fs=sample_rate_hz)
    return h


def _filtfilt(sos: np.ndarray, x: np.ndarray, pad: int) -> np.ndarray:
    padded = np.pad(x, pad, mode="reflect")
    return sps.sosfiltfilt(sos, padded, padtype=None)[pad:-pad]


def bandpass(series: Series, band: BandSpec = DEFAULT_BAND) -> Series:
    """Zero-phase Butterworth band-pass.

    The recursive filter runs forward then backward over a reflect-padded
    copy. The result is averaged with the same operation applied to the
    time-reversed input, so the output commutes exactly with time reversal.
    """
    sos = _design(band, series.sample_rate_hz)
    filter_order = 2 * band.order
    pad = 3 * filter_order
    x = series.values
    if x.size <= pad:
        raise SignalError(f"series of length {x.size} too short for band-pass; need > {pad} samples")
    fwd = _filtfilt(sos, x, pad)
    rev = _filtfilt(sos, x[::-1], pad)[::-1]
    return Series(0.5 * (fwd + rev), series.sample_rate_hz)


def lowpass(series: Series, cutoff_hz: float, order: int = 4) -> Series:
    """Zero-phase Butterworth low-pass; used to smooth foot gyroscopes before event extraction."""
    fs = series.sample_rate_hz
    if not 0 < cutoff_hz < fs / 2:
        raise SignalError(f"cutoff {cutoff_hz} Hz invalid for sample rate {fs} Hz")
    sos = sps.butter(order, cutoff_hz, btype="lowpass", output="sos", fs=fs)
    pad = 3 * order
    x = series.values
    if x.size <= pad:
        raise SignalError(f"series of length {x.size} too short for low-pass; need > {pad} samples")
    fwd = _filtfilt(sos, x, pad)
    rev = _filtfilt(sos, x[::-1], pad)[::-1]
    return Series(0.5 * (fwd + rev), fs)


def preprocess(rec: Recording, band: BandSpec = DEFAULT_BAND) -> Recording:
    """Band-pass every pelvis channel; feet and events are left untouched."""
    return rec.replace(pelvis={c: bandpass(s, band) for c, s in rec.pelvis.items()})
