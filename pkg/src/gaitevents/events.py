"""Groundtruth heel-strike / toe-off extraction and stance/swing phase encoding."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import find_peaks

from .signal import Series


class Kind(str, Enum):
    HS = "HS"
    TO = "TO"


class Side(str, Enum):
    L = "L"
    R = "R"


STANCE = 1.0
SWING = -1.0


class EventError(ValueError):
    pass


class EventDetectionWarning(UserWarning):
    pass


@dataclass(frozen=True, order=True)
class GaitEvent:
    t: int
    side: Side
    kind: Kind

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.t < 0:
            raise EventError(f"event time must be non-negative, got {self.t}")

    def to_dict(self) -> dict:
        return {"side": self.side.value, "kind": self.kind.value, "t": self.t}


def _sort_key(e: GaitEvent):
    return (e.t, e.side.value, e.kind.value)


@dataclass(frozen=True)
class EventList:
    """Events sorted by ``(t, side, kind)`` with per-side HS/TO alternation.

    ``flags`` carries non-fatal detector diagnostics and does not take part
    in equality.
    """
    events: tuple[GaitEvent, ...] = ()
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        evs = tuple(sorted((e if isinstance(e, GaitEvent) else GaitEvent(**e) for e in self.events),
                           key=_sort_key))
        if len(set(evs)) != len(evs):
            raise EventError("duplicate (side, kind, t) events")
        for side in Side:
            seq = [e for e in evs if e.side is side]
            bad = [i for i in range(1, len(seq)) if seq[i].kind is seq[i - 1].kind]
            if bad:
                where = ", ".join(f"{seq[i].kind.value}@{seq[i].t}" for i in bad)
                raise EventError(f"side {side.value}: HS/TO do not alternate at {where}")
            same_t = [seq[i].t for i in range(1, len(seq)) if seq[i].t == seq[i - 1].t]
            if same_t:
                raise EventError(f"side {side.value}: simultaneous HS and TO at t={same_t}")
        object.__setattr__(self, "events", evs)
        object.__setattr__(self, "flags", tuple(self.flags))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def select(self, kind: Kind | None = None, side: Side | None = None) -> list[GaitEvent]:
        return [e for e in self.events
                if (kind is None or e.kind is kind) and (side is None or e.side is side)]

    def times(self, kind: Kind, side: Side) -> np.ndarray:
        return np.array([e.t for e in self.select(kind, side)], dtype=np.int64)

    def within(self, start: int, stop: int) -> "EventList":
        """Events with ``start <= t < stop``."""
        return EventList(tuple(e for e in self.events if start <= e.t < stop))

    def shift(self, offset: int) -> "EventList":
        return EventList(tuple(GaitEvent(e.t + offset, e.side, e.kind) for e in self.events))

    @classmethod
    def merge(cls, *lists: "EventList") -> "EventList":
        evs = tuple(e for lst in lists for e in lst.events)
        flags = tuple(f for lst in lists for f in lst.flags)
        return cls(evs, flags)

    def to_json(self) -> list[dict]:
        return [e.to_dict() for e in self.events]

    @classmethod
    def from_json(cls, data: Iterable[dict]) -> "EventList":
        return cls(tuple(GaitEvent(t=d["t"], side=d["side"], kind=d["kind"]) for d in data))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EventList":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PhasePair:
    right: np.ndarray
    left: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.right, dtype=np.float64)
        l = np.array(self.left, dtype=np.float64)
        if r.shape != l.shape or r.ndim != 1:
            raise EventError("right and left phase series must be 1-d and equally long")
        for name, arr in (("right", r), ("left", l)):
            if not np.all((arr == STANCE) | (arr == SWING)):
                raise EventError(f"{name} phase series must contain only +1/-1")
        r.flags.writeable = False
        l.flags.writeable = False
        object.__setattr__(self, "right", r)
        object.__setattr__(self, "left", l)

    def __len__(self) -> int:
        return self.right.size

    def side(self, side: Side) -> np.ndarray:
        return self.right if Side(side) is Side.R else self.left

    def stack(self) -> np.ndarray:
        """``(n, 2)`` array with columns (right, left)."""
        return np.stack([self.right, self.left], axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhasePair):
            return NotImplemented
        return np.array_equal(self.right, other.right) and np.array_equal(self.left, other.left)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DetectorParams:
    to_peak_frac: float = 1.5
    hs_peak_frac: float = 0.5
    min_event_gap_s: float = 0.25

    def __post_init__(self) -> None:
        if min(self.to_peak_frac, self.hs_peak_frac, self.min_event_gap_s) <= 0:
            raise EventError("detector parameters must be positive")

    def min_gap_ts(self, sample_rate_hz: float) -> int:
        return max(1, int(round(self.min_event_gap_s * sample_rate_hz)))


def _two_level_split(mags: np.ndarray, iters: int = 50) -> np.ndarray:
    """1-d two-means clustering; True marks members of the larger-centroid cluster."""
    if mags.size == 0:
        return np.zeros(0, dtype=bool)
    lo, hi = float(mags.min()), float(mags.max())
    if hi == lo:
        return np.ones(mags.size, dtype=bool)
    high = mags > 0.5 * (lo + hi)
    for _ in range(iters):
        c_hi, c_lo = mags[high].mean(), mags[~high].mean()
        new = mags > 0.5 * (c_hi + c_lo)
        if np.array_equal(new, high) or not new.any() or new.all():
            break
        high = new
    return high


def _nearest_to_zero(x: np.ndarray, i: int) -> int:
    """For a crossing between samples i-1 and i, the sample with the smaller magnitude."""
    return i - 1 if abs(x[i - 1]) < abs(x[i]) else i


def detect_events(foot_sagittal: Series, side: Side | str,
                  params: DetectorParams | None = None) -> EventList:
    """Heel-strike and toe-off events of one foot from its sagittal angular velocity.

    Toe-offs are the high-amplitude inverted peaks. Within each span between
    consecutive toe-offs the first low-amplitude inverted peak is located and
    the heel-strike is placed at the last downward zero-crossing before it.
    Inverted peaks are split into high/low groups with a per-recording
    two-means on their magnitude; thresholds are relative to the series
    standard deviation, so the result is invariant to positive rescaling.
    """
    params = params or DetectorParams()
    side = Side(side)
    x = foot_sagittal.values
    n = x.size
    sd = float(np.std(x))
    if sd == 0.0 or n < 3:
        warnings.warn(f"side {side.value}: flat foot signal, no gait detected", EventDetectionWarning)
        return EventList((), flags=(f"{side.value}: no peaks found",))

    gap = params.min_gap_ts(foot_sagittal.sample_rate_hz)
    peaks, props = find_peaks(-x, height=params.hs_peak_frac * sd, distance=gap)
    if peaks.size == 0:
        warnings.warn(f"side {side.value}: no inverted peaks found", EventDetectionWarning)
        return EventList((), flags=(f"{side.value}: no peaks found",))
    mags = props["peak_heights"]
    is_to = _two_level_split(mags) & (mags >= params.to_peak_frac * sd)
    to_idx = peaks[is_to]
    low_idx = peaks[~is_to]
    if to_idx.size == 0:
        warnings.warn(f"side {side.value}: no toe-off peaks found", EventDetectionWarning)
        return EventList((), flags=(f"{side.value}: no toe-off peaks found",))

    downward = np.flatnonzero((x[:-1] > 0) & (x[1:] <= 0)) + 1  # x[i-1] > 0 >= x[i]

    flags: list[str] = []
    events: list[GaitEvent] = []
    bounds = np.concatenate([[0], to_idx, [n]])
    for k in range(bounds.size - 1):
        start, stop = int(bounds[k]), int(bounds[k + 1])
        cands = low_idx[(low_idx > start) & (low_idx < stop)]
        hs = None
        for p in cands:
            zc = downward[(downward > start) & (downward <= p)]
            if zc.size:
                hs = _nearest_to_zero(x, int(zc[-1]))
                break
        if hs is None and k == bounds.size - 2 and k > 0:
            # recording ends between heel-strike and its shallow minimum
            zc = downward[downward > start]
            if zc.size and not np.any(low_idx > zc[0]) and x[-1] < 0:
                hs = _nearest_to_zero(x, int(zc[0]))
        if hs is None:
            if k not in (0, bounds.size - 2):
                flags.append(f"{side.value}: no heel-strike between toe-offs at {start} and {stop}")
        else:
            events.append(GaitEvent(hs, side, Kind.HS))
        if k < to_idx.size:
            events.append(GaitEvent(int(to_idx[k]), side, Kind.TO))

    events = _enforce_alternation(events, flags, side)
    if flags:
        warnings.warn("; ".join(flags), EventDetectionWarning)
    return EventList(tuple(events), flags=tuple(flags))


def _enforce_alternation(events: list[GaitEvent], flags: list[str], side: Side) -> list[GaitEvent]:
    """Drop the later toe-off of a TO,TO pair left by a skipped heel-strike (flagged)."""
    out: list[GaitEvent] = []
    for e in sorted(events, key=_sort_key):
        if out and out[-1].kind is e.kind:
            if e.kind is Kind.TO:
                flags.append(f"{side.value}: dropped TO@{e.t} after skipped heel-strike")
                continue
            raise EventError(f"side {side.value}: HS/TO alternation unsatisfiable at t={[out[-1].t, e.t]}")
        out.append(e)
    return out


def detect_recording_events(rec, params: DetectorParams | None = None) -> EventList:
    """Events of both feet of a :class:`~gaitevents.signal.Recording`."""
    from .signal import Channel
    left = detect_events(rec.feet[Channel.FOOT_SAG_L], Side.L, params)
    right = detect_events(rec.feet[Channel.FOOT_SAG_R], Side.R, params)
    return EventList.merge(left, right)


def _encode_side(events: Sequence[GaitEvent], length: int, side: Side) -> np.ndarray:
    if not events:
        raise EventError(f"cannot encode phase: no events for side {side.value}")
    out = np.empty(length, dtype=np.float64)
    first = events[0]
    out[: first.t] = SWING if first.kind is Kind.HS else STANCE
    for e, nxt in zip(events, list(events[1:]) + [None]):
        stop = length if nxt is None else nxt.t
        out[e.t:stop] = STANCE if e.kind is Kind.HS else SWING
    return out


def phase_signals(events: EventList, length: int) -> PhasePair:
    """Encode stance (+1) and swing (-1) for each foot over ``length`` timesteps.

    Samples before a side's first event take the phase that event ends.
    """
    if len(events) == 0:
        raise EventError("cannot encode phase: empty event list")
    last = max(e.t for e in events)
    if length <= last:
        raise EventError(f"length {length} does not cover last event at t={last}")
    return PhasePair(right=_encode_side(events.select(side=Side.R), length, Side.R),
                     left=_encode_side(events.select(side=Side.L), length, Side.L))


def transition_events(phases: PhasePair) -> EventList:
    """Events at every phase change: swing->stance is HS, stance->swing is TO."""
    evs = []
    for side in Side:
        s = phases.side(side)
        idx = np.flatnonzero(s[1:] != s[:-1]) + 1
        for i in idx:
            evs.append(GaitEvent(int(i), side, Kind.HS if s[i] == STANCE else Kind.TO))
    return EventList(tuple(evs))
