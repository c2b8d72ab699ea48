"""Pulse validation: turn raw continuous phase outputs into clean +/-1 signals and events."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import EventList, PhasePair, STANCE, SWING, transition_events


class NoGaitDetected(ValueError):
    pass


@dataclass(frozen=True)
class PulseRules:
    """A pulse is valid when its peak exceeds ``max_threshold``, its mean exceeds
    ``mean_threshold`` and it is wider than ``min_width_ts`` samples.

    Negative pulses are checked with mirrored thresholds.
    """
    max_threshold: float = 0.5
    mean_threshold: float = 0.6
    min_width_ts: int = 3

    def __post_init__(self) -> None:
        if self.max_threshold <= 0 or self.mean_threshold <= 0 or self.min_width_ts < 0:
            raise ValueError("pulse thresholds must be positive")


@dataclass(frozen=True)
class RawOutput:
    right: np.ndarray
    left: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.right, dtype=np.float64)
        l = np.asarray(self.left, dtype=np.float64)
        if r.shape != l.shape or r.ndim != 1:
            raise ValueError("right and left outputs must be 1-d and equally long")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(l))):
            raise ValueError("raw outputs must be finite")
        object.__setattr__(self, "right", r)
        object.__setattr__(self, "left", l)

    @classmethod
    def from_array(cls, y: np.ndarray) -> "RawOutput":
        y = np.asarray(y)
        return cls(y[:, 0], y[:, 1])


def _signs(series: np.ndarray) -> np.ndarray:
    """Sign per sample; zeros take the sign of the next nonzero sample (else the previous)."""
    s = np.sign(np.asarray(series, dtype=np.float64))
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return s
    # index of the next nonzero sample at or after each position
    nxt = np.searchsorted(nz, np.arange(s.size), side="left")
    fill = np.where(nxt < nz.size, nz[np.minimum(nxt, nz.size - 1)], nz[-1])
    return s[fill]


def extract_transitions(series) -> np.ndarray:
    """Indices ``i`` where the sign of sample ``i`` differs from sample ``i-1``."""
    s = _signs(series)
    if s.size < 2:
        return np.zeros(0, dtype=np.int64)
    return (np.flatnonzero(s[1:] != s[:-1]) + 1).astype(np.int64)


def pulses(series) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` spans of constant sign."""
    x = np.asarray(series)
    cuts = np.concatenate([[0], extract_transitions(x), [x.size]])
    return [(int(a), int(b)) for a, b in zip(cuts[:-1], cuts[1:])]


def _is_valid(seg: np.ndarray, sign: float, boundary: bool, rules: PulseRules) -> bool:
    v = seg * sign
    if not v.max() > rules.max_threshold:
        return False
    if not v.mean() > rules.mean_threshold:
        return False
    return boundary or seg.size > rules.min_width_ts


def validate_series(series, rules: PulseRules = PulseRules()) -> np.ndarray:
    """Clean one output channel; rejected pulses take the phase of the preceding sample."""
    x = np.asarray(series, dtype=np.float64)
    s = _signs(x)
    spans = pulses(x)
    if not spans or not np.any(s):
        raise NoGaitDetected("no gait detected: output has no valid pulse")
    last = len(spans) - 1
    keep = [_is_valid(x[a:b], s[a], i in (0, last), rules) for i, (a, b) in enumerate(spans)]
    if not any(keep):
        raise NoGaitDetected("no gait detected: output has no valid pulse")
    out = np.empty_like(x)
    first_valid = keep.index(True)
    current = s[spans[first_valid][0]]
    for (a, b), ok in zip(spans, keep):
        if ok:
            current = s[a]
        out[a:b] = current
    return np.where(out > 0, STANCE, SWING)


def validate(raw: RawOutput, rules: PulseRules = PulseRules()) -> PhasePair:
    return PhasePair(right=validate_series(raw.right, rules), left=validate_series(raw.left, rules))


def to_events(phases: PhasePair) -> EventList:
    """Swing-to-stance transitions become heel-strikes, stance-to-swing toe-offs."""
    return transition_events(phases)
