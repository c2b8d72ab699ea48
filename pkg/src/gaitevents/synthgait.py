"""Parametric synthetic gait with exactly known heel-strike and toe-off times.

Each recording is driven by a sequence of right-foot heel-strike times. All
other events are fixed fractions of the stride:

    right HS  a_k
    left TO   a_k + dls * T_k
    left HS   a_k + (1 + dls - stance) * T_k
    right TO  a_k + stance * T_k

Pelvis channels are harmonic mixtures of the right-foot gait phase. AP, V and
TIL carry only even harmonics (one cycle per step, no left/right content);
ML, OBL and ROT carry odd harmonics as well, so they differ between the two
halves of the stride. Foot gyroscopes are piecewise half-cosine templates
with the toe-off at a deep minimum and the heel-strike at the downward
zero-crossing preceding a shallow minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .events import EventList, GaitEvent, Kind, Side
from .signal import Channel, FOOT_CHANNELS, PELVIS_CHANNELS, Recording, Series


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class GaitParams:
    stride_s: float = 1.1
    stance_fraction: float = 0.6
    dls_fraction: float = 0.1
    speed_jitter: float = 0.02
    amp_noise: float = 0.02
    group: str = "healthy"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.dls_fraction < self.stance_fraction < 1:
            raise SynthError("need 0 < dls_fraction < stance_fraction < 1")
        if 2 * self.stance_fraction - 1 - self.dls_fraction <= 0:
            raise SynthError("stance/dls fractions leave no second double-support phase")
        if self.speed_jitter < 0 or self.amp_noise < 0:
            raise SynthError("jitter and noise must be non-negative")
        if self.stride_s <= 0:
            raise SynthError("stride must be positive")
        if self.group not in ("healthy", "patient"):
            raise SynthError(f"unknown group {self.group!r}")


# (harmonic, amplitude, phase in cycles) per channel, in units of the channel
PELVIS_HARMONICS: dict[Channel, tuple[tuple[int, float, float], ...]] = {
    Channel.AP: ((2, 1.2, 0.05), (4, 0.5, 0.20)),
    Channel.ML: ((1, 1.0, 0.10), (3, 0.3, 0.30), (2, 0.2, 0.0)),
    Channel.V: ((2, 2.0, 0.45), (4, 0.6, 0.10), (6, 0.2, 0.30)),
    Channel.TIL: ((2, 15.0, 0.40), (4, 6.0, 0.05)),
    Channel.OBL: ((1, 12.0, 0.15), (2, 6.0, 0.35), (3, 3.0, 0.0)),
    Channel.ROT: ((1, 20.0, 0.55), (3, 6.0, 0.15), (2, 3.0, 0.25)),
}
PELVIS_OFFSET = {Channel.V: 9.81}

# foot gyroscope template (deg/s)
TO_DEPTH = 300.0
SWING_PEAK = 350.0
HS_DEPTH = 100.0
STANCE_PLATEAU = 40.0
TO_DIP_SHARE = 0.6  # part of the TO depth carried by a narrow dip centred on the event
TO_DIP_WIDTH_S = 0.03
SWING_PEAK_AT = 0.45  # fraction of swing from TO to the swing maximum
PLATEAU_AT = 0.45  # fraction of the span from the shallow minimum to the next TO

PATIENT_TILT_VARIANCE = 1.5
PATIENT_JITTER_FACTOR = 2.0


def _half_cosine(t: np.ndarray, knots_t: np.ndarray, knots_v: np.ndarray) -> np.ndarray:
    """Interpolate extrema with half-cosine segments (zero slope at every knot)."""
    k = np.clip(np.searchsorted(knots_t, t, side="right") - 1, 0, knots_t.size - 2)
    t0, t1 = knots_t[k], knots_t[k + 1]
    v0, v1 = knots_v[k], knots_v[k + 1]
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    return v0 + (v1 - v0) * 0.5 * (1.0 - np.cos(np.pi * u))


def _foot_knots(hs: np.ndarray, to: np.ndarray, amp: float) -> tuple[np.ndarray, np.ndarray]:
    """Knots of one foot's gyro template; ``to[i]`` precedes ``hs[i]`` for every i."""
    a_to, a_sw, a_hs, c = TO_DEPTH * amp, SWING_PEAK * amp, HS_DEPTH * amp, STANCE_PLATEAU * amp
    mid = 0.5 * (a_sw - a_hs)
    half = 0.5 * (a_sw + a_hs)
    u0 = np.arccos(-mid / half) / np.pi  # zero-crossing position within the falling segment
    ts, vs = [], []
    for i in range(hs.size - 1):
        t_to, t_hs, t_next_to = to[i], hs[i], to[i + 1]
        p = t_to + SWING_PEAK_AT * (t_hs - t_to)
        q = p + (t_hs - p) / u0
        m = q + PLATEAU_AT * (t_next_to - q)
        ts += [t_to, p, q, m]
        vs += [-a_to * (1 - TO_DIP_SHARE), a_sw, -a_hs, c]
    ts.append(to[hs.size - 1])
    vs.append(-a_to * (1 - TO_DIP_SHARE))
    return np.asarray(ts), np.asarray(vs)


def _foot_signal(t: np.ndarray, hs: np.ndarray, to: np.ndarray, amp: float) -> np.ndarray:
    kt, kv = _foot_knots(hs, to, amp)
    sig = _half_cosine(t, kt, kv)
    depth = TO_DEPTH * amp * TO_DIP_SHARE
    for t_to in to:
        near = np.abs(t - t_to) < 8 * TO_DIP_WIDTH_S
        sig[near] -= depth * np.exp(-0.5 * ((t[near] - t_to) / TO_DIP_WIDTH_S) ** 2)
    return sig


def _stride_times(p: GaitParams, duration_s: float, rng: np.random.Generator) -> np.ndarray:
    """Right heel-strike times, padded by two strides on each side of the recording."""
    jitter = p.speed_jitter * (PATIENT_JITTER_FACTOR if p.group == "patient" else 1.0)
    n_strides = int(np.ceil(duration_s / p.stride_s)) + 6
    strides = p.stride_s * (1.0 + jitter * rng.standard_normal(n_strides))
    strides = np.clip(strides, 0.5 * p.stride_s, 1.5 * p.stride_s)
    start = -2.0 * p.stride_s - rng.uniform(0.0, p.stride_s)
    return start + np.concatenate([[0.0], np.cumsum(strides)])


def generate(params: GaitParams, duration_s: float = 30.0, sample_rate_hz: float = 100.0,
             subject_id: str = "S000", trial: str = "") -> Recording:
    """One synthetic recording with exact truth events attached."""
    p = params
    if duration_s < 2 * p.stride_s * 1.5:
        raise SynthError(f"duration {duration_s}s covers fewer than 2 strides of {p.stride_s}s (with jitter)")
    rng = np.random.default_rng(p.seed)
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz

    a = _stride_times(p, duration_s, rng)
    T = np.diff(a)
    a0 = a[:-1]
    hs_r = a0
    to_r = a0 + p.stance_fraction * T
    to_l = a0 + p.dls_fraction * T
    hs_l = a0 + (1.0 + p.dls_fraction - p.stance_fraction) * T

    # right phase in [0, 1) per stride, drives every pelvis channel
    k = np.clip(np.searchsorted(a, t, side="right") - 1, 0, T.size - 1)
    phase = (t - a[k]) / T[k]

    amp_scale = 1.0 + 0.05 * rng.standard_normal(len(PELVIS_CHANNELS))
    pelvis = {}
    for j, ch in enumerate(PELVIS_CHANNELS):
        sig = np.zeros(n)
        for h, amp, ph in PELVIS_HARMONICS[ch]:
            sig += amp * np.sin(2 * np.pi * (h * phase + ph))
        sig *= amp_scale[j]
        if p.group == "patient" and ch in (Channel.TIL, Channel.OBL):
            extra = np.sqrt(PATIENT_TILT_VARIANCE - 1.0) * np.std(sig)
            sig = sig + extra * _smooth_noise(rng, n, sample_rate_hz)
        if p.amp_noise > 0:
            sig = sig + p.amp_noise * np.std(sig) * rng.standard_normal(n)
        pelvis[ch] = Series(sig + PELVIS_OFFSET.get(ch, 0.0), sample_rate_hz)

    foot_amp = 1.0 + 0.05 * rng.standard_normal(2)
    # pair every toe-off with the heel-strike that ends its swing
    l_to, l_hs = to_l, hs_l
    r_to, r_hs = to_r[:-1], hs_r[1:]
    feet = {}
    for ch, (hs_t, to_t), amp in zip(FOOT_CHANNELS, ((l_hs, l_to), (r_hs, r_to)), foot_amp):
        sig = _foot_signal(t, hs_t, to_t, amp)
        if p.amp_noise > 0:
            sig = sig + p.amp_noise * np.std(sig) * rng.standard_normal(n)
        feet[ch] = Series(sig, sample_rate_hz)

    evs = []
    for side, times_hs, times_to in ((Side.L, l_hs, l_to), (Side.R, r_hs, r_to)):
        for kind, times in ((Kind.HS, times_hs), (Kind.TO, times_to)):
            # only events with at least one sample on either side are observable
            pos = times * sample_rate_hz
            inside = times[(pos >= 1) & (pos <= n - 2)]
            evs += [GaitEvent(int(i), side, kind) for i in np.round(inside * sample_rate_hz)]
    return Recording(subject_id=subject_id, group=p.group, pelvis=pelvis, feet=feet,
                     truth_events=EventList(tuple(evs)), trial=trial)


def _smooth_noise(rng: np.random.Generator, n: int, fs: float, cutoff_hz: float = 2.0) -> np.ndarray:
    """Unit-variance band-limited noise (moving average of white noise)."""
    width = max(1, int(round(fs / cutoff_hz)))
    white = rng.standard_normal(n + width)
    out = np.convolve(white, np.ones(width) / width, mode="valid")[:n]
    return out / out.std()


FAST_STRIDE_FACTOR = 0.85
FAST_STANCE_SHIFT = -0.02


def subject_params(base: GaitParams, group: str, rng: np.random.Generator) -> GaitParams:
    """Per-subject parameters drawn around ``base``."""
    stance = float(np.clip(base.stance_fraction + 0.015 * rng.standard_normal(), 0.55, 0.68))
    dls = float(np.clip(base.dls_fraction + (stance - base.stance_fraction) + 0.005 * rng.standard_normal(),
                        0.04, 2 * stance - 1 - 0.04))
    return replace(base, stride_s=float(base.stride_s * rng.uniform(0.9, 1.1)),
                   stance_fraction=stance, dls_fraction=dls, group=group)


def generate_cohort(n_healthy: int, n_patient: int, base: GaitParams | None = None,
                    duration_s: float = 30.0, sample_rate_hz: float = 100.0) -> list[Recording]:
    """Two recordings (preferred and fast speed) per subject; seeded by ``base.seed``."""
    base = base or GaitParams()
    if n_healthy < 0 or n_patient < 0:
        raise SynthError("subject counts must be non-negative")
    groups = ["healthy"] * n_healthy + ["patient"] * n_patient
    seeds = np.random.SeedSequence(base.seed).spawn(len(groups))
    out = []
    counters = {"healthy": 0, "patient": 0}
    for group, ss in zip(groups, seeds):
        counters[group] += 1
        sid = f"{'H' if group == 'healthy' else 'P'}{counters[group]:03d}"
        rng = np.random.default_rng(ss)
        sp = subject_params(base, group, rng)
        trial_seeds = rng.integers(0, 2**31 - 1, size=2)
        preferred = replace(sp, seed=int(trial_seeds[0]))
        fast = replace(sp, stride_s=sp.stride_s * FAST_STRIDE_FACTOR,
                       stance_fraction=sp.stance_fraction + FAST_STANCE_SHIFT,
                       dls_fraction=max(0.03, sp.dls_fraction + FAST_STANCE_SHIFT),
                       seed=int(trial_seeds[1]))
        out.append(generate(preferred, duration_s, sample_rate_hz, sid, "preferred"))
        out.append(generate(fast, duration_s, sample_rate_hz, sid, "fast"))
    return out
