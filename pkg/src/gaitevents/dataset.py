"""One-step-ahead sliding-window datasets.

For a recording of ``n`` samples and window length ``w`` the pair at target
timestep ``t`` (``w <= t < n``) has input rows ``t-w .. t-1`` and target the
(right, left) phase at ``t``. Windows never straddle two recordings.

Windows are not materialised: a dataset keeps the concatenated input rows and
the first-row offset of every window, and gathers batches on demand.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .events import phase_signals
from .signal import Channel, PELVIS_CHANNELS, Recording


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SlidingWindowPair:
    x: np.ndarray  # (w, c)
    y: np.ndarray  # (2,)
    t: int


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class WindowedDataset:
    """Pairs of ``(x: w x c window, y: (right, left) target, t)``.

    ``rows`` holds every input row of every source recording back to back;
    window ``i`` is ``rows[starts[i] : starts[i] + w]``.
    """
    rows: np.ndarray
    starts: np.ndarray
    y: np.ndarray
    t: np.ndarray
    source: np.ndarray  # index into ``recording_ids`` per pair
    recording_ids: tuple[str, ...]
    subject_ids: tuple[str, ...]
    channels: tuple[Channel, ...]
    w: int
    source_n: tuple[int, ...]
    norm: NormStats | None = None
    used_rows: np.ndarray | None = field(default=None, repr=False)  # rows covered by some window

    def __len__(self) -> int:
        return int(self.starts.size)

    @property
    def c(self) -> int:
        return len(self.channels)

    def windows(self, idx=None) -> np.ndarray:
        """Input windows as ``(len(idx), w, c)``; all pairs when ``idx`` is None."""
        starts = self.starts if idx is None else self.starts[idx]
        return self.rows[starts[:, None] + np.arange(self.w)[None, :]]

    def targets(self, idx=None) -> np.ndarray:
        return self.y if idx is None else self.y[idx]

    def pair(self, i: int) -> SlidingWindowPair:
        return SlidingWindowPair(x=self.windows(np.array([i]))[0], y=self.y[i].copy(), t=int(self.t[i]))

    def for_recording(self, k: int) -> np.ndarray:
        """Pair indices of recording ``k`` ordered by target timestep."""
        idx = np.flatnonzero(self.source == k)
        return idx[np.argsort(self.t[idx], kind="stable")]

    def covered_rows(self) -> np.ndarray:
        return self.rows if self.used_rows is None else self.rows[self.used_rows]


def make_pairs(rec: Recording, channels: Sequence[Channel], w: int, *, targets: bool = True) -> WindowedDataset:
    """All ``n - w`` windows of one recording (pair ``i`` targets ``t = w + i``).

    With ``targets=False`` unlabelled recordings are allowed and ``y`` is NaN,
    which is enough for inference.
    """
    channels = tuple(Channel(c) for c in channels)
    _check_channels(channels)
    n = rec.n
    if w < 1:
        raise DatasetError("window length must be positive")
    if w > n:
        raise DatasetError(f"window exceeds recording: w={w}, n={n}")
    if targets and rec.truth_events is None:
        raise DatasetError(f"recording {rec.recording_id} has no truth events; targets undefined")
    rows = rec.matrix(channels)
    count = n - w
    if rec.truth_events is None:
        y = np.full((count, 2), np.nan)
    else:
        y = phase_signals(rec.truth_events, n).stack()[w:] if count else np.zeros((0, 2))
    used = np.zeros(n, dtype=bool)
    used[: n - 1 if count else 0] = True
    return WindowedDataset(rows=rows, starts=np.arange(count, dtype=np.int64), y=y,
                           t=np.arange(w, n, dtype=np.int64), source=np.zeros(count, dtype=np.int64),
                           recording_ids=(rec.recording_id,), subject_ids=(rec.subject_id,),
                           channels=channels, w=w, source_n=(n,), used_rows=used)


def _check_channels(channels: tuple[Channel, ...]) -> None:
    if not channels:
        raise DatasetError("at least one input channel required")
    if len(set(channels)) != len(channels):
        raise DatasetError(f"duplicate channels: {[c.value for c in channels]}")
    bad = [c.value for c in channels if c not in PELVIS_CHANNELS]
    if bad:
        raise DatasetError(f"not pelvis channels: {bad}")


def concat(parts: Sequence[WindowedDataset]) -> WindowedDataset:
    if not parts:
        raise DatasetError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.channels != first.channels or p.w != first.w:
            raise DatasetError("cannot concatenate datasets with different channels or window")
        if p.norm != first.norm:
            raise DatasetError("cannot concatenate datasets with different normalisation")
    row_off = np.cumsum([0] + [p.rows.shape[0] for p in parts[:-1]])
    src_off = np.cumsum([0] + [len(p.recording_ids) for p in parts[:-1]])
    used = [p.used_rows if p.used_rows is not None else np.ones(p.rows.shape[0], bool) for p in parts]
    return WindowedDataset(
        rows=np.concatenate([p.rows for p in parts]),
        starts=np.concatenate([p.starts + o for p, o in zip(parts, row_off)]),
        y=np.concatenate([p.y for p in parts]),
        t=np.concatenate([p.t for p in parts]),
        source=np.concatenate([p.source + o for p, o in zip(parts, src_off)]),
        recording_ids=tuple(r for p in parts for r in p.recording_ids),
        subject_ids=tuple(s for p in parts for s in p.subject_ids),
        channels=first.channels, w=first.w,
        source_n=tuple(n for p in parts for n in p.source_n),
        norm=first.norm, used_rows=np.concatenate(used))


def build(recordings: Sequence[Recording], channels: Sequence[Channel], w: int = 80) -> WindowedDataset:
    """Pairs from every recording, never windowing across recording boundaries."""
    return concat([make_pairs(r, channels, w) for r in recordings])


def compute_stats(ds: WindowedDataset) -> NormStats:
    rows = ds.covered_rows()
    if rows.shape[0] == 0:
        raise DatasetError("cannot compute statistics of an empty dataset")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    zero = [c.value for c, s in zip(ds.channels, std) if not s > 0]
    if zero:
        raise DatasetError(f"zero-variance channel(s): {zero}")
    return NormStats(mean, std)


def normalize(ds: WindowedDataset, stats: NormStats | None = None) -> WindowedDataset:
    """Per-channel z-score. Without ``stats`` they are computed from ``ds`` itself."""
    if ds.norm is not None:
        raise DatasetError("dataset is already normalised")
    stats = stats or compute_stats(ds)
    if stats.mean.shape != (ds.c,):
        raise DatasetError(f"stats cover {stats.mean.size} channels, dataset has {ds.c}")
    if np.any(stats.std <= 0):
        bad = [c.value for c, s in zip(ds.channels, stats.std) if not s > 0]
        raise DatasetError(f"zero-variance channel(s): {bad}")
    return replace(ds, rows=(ds.rows - stats.mean) / stats.std, norm=stats)


def reshape_hybrid(x: np.ndarray, segments: int = 2) -> np.ndarray:
    """Split the window axis ``(..., w, c)`` into ``(..., segments, w // segments, c)``."""
    x = np.asarray(x)
    w = x.shape[-2]
    if segments < 1 or w % segments:
        raise DatasetError(f"window length {w} not divisible into {segments} segments")
    return x.reshape(x.shape[:-2] + (segments, w // segments, x.shape[-1]))


def flatten_hybrid(x: np.ndarray) -> np.ndarray:
    return x.reshape(x.shape[:-3] + (x.shape[-3] * x.shape[-2], x.shape[-1]))


# ----------------------------------------------------------------------------
# subject-wise split


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 1

    def __post_init__(self) -> None:
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise DatasetError("fractions must be three non-negative numbers")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise DatasetError(f"fractions must sum to 1, got {sum(self.fractions)}")


def _allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding of ``n * fractions``; earlier partitions win ties."""
    raw = [n * f for f in fractions]
    counts = [int(np.floor(r + 1e-9)) for r in raw]
    rema = [r - c for r, c in zip(raw, counts)]
    for i in sorted(range(len(raw)), key=lambda i: (-round(rema[i], 9), i))[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split_subjects(subjects: Sequence[str], spec: SplitSpec) -> tuple[list[str], list[str], list[str]]:
    uniq = sorted(set(subjects))
    parts = sum(1 for f in spec.fractions if f > 0)
    if len(uniq) < max(parts, 3):
        raise DatasetError(f"need at least {max(parts, 3)} subjects to split, got {len(uniq)}")
    order = [uniq[i] for i in np.random.default_rng(spec.seed).permutation(len(uniq))]
    counts = _allocate(len(uniq), spec.fractions)
    # every partition asked for gets at least one subject, taken from the largest
    for i, f in enumerate(spec.fractions):
        if f > 0 and counts[i] == 0:
            counts[int(np.argmax(counts))] -= 1
            counts[i] = 1
    a, b, _ = counts
    return sorted(order[:a]), sorted(order[a:a + b]), sorted(order[a + b:])


def split(recordings: Sequence[Recording], spec: SplitSpec) -> tuple[list[Recording], list[Recording], list[Recording]]:
    """Subject-disjoint train/val/test recording sets; both trials of a subject stay together."""
    tr, va, te = split_subjects([r.subject_id for r in recordings], spec)
    sets = (set(tr), set(va), set(te))
    return tuple([r for r in recordings if r.subject_id in s] for s in sets)  # type: ignore[return-value]


# ----------------------------------------------------------------------------
# cache file

MAGIC = b"GWDS"
VERSION = 1


def save(ds: WindowedDataset, path: str | Path, provenance: dict | None = None) -> None:
    """Binary cache: header then one row-major record per pair ``(t, y_r, y_l, x[w*c])``.

    Header: magic, version(u32), w(u32), c(u32), count(u64), channel tags
    (u32 length + utf-8, comma separated), norm flag(u8), mean[c], std[c]
    (f64). All little-endian. A JSON sidecar ``<path>.json`` records
    provenance and a checksum of the binary file.
    """
    path = Path(path)
    tags = ",".join(c.value for c in ds.channels).encode()
    norm = ds.norm
    header = MAGIC + struct.pack("<IIIQ", VERSION, ds.w, ds.c, len(ds))
    header += struct.pack("<I", len(tags)) + tags
    header += struct.pack("<B", 1 if norm else 0)
    stats = np.concatenate([norm.mean, norm.std]) if norm else np.zeros(2 * ds.c)
    header += stats.astype("<f8").tobytes()
    x = ds.windows().reshape(len(ds), ds.w * ds.c)
    block = np.concatenate([ds.t[:, None].astype(np.float64), ds.y, x], axis=1).astype("<f8")
    data = header + block.tobytes()
    path.write_bytes(data)
    side = {
        "format": "gaitevents-windowed-dataset",
        "version": VERSION,
        "w": ds.w,
        "channels": [c.value for c in ds.channels],
        "count": len(ds),
        "recording_ids": list(ds.recording_ids),
        "subject_ids": list(ds.subject_ids),
        "pairs_per_recording": [int(np.sum(ds.source == k)) for k in range(len(ds.recording_ids))],
        "source_n": list(ds.source_n),
        "norm": norm.to_dict() if norm else None,
        "sha256": hashlib.sha256(data).hexdigest(),
        "provenance": provenance or {},
    }
    Path(str(path) + ".json").write_text(json.dumps(side, indent=1, sort_keys=True) + "\n")


def load(path: str | Path) -> WindowedDataset:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise DatasetError(f"{path}: not a windowed dataset file")
    version, w, c, count = struct.unpack_from("<IIIQ", data, 4)
    if version != VERSION:
        raise DatasetError(f"{path}: unsupported version {version}")
    off = 4 + struct.calcsize("<IIIQ")
    (ntag,) = struct.unpack_from("<I", data, off)
    off += 4
    channels = tuple(Channel(t) for t in data[off:off + ntag].decode().split(","))
    off += ntag
    (has_norm,) = struct.unpack_from("<B", data, off)
    off += 1
    stats = np.frombuffer(data, dtype="<f8", count=2 * c, offset=off).astype(np.float64)
    off += 16 * c
    block = np.frombuffer(data, dtype="<f8", count=count * (3 + w * c), offset=off)
    block = block.reshape(count, 3 + w * c).astype(np.float64)
    sidecar = Path(str(path) + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    rec_ids = tuple(meta.get("recording_ids", ["cached"]))
    per_rec = meta.get("pairs_per_recording", [count])
    source = np.repeat(np.arange(len(per_rec)), per_rec)
    return WindowedDataset(
        rows=block[:, 3:].reshape(count * w, c),
        starts=np.arange(count, dtype=np.int64) * w,
        y=block[:, 1:3].copy(),
        t=block[:, 0].astype(np.int64),
        source=source.astype(np.int64),
        recording_ids=rec_ids,
        subject_ids=tuple(meta.get("subject_ids", rec_ids)),
        channels=channels, w=w,
        source_n=tuple(meta.get("source_n", [count + w])),
        norm=NormStats(stats[:c], stats[c:]) if has_norm else None,
    )
