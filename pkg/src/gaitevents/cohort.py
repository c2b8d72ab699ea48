"""On-disk cohort layout shared by the command-line stages.

A cohort directory holds one CSV per recording, an index ``cohort.json``
with per-recording metadata, and ``truth/<recording_id>.json`` event lists.
Directories without an index are read as ``*.csv`` with the file stem as
subject id.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

from .events import EventList
from .signal import Recording, RecordingParseError, load_recording, save_recording

INDEX = "cohort.json"
TRUTH_DIR = "truth"


def save_cohort(recordings: Sequence[Recording], directory: str | Path) -> Path:
    d = Path(directory)
    (d / TRUTH_DIR).mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in recordings:
        name = f"{rec.recording_id}.csv"
        save_recording(rec, d / name)
        if rec.truth_events is not None:
            rec.truth_events.dump(d / TRUTH_DIR / f"{rec.recording_id}.json")
        entries.append({"file": name, "subject_id": rec.subject_id, "group": rec.group,
                        "trial": rec.trial, "sample_rate_hz": rec.sample_rate_hz})
    path = d / INDEX
    path.write_text(json.dumps({"recordings": entries}, indent=1) + "\n")
    return path


def load_truth(directory: str | Path) -> dict[str, EventList]:
    d = Path(directory)
    if not d.is_dir():
        raise RecordingParseError(f"{d}: truth directory not found")
    return {p.stem: EventList.load(p) for p in sorted(d.glob("*.json"))}


def load_cohort(directory: str | Path, *, with_truth: bool = True) -> list[Recording]:
    d = Path(directory)
    if not d.is_dir():
        raise RecordingParseError(f"{d}: cohort directory not found")
    index = d / INDEX
    if index.exists():
        try:
            entries = json.loads(index.read_text())["recordings"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise RecordingParseError(f"{index}: malformed cohort index ({exc})") from None
    else:
        entries = [{"file": p.name} for p in sorted(d.glob("*.csv"))]
    if not entries:
        raise RecordingParseError(f"{d}: no recordings")
    truth = load_truth(d / TRUTH_DIR) if with_truth and (d / TRUTH_DIR).is_dir() else {}
    out = []
    for e in entries:
        rec = load_recording(d / e["file"], sample_rate_hz=e.get("sample_rate_hz", 100.0),
                             subject_id=e.get("subject_id"), group=e.get("group", "healthy"),
                             trial=e.get("trial", ""))
        ev = truth.get(rec.recording_id)
        out.append(rec.replace(truth_events=ev) if ev is not None else rec)
    return out


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def hash_inputs(paths: Sequence[str | Path]) -> dict[str, str]:
    """sha256 of every file under each path, keyed by posix path."""
    out = {}
    for p in paths:
        p = Path(p)
        files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
        for f in files:
            out[f.as_posix()] = sha256_file(f)
    return dict(sorted(out.items()))
