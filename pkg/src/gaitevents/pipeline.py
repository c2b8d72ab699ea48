"""End-to-end runs: filter -> window -> train -> predict -> validate pulses -> score.

Also hosts the two experiment harnesses built on top of a single run: the
input-subset ablation and the healthy/patient cross-cohort protocols.
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import dataset as dsmod
from .evaluation import EvalReport, ToleranceSpec, accuracy
from .events import DetectorParams, EventList, detect_recording_events
from .neuralnet import Model, TrainConfig, TrainHistory, predict, train
from .postprocess import NoGaitDetected, PulseRules, RawOutput, to_events, validate
from .signal import BandSpec, Channel, PELVIS_CHANNELS, Recording, parse_channels, preprocess
from .zoo import ARCHITECTURES, DEFAULTS, build

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str = "CNN-BiGRU-Att"
    channels: tuple[str, ...] = tuple(c.value for c in PELVIS_CHANNELS)
    w: int = 80
    hyper: dict = field(default_factory=dict)
    train: TrainConfig = TrainConfig()
    pulse: PulseRules = PulseRules()
    tolerance: ToleranceSpec = ToleranceSpec()
    split: dsmod.SplitSpec = dsmod.SplitSpec()
    band: BandSpec = BandSpec()
    detector: DetectorParams = DetectorParams()
    truth: str = "sidecar"  # "sidecar": events shipped with the data; "detect": extract from feet
    seed: int = 1

    def __post_init__(self) -> None:
        if self.model not in ARCHITECTURES:
            raise ConfigError(f"unknown model {self.model!r}; valid: {', '.join(ARCHITECTURES)}")
        try:
            chans = parse_channels(list(self.channels))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "channels", tuple(c.value for c in chans))
        bad = set(self.hyper) - set(DEFAULTS)
        if bad:
            raise ConfigError(f"unknown hyperparameters {sorted(bad)}")
        if self.w < 2:
            raise ConfigError("window length must be >= 2")
        if self.truth not in ("sidecar", "detect"):
            raise ConfigError("truth must be 'sidecar' or 'detect'")

    @property
    def channel_tags(self) -> tuple[Channel, ...]:
        return tuple(Channel(c) for c in self.channels)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "channels": list(self.channels),
            "w": self.w,
            "hyper": dict(sorted(self.hyper.items())),
            "train": asdict(self.train),
            "pulse": asdict(self.pulse),
            "tolerance": {"windows_ts": list(self.tolerance.windows_ts)},
            "split": {"fractions": list(self.split.fractions), "seed": self.split.seed},
            "band": asdict(self.band),
            "detector": asdict(self.detector),
            "truth": self.truth,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if "config" in d and "subcommand" in d:  # a run manifest
            d = d["config"]
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        kw = dict(d)
        try:
            if "train" in kw:
                kw["train"] = TrainConfig(**kw["train"])
            if "pulse" in kw:
                kw["pulse"] = PulseRules(**kw["pulse"])
            if "tolerance" in kw:
                kw["tolerance"] = ToleranceSpec(tuple(kw["tolerance"]["windows_ts"]))
            if "split" in kw:
                kw["split"] = dsmod.SplitSpec(tuple(kw["split"]["fractions"]), kw["split"].get("seed", 1))
            if "band" in kw:
                kw["band"] = BandSpec(**kw["band"])
            if "detector" in kw:
                kw["detector"] = DetectorParams(**kw["detector"])
            if "channels" in kw:
                kw["channels"] = tuple(kw["channels"])
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    def with_seed(self, seed: int) -> "RunConfig":
        """Seed everything: weights, shuffling and the subject split."""
        return replace(self, seed=seed, train=replace(self.train, seed=seed),
                       split=replace(self.split, seed=seed))


@dataclass
class RunResult:
    model: Model
    history: TrainHistory
    report: EvalReport
    raw: dict[str, np.ndarray]  # recording id -> (n - w, 2) raw outputs
    predicted: dict[str, EventList]
    truth: dict[str, EventList]
    spans: dict[str, tuple[int, int]]  # recording id -> scored [start, stop)


def with_truth(rec: Recording, cfg: RunConfig) -> Recording:
    if cfg.truth == "detect" or rec.truth_events is None:
        return rec.replace(truth_events=detect_recording_events(rec, cfg.detector))
    return rec


def prepare(recordings: Sequence[Recording], cfg: RunConfig) -> list[Recording]:
    return [preprocess(with_truth(r, cfg), cfg.band) for r in recordings]


def scored_span(n: int, w: int) -> tuple[int, int]:
    """Timesteps whose events can be scored: a transition needs a predicted sample before it."""
    return w + 1, n


def infer(model: Model, recordings: Sequence[Recording], cfg: RunConfig,
          stats: dsmod.NormStats | None = None) -> tuple[dict, dict, dict]:
    """Raw outputs and post-processed events per recording (times in recording samples)."""
    raw, pred, spans = {}, {}, {}
    for rec in recordings:
        ds = dsmod.normalize(dsmod.make_pairs(rec, cfg.channel_tags, cfg.w), stats or model.norm)
        y = predict(model, ds)
        raw[rec.recording_id] = y
        spans[rec.recording_id] = scored_span(rec.n, cfg.w)
        try:
            phases = validate(RawOutput.from_array(y), cfg.pulse)
            pred[rec.recording_id] = to_events(phases).shift(cfg.w)
        except NoGaitDetected:
            log.warning("%s: no gait detected in model output", rec.recording_id)
            pred[rec.recording_id] = EventList()
    return raw, pred, spans


def fit(train_recs: Sequence[Recording], val_recs: Sequence[Recording], cfg: RunConfig,
        on_epoch=None) -> tuple[Model, TrainHistory]:
    """Train ``cfg.model`` on filtered windows normalised with training-set statistics."""
    if not train_recs or not val_recs:
        raise ConfigError("train and validation sets must be non-empty")
    train_recs, val_recs = prepare(train_recs, cfg), prepare(val_recs, cfg)
    ch = cfg.channel_tags
    tr = dsmod.build(train_recs, ch, cfg.w)
    stats = dsmod.compute_stats(tr)
    tr = dsmod.normalize(tr, stats)
    va = dsmod.normalize(dsmod.build(val_recs, ch, cfg.w), stats)
    model = build(cfg.model, len(ch), cfg.w, seed=cfg.seed, **cfg.hyper)
    return train(model, tr, va, cfg.train, on_epoch)


def run_experiment(train_recs: Sequence[Recording], val_recs: Sequence[Recording],
                   test_recs: Sequence[Recording], cfg: RunConfig, *, protocol: str = "",
                   label: str = "") -> RunResult:
    if not test_recs:
        raise ConfigError("train, validation and test sets must all be non-empty")
    model, history = fit(train_recs, val_recs, cfg)
    test_recs = prepare(test_recs, cfg)
    raw, pred, spans = infer(model, test_recs, cfg)
    truth = {r.recording_id: r.truth_events.within(*spans[r.recording_id]) for r in test_recs}
    ids = [r.recording_id for r in test_recs]
    rate = test_recs[0].sample_rate_hz
    report = accuracy([pred[i] for i in ids], [truth[i] for i in ids], cfg.tolerance,
                      sample_rate_hz=rate, protocol=protocol, label=label or cfg.model)
    return RunResult(model, history, report, raw, pred, truth, spans)


def run_split(recordings: Sequence[Recording], cfg: RunConfig, **kw) -> RunResult:
    tr, va, te = dsmod.split(recordings, cfg.split)
    return run_experiment(tr, va, te, cfg, **kw)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("GEK_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, jobs: list) -> list:
    n = min(_workers(), len(jobs))
    if n <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, *zip(*jobs)))


# ----------------------------------------------------------------------------
# ablation over input subsets

STANDARD_SUBSETS = (
    ("AP",), ("ML",), ("V",), ("TIL",), ("OBL",), ("ROT",),
    ("AP", "ML"), ("AP", "ROT"),
    ("AP", "ML", "TIL"), ("AP", "ML", "ROT"),
    ("AP", "ML", "V", "TIL"), ("AP", "ML", "V", "ROT"),
    ("AP", "ML", "V", "TIL", "OBL"), ("AP", "ML", "V", "TIL", "ROT"), ("AP", "ML", "V", "OBL", "ROT"),
    ("AP", "ML", "V", "TIL", "OBL", "ROT"),
)


def subset_label(subset: Sequence[str]) -> str:
    return "[" + ", ".join(subset) + "]"


def _ablation_job(subset: tuple[str, ...], recordings, cfg: RunConfig) -> EvalReport:
    return run_split(recordings, replace(cfg, channels=subset), label=subset_label(subset)).report


def run_ablation(subsets: Sequence[Sequence[str]], recordings: Sequence[Recording],
                 cfg: RunConfig) -> list[tuple[tuple[str, ...], EvalReport]]:
    """One full run per input subset on the same split and seed; rows in input order."""
    clean = []
    for s in subsets:
        try:
            clean.append(tuple(c.value for c in parse_channels(list(s))))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    reports = _map(_ablation_job, [(s, list(recordings), cfg) for s in clean])
    return list(zip(clean, reports))


def ablation_csv(rows: Sequence[tuple[tuple[str, ...], EvalReport]]) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    windows = rows[0][1].windows_ts if rows else ToleranceSpec().windows_ts
    w.writerow(["No of input signals", "Input"] + [f"+-{x}TS" for x in windows])
    for subset, rep in rows:
        w.writerow([len(subset), subset_label(subset)] + [f"{rep.overall[x]:.2f}" for x in windows])
    return buf.getvalue()


def load_subsets(path) -> list[tuple[str, ...]]:
    """JSON list of channel lists, or ``{"subsets": [...]}``."""
    from pathlib import Path
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["subsets"]
    return [tuple(s) for s in data]


# ----------------------------------------------------------------------------
# cross-cohort protocols

PROTOCOL_TAGS = {("healthy", "healthy"): "HS-HS", ("healthy", "patient"): "HS-P",
                 ("mixed", "mixed"): "M-M", ("patient", "patient"): "P-P",
                 ("patient", "healthy"): "P-HS", ("healthy", "mixed"): "HS-M",
                 ("patient", "mixed"): "P-M", ("mixed", "healthy"): "M-HS", ("mixed", "patient"): "M-P"}


def _filter(recs: Sequence[Recording], group: str) -> list[Recording]:
    return list(recs) if group == "mixed" else [r for r in recs if r.group == group]


def protocol_partition(recordings: Sequence[Recording], train_group: str, test_group: str,
                       spec: dsmod.SplitSpec):
    """Subject-disjoint train/val/test honouring group filters.

    When the two groups are disjoint the training side uses every subject of
    its group (split train/val by the train:val ratio) and the test side
    every subject of the other group. Otherwise subjects are split once.
    """
    for g in (train_group, test_group):
        if g not in ("healthy", "patient", "mixed"):
            raise ConfigError(f"unknown group {g!r}")
    train_pool = _filter(recordings, train_group)
    test_pool = _filter(recordings, test_group)
    if not train_pool or not test_pool:
        raise ConfigError(f"empty cohort after filtering for {train_group}->{test_group}")
    disjoint = train_group != "mixed" and test_group != "mixed" and train_group != test_group
    if disjoint:
        f_tr, f_va, _ = spec.fractions
        tv = dsmod.SplitSpec((f_tr / (f_tr + f_va), f_va / (f_tr + f_va), 0.0), spec.seed)
        subs = sorted({r.subject_id for r in train_pool})
        if len(subs) < 2:
            raise ConfigError("need at least 2 training subjects")
        order = [subs[i] for i in np.random.default_rng(tv.seed).permutation(len(subs))]
        n_tr = dsmod._allocate(len(subs), tv.fractions)[0]
        n_tr = min(max(n_tr, 1), len(subs) - 1)
        tr_s, va_s = set(order[:n_tr]), set(order[n_tr:])
        return ([r for r in train_pool if r.subject_id in tr_s],
                [r for r in train_pool if r.subject_id in va_s], list(test_pool))
    seen = {r.recording_id for r in train_pool}
    pool = list(train_pool) + [r for r in test_pool if r.recording_id not in seen]
    tr, va, te = dsmod.split(pool, spec)
    keep = lambda recs, group: [r for r in recs if group == "mixed" or r.group == group]  # noqa: E731
    return keep(tr, train_group), keep(va, train_group), keep(te, test_group)


def run_protocol(train_group: str, test_group: str, recordings: Sequence[Recording],
                 cfg: RunConfig) -> EvalReport:
    tr, va, te = protocol_partition(recordings, train_group, test_group, cfg.split)
    tag = PROTOCOL_TAGS.get((train_group, test_group), f"{train_group}-{test_group}")
    return run_experiment(tr, va, te, cfg, protocol=tag).report
