"""Command-line entry point: ``gaitevents <subcommand> ...``.

Every stage reads files and writes files plus a ``manifest.json`` naming the
config, seed, library versions and input checksums. Exit status is 0 on
success, 1 for usage or configuration errors and 2 for bad input data.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import dataset as dsmod
from . import pipeline as pl
from .cohort import hash_inputs, load_cohort, load_truth, save_cohort
from .evaluation import EvaluationError, ToleranceSpec, accuracy, accuracy_table_csv, event_mae
from .events import EventList, detect_recording_events, phase_signals
from .neuralnet import TrainConfig, load_checkpoint, save_checkpoint
from .postprocess import NoGaitDetected, PulseRules, RawOutput, to_events, validate
from .synthgait import GaitParams, generate_cohort
from .zoo import ARCHITECTURES, DEFAULTS, NoAttention, attention_profile, build, profile_csv

log = logging.getLogger("gaitevents")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ----------------------------------------------------------------------------
# helpers


def _versions() -> dict:
    import scipy
    return {"gaitevents": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def write_manifest(out: Path, subcommand: str, args: argparse.Namespace, inputs: Sequence,
                   config: dict | None = None, seed: int | None = None, outputs: Sequence[str] = ()) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": subcommand,
        "args": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")},
        "config": config,
        "seed": seed,
        "versions": _versions(),
        "inputs": hash_inputs([p for p in inputs if p is not None]),
        "outputs": sorted(outputs),
    }
    path = out / "manifest.json"
    _dump(path, manifest)
    return path


def _hyper(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or key not in DEFAULTS:
            raise pl.ConfigError(f"--hyper expects KEY=INT with KEY in {sorted(DEFAULTS)}, got {item!r}")
        try:
            out[key] = int(val)
        except ValueError:
            raise pl.ConfigError(f"--hyper {key} must be an integer, got {val!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> pl.RunConfig:
    """Config file (RunConfig or manifest) first, explicit flags on top, ``--seed`` last."""
    base = pl.RunConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise pl.ConfigError(f"cannot read config {args.config}: {exc}") from None
        base = pl.RunConfig.from_dict(data)
    kw = {}
    g = lambda name: getattr(args, name, None)  # noqa: E731
    if g("model"):
        kw["model"] = args.model
    if g("channels"):
        kw["channels"] = tuple(c.strip() for c in args.channels.split(","))
    if g("w") is not None:
        kw["w"] = args.w
    if g("hyper"):
        kw["hyper"] = {**base.hyper, **_hyper(args.hyper)}
    if g("truth"):
        kw["truth"] = args.truth
    tr = {k: g(a) for k, a in (("max_epochs", "epochs"), ("patience", "patience"), ("lr", "lr"),
                                ("batch_size", "batch_size")) if g(a) is not None}
    try:
        if tr:
            kw["train"] = replace(base.train, **tr)
        pulse = {k: g(a) for k, a in (("max_threshold", "pulse_max"), ("mean_threshold", "pulse_mean"),
                                      ("min_width_ts", "pulse_width")) if g(a) is not None}
        if pulse:
            kw["pulse"] = replace(base.pulse, **pulse)
        if g("windows"):
            kw["tolerance"] = ToleranceSpec.parse(args.windows)
        if g("split"):
            kw["split"] = dsmod.SplitSpec(tuple(float(f) for f in args.split.split(",")), base.split.seed)
    except ValueError as exc:
        raise pl.ConfigError(str(exc)) from None
    cfg = replace(base, **kw) if kw else base
    if g("seed") is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _add_config_flags(p: argparse.ArgumentParser, *, model: bool = True, training: bool = True) -> None:
    p.add_argument("--config", help="RunConfig JSON or a previous run's manifest.json")
    p.add_argument("--seed", type=int, help="overrides every seed in the config")
    p.add_argument("--channels", help="comma-separated pelvis channels, e.g. AP,ML,V,ROT")
    p.add_argument("--w", type=int, help="input window length in samples")
    p.add_argument("--split", help="train,val,test subject fractions, e.g. 0.7,0.15,0.15")
    p.add_argument("--truth", choices=("sidecar", "detect"),
                   help="use truth files shipped with the data or detect events from foot gyros")
    if model:
        p.add_argument("--model", choices=ARCHITECTURES)
        p.add_argument("--hyper", action="append", metavar="KEY=INT",
                       help=f"architecture size override; keys: {', '.join(DEFAULTS)}")
    if training:
        p.add_argument("--epochs", type=int)
        p.add_argument("--patience", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--batch-size", type=int)
    _add_pulse_flags(p)
    p.add_argument("--windows", help="tolerance windows in TS, e.g. 1..6 or 1,3,6")


def _add_pulse_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pulse-max", type=float, help="minimum pulse peak magnitude")
    p.add_argument("--pulse-mean", type=float, help="minimum pulse mean magnitude")
    p.add_argument("--pulse-width", type=int, help="pulses must be wider than this many TS")


def _read_raw(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """``t,right,left`` CSV written by ``predict``."""
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "right", "left"]:
        raise ValueError(f"{path}: expected header t,right,left")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.size == 0:
        raise ValueError(f"{path}: no samples")
    return data[:, 0].astype(np.int64), data[:, 1:3]


def _write_raw(path: Path, t: np.ndarray, y: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "right", "left"])
        for ti, (r, l) in zip(t, y):
            w.writerow([int(ti), repr(float(r)), repr(float(l))])


def _read_events_file(path: Path) -> dict[str, tuple[EventList, tuple[int, int] | None]]:
    data = json.loads(Path(path).read_text())
    if "recordings" not in data:
        raise ValueError(f"{path}: expected an events file written by postprocess")
    out = {}
    for rid, entry in data["recordings"].items():
        span = tuple(entry["span"]) if entry.get("span") else None
        out[rid] = (EventList.from_json(entry["events"]), span)
    return out


def _split_ids(run_dir: Path) -> dict | None:
    p = run_dir / "split.json"
    return json.loads(p.read_text()) if p.exists() else None


# ----------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    base = GaitParams(seed=args.seed)
    recs = generate_cohort(args.healthy, args.patients, base, duration_s=args.duration,
                           sample_rate_hz=args.rate)
    out = Path(args.out)
    save_cohort(recs, out)
    write_manifest(out, "generate", args, [], config=None, seed=args.seed,
                   outputs=[f"{r.recording_id}.csv" for r in recs])
    print(f"wrote {len(recs)} recordings to {out}")
    return EXIT_OK


def cmd_extract_events(args) -> int:
    cfg = resolve_config(args)
    recs = load_cohort(args.data, with_truth=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for rec in recs:
        ev = detect_recording_events(rec, cfg.detector)
        ev.dump(out / f"{rec.recording_id}.json")
        names.append(f"{rec.recording_id}.json")
        if ev.flags:
            log.warning("%s: %s", rec.recording_id, "; ".join(ev.flags))
    write_manifest(out, "extract-events", args, [args.data], cfg.to_dict(), cfg.seed, names)
    print(f"wrote events for {len(recs)} recordings to {out}")
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    cfg = resolve_config(args)
    recs = load_cohort(args.data)
    parts = dsmod.split(recs, cfg.split)
    names = ("train", "val", "test")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = None
    for name, group in zip(names, parts):
        if not group:
            continue
        ds = dsmod.build(pl.prepare(group, cfg), cfg.channel_tags, cfg.w)
        stats = stats or dsmod.compute_stats(ds)
        ds = dsmod.normalize(ds, stats)
        dsmod.save(ds, out / f"{name}.gwds", provenance={"config": cfg.to_dict(), "partition": name})
        print(f"{name}: {len(ds)} pairs from {len(group)} recordings")
    _dump(out / "split.json", {n: sorted({r.subject_id for r in g}) for n, g in zip(names, parts)})
    write_manifest(out, "build-dataset", args, [args.data], cfg.to_dict(), cfg.seed,
                   [f"{n}.gwds" for n in names] + ["split.json"])
    return EXIT_OK


def cmd_list_models(args) -> int:
    overrides = _hyper(args.hyper)
    print(f"{'architecture':<18}{'parameters':>12}")
    for arch in ARCHITECTURES:
        n = build(arch, args.input_channels, args.w, **overrides).param_count
        print(f"{arch:<18}{n:>12}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    recs = load_cohort(args.data)
    tr, va, te = dsmod.split(recs, cfg.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(epoch, trl, val):
        if args.verbose:
            print(f"epoch {epoch:3d} train {trl:.6f} val {val:.6f}", file=sys.stderr)

    model, history = pl.fit(tr, va, cfg, progress)
    split = {n: sorted({r.subject_id for r in g}) for n, g in zip(("train", "val", "test"), (tr, va, te))}
    save_checkpoint(model, out, history, extra={"config": cfg.to_dict()})
    _dump(out / "history.json", history.to_dict())
    _dump(out / "split.json", split)
    write_manifest(out, "train", args, [args.data], cfg.to_dict(), cfg.seed,
                   ["model.json", "model.bin", "history.json", "split.json"])
    print(f"trained {cfg.model}: best epoch {history.best_epoch} of {history.epochs}, "
          f"val loss {history.val_loss[history.best_epoch - 1]:.6f}")
    return EXIT_OK


def _load_run(run: str) -> tuple:
    model, manifest = load_checkpoint(run)
    cfg = pl.RunConfig.from_dict(manifest["config"]) if manifest.get("config") else pl.RunConfig(
        model=manifest["architecture"], channels=tuple(manifest["channels"]), w=manifest["w"],
        hyper=manifest["hyper"])
    return model, cfg


def _select(recs, run_dir: Path, subset: str):
    if subset == "all":
        return recs
    split = _split_ids(run_dir)
    if split is None:
        raise pl.ConfigError(f"{run_dir} has no split.json; use --subset all")
    keep = set(split[subset])
    chosen = [r for r in recs if r.subject_id in keep]
    if not chosen:
        raise ValueError(f"no recordings of the {subset} subjects found in the data")
    return chosen


def cmd_predict(args) -> int:
    model, cfg = _load_run(args.run)
    recs = _select(load_cohort(args.data, with_truth=False), Path(args.run), args.subset)
    out = Path(args.out)
    (out / "raw").mkdir(parents=True, exist_ok=True)
    names = []
    for rec in recs:
        rec = pl.preprocess(rec, cfg.band)
        ds = dsmod.normalize(dsmod.make_pairs(rec, cfg.channel_tags, cfg.w, targets=False), model.norm)
        from .neuralnet import predict as run_model
        y = run_model(model, ds)
        _write_raw(out / "raw" / f"{rec.recording_id}.csv", ds.t, y)
        names.append(f"raw/{rec.recording_id}.csv")
    write_manifest(out, "predict", args, [args.data, Path(args.run) / "model.bin"], cfg.to_dict(),
                   cfg.seed, names)
    print(f"wrote raw outputs for {len(recs)} recordings to {out / 'raw'}")
    return EXIT_OK


def cmd_postprocess(args) -> int:
    rules = PulseRules()
    pulse = {k: getattr(args, a) for k, a in (("max_threshold", "pulse_max"), ("mean_threshold", "pulse_mean"),
                                               ("min_width_ts", "pulse_width")) if getattr(args, a) is not None}
    try:
        rules = replace(rules, **pulse)
    except ValueError as exc:
        raise pl.ConfigError(str(exc)) from None
    raw_dir = Path(args.raw)
    files = sorted(raw_dir.glob("*.csv")) if raw_dir.is_dir() else [raw_dir]
    if not files or not files[0].exists():
        raise ValueError(f"{raw_dir}: no raw output files")
    recordings = {}
    for f in files:
        t, y = _read_raw(f)
        try:
            ev = to_events(validate(RawOutput.from_array(y), rules)).shift(int(t[0]))
        except NoGaitDetected:
            log.warning("%s: no gait detected", f.stem)
            ev = EventList()
        recordings[f.stem] = {"span": [int(t[0]) + 1, int(t[-1]) + 1], "events": ev.to_json()}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _dump(out, {"pulse": {"max_threshold": rules.max_threshold, "mean_threshold": rules.mean_threshold,
                          "min_width_ts": rules.min_width_ts}, "recordings": recordings})
    write_manifest(out.parent, "postprocess", args, files, None, None, [out.name])
    print(f"wrote events for {len(recordings)} recordings to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        spec = ToleranceSpec.parse(args.windows) if args.windows else ToleranceSpec()
    except ValueError as exc:
        raise pl.ConfigError(f"--windows: {exc}") from None
    preds = _read_events_file(Path(args.pred))
    truth = load_truth(args.truth)
    missing = sorted(set(preds) - set(truth))
    if missing:
        raise ValueError(f"no truth for recordings {missing}")
    ids = sorted(preds)
    pl_, tl_ = [], []
    for rid in ids:
        ev, span = preds[rid]
        pl_.append(ev)
        tl_.append(truth[rid].within(*span) if span else truth[rid])
    report = accuracy(pl_, tl_, spec, sample_rate_hz=args.rate, label=args.label or "")
    print(report.to_csv(), end="")
    try:
        print(event_mae(pl_, tl_, args.mae_window, sample_rate_hz=args.rate).format())
    except EvaluationError:
        print("MAE undefined: no matched events")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json())
        (out / "report.csv").write_text(report.to_csv())
        write_manifest(out, "evaluate", args, [args.pred, args.truth], {"tolerance": list(spec.windows_ts)},
                       None, ["report.json", "report.csv"])
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    subsets = pl.load_subsets(args.subsets) if args.subsets else list(pl.STANDARD_SUBSETS)
    recs = load_cohort(args.data)
    rows = pl.run_ablation(subsets, recs, cfg)
    table = pl.ablation_csv(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text(table)
    _dump(out / "reports.json", [{"channels": list(s), "report": r.to_dict()} for s, r in rows])
    write_manifest(out, "ablate", args, [args.data] + ([args.subsets] if args.subsets else []),
                   cfg.to_dict(), cfg.seed, ["ablation.csv", "reports.json"])
    print(table, end="")
    return EXIT_OK


def cmd_protocol(args) -> int:
    cfg = resolve_config(args)
    recs = load_cohort(args.data)
    pairs = [tuple(p.split(":")) for p in args.pairs] if args.pairs else [(args.train_group, args.test_group)]
    for p in pairs:
        if len(p) != 2:
            raise pl.ConfigError(f"--pairs entries look like healthy:patient, got {':'.join(p)!r}")
    jobs = [(a, b, recs, cfg) for a, b in pairs]
    reports = pl._map(pl.run_protocol, jobs)
    rows = [(r.protocol, r) for r in reports]
    table = accuracy_table_csv(rows, first_col="protocol")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "protocols.csv").write_text(table)
    _dump(out / "reports.json", [r.to_dict() for r in reports])
    write_manifest(out, "protocol", args, [args.data], cfg.to_dict(), cfg.seed, ["protocols.csv", "reports.json"])
    print(table, end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    model, cfg = _load_run(args.run)
    recs = load_cohort(args.data)
    if args.recording:
        recs = [r for r in recs if r.recording_id == args.recording]
        if not recs:
            raise ValueError(f"recording {args.recording!r} not in {args.data}")
    else:
        recs = _select(recs, Path(args.run), "test" if _split_ids(Path(args.run)) else "all")
    rec = pl.prepare(recs[:1], replace(cfg, truth="sidecar"))[0]
    ds = dsmod.normalize(dsmod.make_pairs(rec, cfg.channel_tags, cfg.w), model.norm)
    from .neuralnet import predict as run_model
    y = run_model(model, ds)
    try:
        valid = validate(RawOutput.from_array(y), cfg.pulse).stack()
    except NoGaitDetected:
        valid = np.zeros_like(y)
    truth = phase_signals(rec.truth_events, rec.n).stack()[ds.t]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "raw_right", "raw_left", "phase_right", "phase_left", "truth_right", "truth_left"])
    for i, t in enumerate(ds.t):
        w.writerow([int(t)] + [repr(float(v)) for v in (*y[i], *valid[i], *truth[i])])
    (out / "phases.csv").write_text(buf.getvalue())
    outputs = ["phases.csv", "phases.svg"]

    plt.rcParams["svg.hashsalt"] = "gaitevents"
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(10, 5))
    for ax, k, side in zip(axes, (0, 1), ("right", "left")):
        ax.plot(ds.t, truth[:, k], color="0.6", lw=2, label="truth")
        ax.plot(ds.t, y[:, k], lw=0.8, label="raw")
        ax.plot(ds.t, valid[:, k], lw=1, ls="--", label="validated")
        ax.set_ylabel(side)
    axes[0].legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("sample")
    fig.suptitle(rec.recording_id)
    fig.savefig(out / "phases.svg", metadata={"Date": None})
    plt.close(fig)

    try:
        prof = attention_profile(model, ds)
    except NoAttention:
        prof = None
    if prof is not None:
        (out / "attention.csv").write_text(profile_csv(prof))
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.bar(np.arange(1, prof.size + 1), prof)
        ax.set_xlabel("timestep")
        ax.set_ylabel("mean attention weight")
        fig.savefig(out / "attention.svg", metadata={"Date": None})
        plt.close(fig)
        outputs += ["attention.csv", "attention.svg"]
    write_manifest(out, "plot", args, [args.data, Path(args.run) / "model.bin"], cfg.to_dict(), cfg.seed, outputs)
    print(f"wrote {', '.join(outputs)} to {out}")
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaitevents", description="Gait event detection from pelvis IMU signals.")
    p.add_argument("--version", action="version", version=f"gaitevents {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", help="write a synthetic cohort")
    s.add_argument("--out", required=True)
    s.add_argument("--healthy", type=int, default=12)
    s.add_argument("--patients", type=int, default=0)
    s.add_argument("--duration", type=float, default=30.0, help="seconds per recording")
    s.add_argument("--rate", type=float, default=100.0, help="sample rate in Hz")
    s.add_argument("--seed", type=int, default=1)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("extract-events", help="detect HS/TO from foot gyroscopes")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True, help="directory for <recording>.json event files")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_extract_events)

    s = sub.add_parser("build-dataset", help="window, split and normalise a cohort")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    _add_config_flags(s, model=False, training=False)
    s.set_defaults(func=cmd_build_dataset)

    s = sub.add_parser("list-models", help="architectures and parameter counts")
    s.add_argument("--input-channels", type=int, default=6)
    s.add_argument("--w", type=int, default=80)
    s.add_argument("--hyper", action="append", metavar="KEY=INT")
    s.set_defaults(func=cmd_list_models)

    s = sub.add_parser("train", help="train one architecture")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    _add_config_flags(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="raw phase outputs of a trained model")
    s.add_argument("--run", required=True, help="directory written by train")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--subset", choices=("test", "val", "train", "all"), default="test")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("postprocess", help="pulse validation and event extraction")
    s.add_argument("--raw", required=True, help="raw/ directory or one CSV written by predict")
    s.add_argument("--out", required=True, help="events JSON file")
    _add_pulse_flags(s)
    s.set_defaults(func=cmd_postprocess)

    s = sub.add_parser("evaluate", help="tolerance-window accuracy and timing error")
    s.add_argument("--pred", required=True, help="events JSON written by postprocess")
    s.add_argument("--truth", required=True, help="directory of <recording>.json truth files")
    s.add_argument("--windows", default="1..6")
    s.add_argument("--rate", type=float, default=100.0)
    s.add_argument("--mae-window", type=int, default=6)
    s.add_argument("--label")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("ablate", help="one run per input-channel subset")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--subsets", help="JSON list of channel lists (default: 16 standard subsets)")
    _add_config_flags(s)
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("protocol", help="train on one cohort, test on another")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--train-group", choices=("healthy", "patient", "mixed"), default="healthy")
    s.add_argument("--test-group", choices=("healthy", "patient", "mixed"), default="healthy")
    s.add_argument("--pairs", nargs="+", metavar="TRAIN:TEST",
                   help="several protocols at once, e.g. healthy:healthy healthy:patient mixed:mixed")
    _add_config_flags(s)
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("plot", help="phase traces and attention profile of one recording")
    s.add_argument("--run", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--recording", help="recording id (default: first test recording)")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except pl.ConfigError as exc:
        print(f"gaitevents {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"gaitevents {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
