"""Tolerance-window accuracy, event timing error and report rendering.

A predicted event counts as a detection of a true event of the same kind and
side when the two are at most ``W`` timesteps apart. Matching is one-to-one,
greedy by smallest offset. Accuracy is the percentage of true events matched.

Timing errors are reported in timesteps and in milliseconds via the sample
rate. At 100 Hz one timestep is 10 ms.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .events import EventList, GaitEvent, Kind, Side


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ToleranceSpec:
    windows_ts: tuple[int, ...] = (1, 2, 3, 4, 5, 6)

    def __post_init__(self) -> None:
        w = tuple(int(x) for x in self.windows_ts)
        if not w or any(x <= 0 for x in w) or list(w) != sorted(set(w)):
            raise EvaluationError(f"tolerance windows must be positive and strictly ascending: {w}")
        object.__setattr__(self, "windows_ts", w)

    @classmethod
    def parse(cls, text: str) -> "ToleranceSpec":
        """``"1..6"`` or ``"1,2,4"``."""
        text = text.strip()
        if ".." in text:
            lo, hi = text.split("..")
            return cls(tuple(range(int(lo), int(hi) + 1)))
        return cls(tuple(int(t) for t in text.split(",")))


GROUPS = tuple((k, s) for k in Kind for s in Side)


def _key(kind: Kind, side: Side) -> str:
    return f"{kind.value}_{side.value}"


def match_events(pred: EventList, truth: EventList, window_ts: float) -> list[tuple[GaitEvent, GaitEvent]]:
    """One-to-one (pred, truth) pairs of equal kind and side within ``window_ts``.

    Candidate pairs are accepted in order of increasing offset; ties are broken
    by the earlier and then the later of the two times, a key that does not
    depend on which list is which.
    """
    out = []
    for kind, side in GROUPS:
        p = pred.times(kind, side)
        t = truth.times(kind, side)
        if p.size == 0 or t.size == 0:
            continue
        d = np.abs(p[:, None] - t[None, :])
        ii, jj = np.nonzero(d <= window_ts)
        if ii.size == 0:
            continue
        lo = np.minimum(p[ii], t[jj])
        hi = np.maximum(p[ii], t[jj])
        order = np.lexsort((hi, lo, d[ii, jj]))
        used_p, used_t = set(), set()
        for k in order:
            i, j = int(ii[k]), int(jj[k])
            if i in used_p or j in used_t:
                continue
            used_p.add(i)
            used_t.add(j)
            out.append((GaitEvent(int(p[i]), side, kind), GaitEvent(int(t[j]), side, kind)))
    out.sort(key=lambda m: (m[1].t, m[1].side.value, m[1].kind.value))
    return out


@dataclass
class EvalReport:
    windows_ts: tuple[int, ...]
    sample_rate_hz: float
    truth_counts: dict[str, int]
    pred_counts: dict[str, int]
    matched: dict[int, dict[str, int]]
    abs_errors_ts: dict[str, list[int]] = field(default_factory=dict)
    protocol: str = ""
    label: str = ""

    # --- accuracies -------------------------------------------------------
    def _pct(self, w: int, keys: Iterable[str]) -> float:
        keys = list(keys)
        total = sum(self.truth_counts[k] for k in keys)
        if total == 0:
            return float("nan")
        return 100.0 * sum(self.matched[w][k] for k in keys) / total

    def accuracy(self, window: int, kind: Kind | None = None, side: Side | None = None) -> float:
        keys = [_key(k, s) for k, s in GROUPS
                if (kind is None or k is kind) and (side is None or s is side)]
        return self._pct(window, keys)

    @property
    def overall(self) -> dict[int, float]:
        return {w: self.accuracy(w) for w in self.windows_ts}

    def by_kind(self, kind: Kind) -> dict[int, float]:
        return {w: self.accuracy(w, kind=kind) for w in self.windows_ts}

    # --- counts -------------------------------------------------------------
    @property
    def n_truth(self) -> int:
        return sum(self.truth_counts.values())

    @property
    def n_pred(self) -> int:
        return sum(self.pred_counts.values())

    @property
    def n_matched(self) -> int:
        return sum(self.matched[self.windows_ts[-1]].values())

    @property
    def spurious(self) -> int:
        """Predictions left unmatched at the widest window (not part of the accuracy metric)."""
        return self.n_pred - self.n_matched

    # --- timing error -------------------------------------------------------
    def mae_ts(self, kind: Kind | None = None, side: Side | None = None) -> float:
        errs = [e for k, s in GROUPS if (kind is None or k is kind) and (side is None or s is side)
                for e in self.abs_errors_ts.get(_key(k, s), [])]
        if not errs:
            return float("nan")
        return float(np.mean(errs))

    def mae_ms(self, kind: Kind | None = None, side: Side | None = None) -> float:
        return self.mae_ts(kind, side) * 1000.0 / self.sample_rate_hz

    # --- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        acc = {"overall": _round_map(self.overall)}
        for kind in Kind:
            acc[kind.value] = _round_map(self.by_kind(kind))
        for kind, side in GROUPS:
            acc[_key(kind, side)] = _round_map({w: self.accuracy(w, kind, side) for w in self.windows_ts})
        mae = {"overall": {"ts": _r(self.mae_ts()), "ms": _r(self.mae_ms())}}
        for kind in Kind:
            mae[kind.value] = {"ts": _r(self.mae_ts(kind)), "ms": _r(self.mae_ms(kind))}
        for kind, side in GROUPS:
            mae[_key(kind, side)] = {"ts": _r(self.mae_ts(kind, side)), "ms": _r(self.mae_ms(kind, side))}
        return {
            "label": self.label,
            "protocol": self.protocol,
            "windows_ts": list(self.windows_ts),
            "sample_rate_hz": self.sample_rate_hz,
            "ms_per_ts": 1000.0 / self.sample_rate_hz,
            "accuracy_pct": acc,
            "mae": mae,
            "counts": {"truth": self.n_truth, "predicted": self.n_pred, "matched": self.n_matched,
                       "spurious_unmatched": self.spurious,
                       "truth_by_group": dict(self.truth_counts), "pred_by_group": dict(self.pred_counts)},
            "matched": {str(w): dict(m) for w, m in self.matched.items()},
            "abs_errors_ts": {k: list(v) for k, v in self.abs_errors_ts.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(windows_ts=tuple(d["windows_ts"]), sample_rate_hz=d["sample_rate_hz"],
                   truth_counts=dict(d["counts"]["truth_by_group"]),
                   pred_counts=dict(d["counts"]["pred_by_group"]),
                   matched={int(w): dict(m) for w, m in d["matched"].items()},
                   abs_errors_ts={k: list(v) for k, v in d.get("abs_errors_ts", {}).items()},
                   protocol=d.get("protocol", ""), label=d.get("label", ""))

    def to_csv(self) -> str:
        """Rows: scope (overall, HS, TO, HS_L, ...) x window accuracy, then timing error."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope"] + [f"+-{x}TS" for x in self.windows_ts] + ["mae_ts", "mae_ms"])
        scopes = [("overall", None, None)] + [(k.value, k, None) for k in Kind] + \
                 [(_key(k, s), k, s) for k, s in GROUPS]
        for name, kind, side in scopes:
            w.writerow([name] + [_fmt(self.accuracy(x, kind, side)) for x in self.windows_ts]
                       + [_fmt(self.mae_ts(kind, side), 3), _fmt(self.mae_ms(kind, side), 3)])
        w.writerow([])
        w.writerow(["protocol", self.protocol])
        w.writerow(["truth_events", self.n_truth])
        w.writerow(["predicted_events", self.n_pred])
        w.writerow(["matched_at_widest", self.n_matched])
        w.writerow(["spurious_unmatched", self.spurious])
        w.writerow(["ms_per_ts", _fmt(1000.0 / self.sample_rate_hz, 3)])
        return buf.getvalue()


def _r(x: float) -> float | None:
    return None if np.isnan(x) else round(float(x), 6)


def _round_map(m: dict[int, float]) -> dict[str, float | None]:
    return {str(k): _r(v) for k, v in m.items()}


def _fmt(x: float, digits: int = 2) -> str:
    return "nan" if np.isnan(x) else f"{x:.{digits}f}"


def _as_pairs(pred, truth) -> list[tuple[EventList, EventList]]:
    if isinstance(pred, EventList) and isinstance(truth, EventList):
        return [(pred, truth)]
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise EvaluationError("prediction and truth collections differ in length")
    return list(zip(pred, truth))


def accuracy(pred: EventList | Sequence[EventList], truth: EventList | Sequence[EventList],
             spec: ToleranceSpec = ToleranceSpec(), *, sample_rate_hz: float = 100.0,
             mae_window_ts: int | None = None, protocol: str = "", label: str = "") -> EvalReport:
    """Accuracy per tolerance window, pooled over one or many recordings.

    Timing errors are collected from the matching at ``mae_window_ts``
    (default: the widest window).
    """
    pairs = _as_pairs(pred, truth)
    truth_counts = {_key(k, s): sum(len(t.select(k, s)) for _, t in pairs) for k, s in GROUPS}
    if sum(truth_counts.values()) == 0:
        raise EvaluationError("accuracy undefined: no true events")
    pred_counts = {_key(k, s): sum(len(p.select(k, s)) for p, _ in pairs) for k, s in GROUPS}
    matched = {}
    for w in spec.windows_ts:
        m = {_key(k, s): 0 for k, s in GROUPS}
        for p, t in pairs:
            for pe, _ in match_events(p, t, w):
                m[_key(pe.kind, pe.side)] += 1
        matched[w] = m
    mw = mae_window_ts if mae_window_ts is not None else spec.windows_ts[-1]
    errors = {_key(k, s): [] for k, s in GROUPS}
    for p, t in pairs:
        for pe, te in match_events(p, t, mw):
            errors[_key(pe.kind, pe.side)].append(abs(pe.t - te.t))
    return EvalReport(windows_ts=spec.windows_ts, sample_rate_hz=float(sample_rate_hz),
                      truth_counts=truth_counts, pred_counts=pred_counts, matched=matched,
                      abs_errors_ts=errors, protocol=protocol, label=label)


@dataclass(frozen=True)
class MAE:
    ts: dict[str, float]
    ms: dict[str, float]
    n: dict[str, int]

    def format(self) -> str:
        return format_mae(self.ms["overall"], self.ms["HS"], self.ms["TO"])


def event_mae(pred: EventList | Sequence[EventList], truth: EventList | Sequence[EventList],
              match_window_ts: int, sample_rate_hz: float = 100.0) -> MAE:
    """Mean absolute offset of matched events, per kind, per (kind, side) and overall."""
    errs: dict[str, list[int]] = {}
    for p, t in _as_pairs(pred, truth):
        for pe, te in match_events(p, t, match_window_ts):
            d = abs(pe.t - te.t)
            for key in ("overall", pe.kind.value, pe.side.value, _key(pe.kind, pe.side)):
                errs.setdefault(key, []).append(d)
    if not errs:
        raise EvaluationError("MAE undefined: no matched events")
    ts = {k: float(np.mean(v)) for k, v in errs.items()}
    ms = {k: v * 1000.0 / sample_rate_hz for k, v in ts.items()}
    for key in ("HS", "TO"):
        ts.setdefault(key, float("nan"))
        ms.setdefault(key, float("nan"))
    return MAE(ts=ts, ms=ms, n={k: len(v) for k, v in errs.items()})


# ----------------------------------------------------------------------------
# table rendering


def _cells(values: Sequence[float], width: int = 16) -> str:
    return "".join(f"& {v:<{width}.2f}" for v in values)


def format_table_row(label: str, values: Sequence[float], label_width: int = 20) -> str:
    """``label & v1 & ... \\\\`` with two decimals in fixed-width cells, the accuracy-table layout."""
    return f"{label:<{label_width}}{_cells(values)}\\\\"


def report_row(label: str, report: EvalReport) -> str:
    return format_table_row(label, [report.overall[w] for w in report.windows_ts])


def protocol_row(train: str, test: str, report: EvalReport) -> str:
    """Training/testing group cells followed by the accuracies, e.g. ``& HS  & P  & 63.10 ...``."""
    values = [report.overall[w] for w in report.windows_ts]
    return f"& {train:<18}& {test:<17}{_cells(values)}\\\\"


def format_mae(overall_ms: float, hs_ms: float, to_ms: float) -> str:
    return f"MAE all {overall_ms:.3f} ms | HS {hs_ms:.3f} ms | TO {to_ms:.3f} ms"


def accuracy_table_csv(rows: Sequence[tuple[str, EvalReport]], first_col: str = "model") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    windows = rows[0][1].windows_ts if rows else ToleranceSpec().windows_ts
    w.writerow([first_col] + [f"+-{x}TS" for x in windows])
    for label, rep in rows:
        w.writerow([label] + [_fmt(rep.overall[x]) for x in windows])
    return buf.getvalue()
