import json

import numpy as np
import pytest

from gaitevents.evaluation import (EvalReport, EvaluationError, ToleranceSpec, accuracy, accuracy_table_csv,
                                   event_mae, format_mae, format_table_row, match_events, protocol_row, report_row)
from gaitevents.events import EventList, GaitEvent, Kind, Side
from oracles import brute_match_count


def hs(*ts, side="R"):
    return EventList(tuple(GaitEvent(t, Side(side), Kind.HS) for t in ts))


def alt(*ts, side="R"):
    """Alternating HS, TO, HS, ... at the given times."""
    return EventList(tuple(GaitEvent(t, Side(side), Kind.HS if i % 2 == 0 else Kind.TO)
                           for i, t in enumerate(ts)))


def test_window_boundaries():
    assert len(match_events(hs(52), hs(50), 2)) == 1
    assert len(match_events(hs(52), hs(50), 1)) == 0


def test_one_to_one():
    # HS@49 and HS@51 (with the toe-off between them) against one HS@50
    assert len(match_events(alt(49, 50, 51), hs(50), 1)) == 1


def test_kinds_and_sides_do_not_cross():
    pred = EventList((GaitEvent(50, Side.L, Kind.HS),))
    assert len(match_events(pred, hs(50), 6)) == 0


def _train(rng, n):
    t = np.sort(rng.choice(np.arange(0, 400, 2), size=n, replace=False))
    return [int(v) for v in t]


def test_matching_counts_match_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = _train(rng, int(rng.integers(0, 8)))
        t = _train(rng, int(rng.integers(0, 8)))
        pe = EventList(tuple(GaitEvent(v, Side.R, Kind.HS) for v in p[::2])
                       + tuple(GaitEvent(v, Side.R, Kind.TO) for v in p[1::2]))
        te = EventList(tuple(GaitEvent(v, Side.R, Kind.HS) for v in t[::2])
                       + tuple(GaitEvent(v, Side.R, Kind.TO) for v in t[1::2]))
        for w in (1, 3, 6):
            want = sum(brute_match_count(pe.times(k, Side.R).tolist(), te.times(k, Side.R).tolist(), w)
                       for k in Kind)
            assert len(match_events(pe, te, w)) == want


def _gait(offset=0):
    evs = []
    for k in range(10):
        base = 100 * k
        evs += [GaitEvent(base + offset, Side.R, Kind.HS), GaitEvent(base + 60 + offset, Side.R, Kind.TO),
                GaitEvent(base + 10 + offset, Side.L, Kind.TO), GaitEvent(base + 50 + offset, Side.L, Kind.HS)]
    return EventList(tuple(evs))


def test_identity_gives_100_and_zero_mae():
    truth = _gait()
    rep = accuracy(truth, truth)
    assert all(v == 100.0 for v in rep.overall.values())
    assert event_mae(truth, truth, 6).ts["overall"] == 0.0


def test_shift_beyond_windows_gives_zero():
    rep = accuracy(_gait(10), _gait())
    assert all(v == 0.0 for v in rep.overall.values())
    assert rep.spurious == 40


def test_mae_arithmetic():
    truth = alt(100, 200, 300, 400, 500)
    pred = alt(101, 200, 299, 400, 502)
    mae = event_mae(pred, truth, 6, sample_rate_hz=100.0)
    assert mae.ts["HS"] == pytest.approx(4 / 3)
    assert mae.ms["HS"] == pytest.approx(13.333333, abs=1e-5)
    assert mae.ts["overall"] == pytest.approx(4 / 5)


def test_accuracy_pools_recordings():
    rep = accuracy([hs(10), hs(10)], [hs(10), hs(20)], ToleranceSpec((1, 10)))
    assert rep.overall == {1: 50.0, 10: 100.0}


def test_no_truth_is_an_error():
    with pytest.raises(EvaluationError):
        accuracy(hs(1), EventList())


def test_tolerance_parse():
    assert ToleranceSpec.parse("1..6").windows_ts == (1, 2, 3, 4, 5, 6)
    assert ToleranceSpec.parse("1,3").windows_ts == (1, 3)
    with pytest.raises(EvaluationError):
        ToleranceSpec((3, 1))


def test_report_roundtrip_and_csv():
    rep = accuracy(_gait(1), _gait(), label="x")
    again = EvalReport.from_dict(json.loads(rep.to_json()))
    assert again.to_json() == rep.to_json()
    assert rep.to_csv().splitlines()[0].startswith("scope,+-1TS")


def test_table_two_row_layout():
    row = format_table_row("CNN-BiGRU-Att", [93.89, 98.29, 99.02, 99.46, 99.64, 99.73])
    assert row == ("CNN-BiGRU-Att       & 93.89           & 98.29           & 99.02           "
                   "& 99.46           & 99.64           & 99.73           \\\\")


def test_table_four_row_layout():
    rep = accuracy(_gait(), _gait())
    rep.matched = {w: {k: round(v * 0.6310) for k, v in rep.truth_counts.items()} for w in rep.windows_ts}
    row = protocol_row("HS", "P", rep)
    assert row.startswith("& HS                & P                & ")
    assert report_row("x", rep).endswith("\\\\")


def test_mae_layout():
    assert format_mae(5.77, 6.239, 5.24) == "MAE all 5.770 ms | HS 6.239 ms | TO 5.240 ms"


def test_accuracy_table_csv():
    rep = accuracy(_gait(), _gait(), protocol="HS-HS")
    text = accuracy_table_csv([("HS-HS", rep)], first_col="protocol")
    assert text.splitlines() == ["protocol,+-1TS,+-2TS,+-3TS,+-4TS,+-5TS,+-6TS",
                                 "HS-HS,100.00,100.00,100.00,100.00,100.00,100.00"]
