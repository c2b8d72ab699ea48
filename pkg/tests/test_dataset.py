import numpy as np
import pytest

from gaitevents import dataset as D
from gaitevents.events import EventList, GaitEvent, Kind, Side, phase_signals
from gaitevents.signal import PELVIS_CHANNELS, Channel, Recording, Series, preprocess
from gaitevents.synthgait import GaitParams, generate

ALL6 = PELVIS_CHANNELS


def _ramp_recording(n: int, sid="S1") -> Recording:
    """Channel k holds ``1000 * k + t`` so every window is identifiable."""
    series = {c: Series(np.arange(n) + 1000.0 * k, 100.0) for k, c in enumerate(PELVIS_CHANNELS)}
    feet = {c: Series(np.zeros(n), 100.0) for c in (Channel.FOOT_SAG_L, Channel.FOOT_SAG_R)}
    t = max(1, n // 2)
    truth = EventList((GaitEvent(t, Side.R, Kind.HS), GaitEvent(t, Side.L, Kind.TO)))
    return Recording(sid, "healthy", series, feet, truth)


def test_pairs_n100_w80():
    rec = _ramp_recording(100)
    ds = D.make_pairs(rec, ALL6, 80)
    assert len(ds) == 20
    first = ds.pair(0)
    np.testing.assert_array_equal(first.x[:, 0], np.arange(80))  # x_1..x_80
    assert first.t == 80  # target y_81 in one-based terms
    np.testing.assert_array_equal(first.y, phase_signals(rec.truth_events, 100).stack()[80])


def test_n_equals_w_gives_no_pairs():
    assert len(D.make_pairs(_ramp_recording(80), ALL6, 80)) == 0
    with pytest.raises(D.DatasetError, match="window exceeds recording"):
        D.make_pairs(_ramp_recording(50), ALL6, 80)


def test_n81_w80_shape():
    ds = D.make_pairs(_ramp_recording(81), ALL6, 80)
    assert len(ds) == 1
    assert ds.windows().shape == (1, 80, 6)


def test_unlabelled_recording_needs_flag():
    rec = _ramp_recording(90).replace(truth_events=None)
    with pytest.raises(D.DatasetError):
        D.make_pairs(rec, ALL6, 80)
    ds = D.make_pairs(rec, ALL6, 80, targets=False)
    assert np.isnan(ds.y).all()


def test_build_concatenates_and_tracks_source():
    a, b = _ramp_recording(100, "A"), _ramp_recording(90, "B")
    ds = D.build([a, b], [Channel.AP, Channel.ROT], 80)
    assert len(ds) == 30
    assert ds.recording_ids == ("A", "B")
    np.testing.assert_array_equal(ds.for_recording(1), np.arange(20, 30))
    np.testing.assert_array_equal(ds.windows([20])[0, :, 0], np.arange(80))


def test_normalize_own_stats():
    rec = preprocess(generate(GaitParams(seed=1), duration_s=10.0))
    ds = D.normalize(D.make_pairs(rec, ALL6, 80))
    rows = ds.covered_rows()
    assert np.all(np.abs(rows.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(rows.std(axis=0) - 1) < 1e-9)
    with pytest.raises(D.DatasetError, match="already"):
        D.normalize(ds)


def test_val_with_train_stats_not_centred():
    tr = D.build([preprocess(generate(GaitParams(seed=1), duration_s=10.0))], ALL6, 80)
    va = D.build([generate(GaitParams(seed=2), duration_s=10.0)], ALL6, 80)  # unfiltered: V keeps gravity
    va = D.normalize(va, D.compute_stats(tr))
    assert np.max(np.abs(va.covered_rows().mean(axis=0))) > 0.1


def test_constant_channel_rejected():
    rec = _ramp_recording(100)
    rec = rec.replace(pelvis={**rec.pelvis, Channel.ML: Series(np.ones(100), 100.0)})
    with pytest.raises(D.DatasetError, match="ML"):
        D.normalize(D.make_pairs(rec, ALL6, 80))


def test_hybrid_reshape():
    x = np.random.default_rng(0).standard_normal((3, 80, 6))
    assert D.reshape_hybrid(x, 2).shape == (3, 2, 40, 6)
    np.testing.assert_array_equal(D.reshape_hybrid(x, 1)[:, 0], x)
    np.testing.assert_array_equal(D.flatten_hybrid(D.reshape_hybrid(x, 4)), x)
    with pytest.raises(D.DatasetError):
        D.reshape_hybrid(x, 3)


def test_split_ten_subjects():
    subs = [f"S{i:02d}" for i in range(10)]
    tr, va, te = D.split_subjects(subs, D.SplitSpec((0.7, 0.15, 0.15), 1))
    assert len(tr) == 7 and sorted([len(va), len(te)]) == [1, 2]
    assert not (set(tr) & set(va) or set(tr) & set(te) or set(va) & set(te))
    assert D.split_subjects(subs, D.SplitSpec(seed=1)) == (tr, va, te)


def test_split_needs_three_subjects():
    with pytest.raises(D.DatasetError):
        D.split_subjects(["a", "b"], D.SplitSpec())


def test_split_fills_every_requested_partition():
    tr, va, te = D.split_subjects(list("abcd"), D.SplitSpec((0.7, 0.15, 0.15)))
    assert len(tr) == 2 and len(va) == 1 and len(te) == 1


def test_split_keeps_trials_together(small_cohort):
    parts = D.split(small_cohort, D.SplitSpec((0.5, 0.25, 0.25), 3))
    subject_sets = [{r.subject_id for r in p} for p in parts]
    for p, s in zip(parts, subject_sets):
        assert len(p) == 2 * len(s)
    assert sum(len(p) for p in parts) == len(small_cohort)


def test_allocate_largest_remainder():
    assert D._allocate(10, (0.7, 0.15, 0.15)) == [7, 2, 1]
    assert D._allocate(12, (8 / 12, 2 / 12, 2 / 12)) == [8, 2, 2]


def test_cache_roundtrip(tmp_path):
    recs = [preprocess(generate(GaitParams(seed=s), duration_s=6.0, subject_id=f"S{s}")) for s in (1, 2)]
    ds = D.normalize(D.build(recs, [Channel.AP, Channel.ML, Channel.ROT], 40))
    D.save(ds, tmp_path / "d.gwds", provenance={"note": "x"})
    back = D.load(tmp_path / "d.gwds")
    np.testing.assert_array_equal(back.windows(), ds.windows())
    np.testing.assert_array_equal(back.y, ds.y)
    np.testing.assert_array_equal(back.t, ds.t)
    assert back.recording_ids == ds.recording_ids
    assert back.norm == ds.norm
    with pytest.raises(D.DatasetError):
        (tmp_path / "bad.gwds").write_bytes(b"nope")
        D.load(tmp_path / "bad.gwds")
