import numpy as np
import pytest

from gaitevents.signal import (ALL_CHANNELS, BandSpec, Channel, ColumnSchema, RecordingParseError, Series,
                               SignalError, _design, bandpass, frequency_response, load_recording, lowpass,
                               parse_channels, preprocess, save_recording)
from gaitevents.synthgait import GaitParams, generate
from oracles import sos_gain

FS = 100.0


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def _write_csv(path, header, rows):
    path.write_text(",".join(header) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows))


def test_csv_with_1000_rows_loads(tmp_path):
    header = [c.value for c in ALL_CHANNELS]
    rng = np.random.default_rng(0)
    _write_csv(tmp_path / "s1.csv", header, rng.standard_normal((1000, 8)).round(6).tolist())
    rec = load_recording(tmp_path / "s1.csv")
    assert rec.n == 1000
    assert rec.subject_id == "s1"
    assert all(len(rec.channel(c)) == 1000 for c in ALL_CHANNELS)


def test_missing_column_is_named(tmp_path):
    header = [c.value for c in ALL_CHANNELS if c is not Channel.ROT]
    _write_csv(tmp_path / "x.csv", header, [[0.0] * 7])
    with pytest.raises(RecordingParseError, match="ROT"):
        load_recording(tmp_path / "x.csv")


def test_header_only_is_empty(tmp_path):
    _write_csv(tmp_path / "x.csv", [c.value for c in ALL_CHANNELS], [])
    with pytest.raises(RecordingParseError, match="empty recording"):
        load_recording(tmp_path / "x.csv")


def test_bad_cell_and_ragged_row(tmp_path):
    header = [c.value for c in ALL_CHANNELS]
    _write_csv(tmp_path / "a.csv", header, [[0] * 8, [0] * 3 + ["abc"] + [0] * 4])
    with pytest.raises(RecordingParseError, match=r"'abc'.*row 1"):
        load_recording(tmp_path / "a.csv")
    _write_csv(tmp_path / "b.csv", header, [[0] * 8, [0] * 7])
    with pytest.raises(RecordingParseError, match="ragged"):
        load_recording(tmp_path / "b.csv")


def test_custom_schema(tmp_path):
    names = {c: f"col_{c.value.lower()}" for c in ALL_CHANNELS}
    (tmp_path / "schema.json").write_text(
        "{" + ",".join(f'"{c.value}": "{n}"' for c, n in names.items()) + "}")
    schema = ColumnSchema.from_json(tmp_path / "schema.json")
    _write_csv(tmp_path / "r.csv", list(names.values()), [[float(i)] * 8 for i in range(5)])
    rec = load_recording(tmp_path / "r.csv", schema)
    assert rec.channel(Channel.V).values.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]


def test_save_load_roundtrip_is_exact(tmp_path):
    rec = generate(GaitParams(seed=2), duration_s=6.0, subject_id="S9", trial="fast")
    save_recording(rec, tmp_path / "r.csv")
    back = load_recording(tmp_path / "r.csv", subject_id="S9", trial="fast")
    for c in ALL_CHANNELS:
        np.testing.assert_array_equal(back.channel(c).values, rec.channel(c).values)


def test_series_is_read_only():
    s = Series(np.arange(5.0), FS)
    with pytest.raises(ValueError):
        s.values[0] = 1.0


def test_parse_channels():
    assert parse_channels("AP,ML") == (Channel.AP, Channel.ML)
    with pytest.raises(ValueError, match="duplicate"):
        parse_channels(["AP", "AP"])
    with pytest.raises(ValueError):
        parse_channels(["FOOT_SAG_L"])


def test_dc_is_removed():
    out = bandpass(Series(np.full(1000, 3.0), FS))
    assert np.max(np.abs(out.values)) < 0.01 * 3.0


@pytest.mark.parametrize("freq, lo, hi", [(2.0, 0.95, 1.05), (20.0, 0.0, 0.10)])
def test_sinusoid_rms_matches_response_oracle(freq, lo, hi):
    t = np.arange(0, 10, 1 / FS)
    x = np.sin(2 * np.pi * freq * t)
    y = bandpass(Series(x, FS)).values
    ratio = _rms(y[100:-100]) / _rms(x[100:-100])
    assert lo <= ratio <= hi
    # zero-phase: gain is the squared magnitude response of the designed filter
    expected = sos_gain(_design(BandSpec(), FS), freq, FS) ** 2
    assert ratio == pytest.approx(expected, abs=0.02)


def test_frequency_response_matches_direct_evaluation():
    sos = _design(BandSpec(), FS)
    freqs = np.array([0.3, 1.0, 2.0, 5.0, 8.0, 20.0])
    got = frequency_response(BandSpec(), FS, freqs)
    want = [sos_gain(sos, f, FS) for f in freqs]
    np.testing.assert_allclose(np.abs(got), want, rtol=1e-9)


def test_filter_is_linear_and_time_symmetric():
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal(500), rng.standard_normal(500)
    fa, fb = bandpass(Series(a, FS)).values, bandpass(Series(b, FS)).values
    fab = bandpass(Series(2 * a - 3 * b, FS)).values
    np.testing.assert_allclose(fab, 2 * fa - 3 * fb, atol=1e-12)
    rev = bandpass(Series(a[::-1].copy(), FS)).values
    np.testing.assert_allclose(rev[::-1], fa, atol=1e-12)


def test_band_validation():
    with pytest.raises(SignalError):
        BandSpec(0.5, 60.0).check(FS)
    with pytest.raises(SignalError):
        BandSpec(6.0, 0.5).check(FS)


def test_lowpass_passes_dc():
    out = lowpass(Series(np.full(400, 2.0), FS), 5.0)
    np.testing.assert_allclose(out.values, 2.0, atol=1e-9)


def test_preprocess_filters_pelvis_only():
    rec = generate(GaitParams(seed=1), duration_s=6.0)
    out = preprocess(rec)
    assert abs(out.channel(Channel.V).values.mean()) < 0.05  # gravity offset removed
    np.testing.assert_array_equal(out.channel(Channel.FOOT_SAG_R).values, rec.channel(Channel.FOOT_SAG_R).values)
    assert out.truth_events == rec.truth_events
