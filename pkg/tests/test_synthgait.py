import numpy as np
import pytest

from gaitevents.events import Kind, Side
from gaitevents.signal import ALL_CHANNELS, Channel
from gaitevents.synthgait import GaitParams, SynthError, generate, generate_cohort


def test_same_seed_is_bit_identical():
    a = generate(GaitParams(seed=4), duration_s=10.0)
    b = generate(GaitParams(seed=4), duration_s=10.0)
    for c in ALL_CHANNELS:
        assert a.channel(c).values.tobytes() == b.channel(c).values.tobytes()
    assert a.truth_events == b.truth_events


def test_right_stance_duration():
    rec = generate(GaitParams(stride_s=1.1, stance_fraction=0.6, speed_jitter=0.0, seed=1), duration_s=30.0)
    hs = rec.truth_events.times(Kind.HS, Side.R)
    to = rec.truth_events.times(Kind.TO, Side.R)
    durations = [int(to[to > h][0] - h) for h in hs if np.any(to > h)]
    assert durations and all(abs(d - 66) <= 1 for d in durations)


def test_cohort_counts_and_groups():
    recs = generate_cohort(3, 2, GaitParams(seed=2), duration_s=8.0)
    assert len(recs) == 10
    assert len({r.subject_id for r in recs}) == 5
    assert sum(r.group == "patient" for r in recs) == 4
    assert {r.trial for r in recs} == {"preferred", "fast"}


def test_cohort_regeneration_identical():
    a = generate_cohort(2, 1, GaitParams(seed=9), duration_s=8.0)
    b = generate_cohort(2, 1, GaitParams(seed=9), duration_s=8.0)
    assert [r.recording_id for r in a] == [r.recording_id for r in b]
    assert all(np.array_equal(x.matrix(ALL_CHANNELS), y.matrix(ALL_CHANNELS)) for x, y in zip(a, b))


def test_patients_have_more_tilt_variance():
    h = generate_cohort(6, 0, GaitParams(seed=1), duration_s=20.0)
    p = generate_cohort(0, 6, GaitParams(seed=1), duration_s=20.0)
    var = lambda recs: np.mean([np.var(r.channel(Channel.TIL).values) for r in recs])  # noqa: E731
    assert var(p) > 1.2 * var(h)


def test_invalid_params():
    with pytest.raises(SynthError):
        GaitParams(stance_fraction=0.3, dls_fraction=0.4)
    with pytest.raises(SynthError):
        generate(GaitParams(), duration_s=1.0)
