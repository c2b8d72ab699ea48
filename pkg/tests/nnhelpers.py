"""Small builders shared by the neural-network tests."""
import numpy as np

from gaitevents.dataset import NormStats, WindowedDataset
from gaitevents.neuralnet import (GRU, LSTM, Bidirectional, Concat, Conv1D, Dense, Flatten, MaxPool1D, ReLU,
                                  SelfAttention, Sequential, TimeDistributed)
from gaitevents.signal import PELVIS_CHANNELS


def array_dataset(x: np.ndarray, y: np.ndarray, normalised: bool = True) -> WindowedDataset:
    """Dataset whose windows are exactly ``x`` (count, w, c)."""
    count, w, c = x.shape
    return WindowedDataset(
        rows=x.reshape(count * w, c).astype(np.float64), starts=np.arange(count, dtype=np.int64) * w,
        y=np.asarray(y, dtype=np.float64), t=np.arange(count, dtype=np.int64) + w,
        source=np.zeros(count, dtype=np.int64), recording_ids=("toy",), subject_ids=("toy",),
        channels=tuple(PELVIS_CHANNELS[:c]), w=w, source_n=(count + w,),
        norm=NormStats(np.zeros(c), np.ones(c)) if normalised else None)


def layer_cases(rng: np.random.Generator):
    """(name, layer, input) for every layer kind at a random small shape."""
    b = int(rng.integers(2, 4))
    t = int(rng.integers(3, 6))
    f = int(rng.integers(2, 4))
    u = int(rng.integers(2, 4))
    L = int(rng.integers(6, 10))
    seq = rng.standard_normal((b, t, f))
    block = Sequential([Conv1D(f, 2, 3), ReLU(), MaxPool1D(2), Flatten()])
    cases = [
        ("Dense", Dense(f, u), rng.standard_normal((b, f))),
        ("Conv1D", Conv1D(f, u, 3), rng.standard_normal((b, L, f))),
        ("Conv1D-stride2", Conv1D(f, u, 3, stride=2), rng.standard_normal((b, L, f))),
        # distinct values keep the argmax away from ties
        ("MaxPool1D", MaxPool1D(2), rng.permutation(b * L * f).reshape(b, L, f) / 7.0),
        ("LSTM", LSTM(f, u), seq),
        ("LSTM-seq", LSTM(f, u, return_sequences=True), seq),
        ("GRU", GRU(f, u), seq),
        ("GRU-seq", GRU(f, u, return_sequences=True), seq),
        ("Bidirectional", Bidirectional(GRU(f, u), GRU(f, u)), seq),
        ("Bidirectional-LSTM-seq", Bidirectional(LSTM(f, u, True), LSTM(f, u, True)), seq),
        ("TimeDistributed", TimeDistributed(block), rng.standard_normal((b, 2, L, f))),
        ("SelfAttention", SelfAttention(f), seq),
        ("Concat", Concat([Sequential([Dense(L, u), ReLU()]) for _ in range(f)]),
         rng.standard_normal((b, L, f))),
    ]
    for _, layer, _ in cases:
        layer.init(rng)
        # nonzero biases and attention query exercise every path
        for p in layer.params:
            p += 0.1 * rng.standard_normal(p.shape)
        for child in layer.children():
            for p in child.params:
                p += 0.1 * rng.standard_normal(p.shape)
    return cases
