"""The sixteen named architectures and attention profiling."""
from __future__ import annotations

import csv
import io

import numpy as np

from .dataset import WindowedDataset
from .neuralnet import (GRU, LSTM, Bidirectional, Concat, Conv1D, Dense, Flatten, LinearActivation,
                        MaxPool1D, Model, ReLU, Reshape, SelfAttention, Sequential, TimeDistributed)

ARCHITECTURES = (
    "MLP", "CNN", "LSTM", "GRU", "BiLSTM", "BiGRU", "stacked-LSTM", "stacked-GRU",
    "stacked-LSTM-Att", "stacked-GRU-Att", "CNN-LSTM", "CNN-GRU", "CNN-BiLSTM", "CNN-BiGRU",
    "CNN-BiLSTM-Att", "CNN-BiGRU-Att",
)

DEFAULTS = {
    "mlp_units": 100,
    "cnn_dense_units": 50,
    "rnn_units": 100,
    "hybrid_units": 600,
    "conv_filters": 64,
    "kernel_size": 5,
    "pool_size": 2,
    "segments": 2,
}


class UnknownArchitecture(KeyError):
    def __str__(self) -> str:
        return f"unknown architecture {self.args[0]!r}; valid ids: {', '.join(ARCHITECTURES)}"


def _cell(kind: str, in_features: int, units: int, seq: bool):
    return (LSTM if kind == "LSTM" else GRU)(in_features, units, return_sequences=seq)


def _head(features: int) -> list:
    return [Dense(features, 2), LinearActivation()]


def _conv_block(c: int, length: int, h: dict) -> tuple[Sequential, int]:
    conv = Conv1D(c, h["conv_filters"], h["kernel_size"])
    lo = conv.out_length(length)
    pooled = lo // h["pool_size"]
    if pooled < 1:
        raise ValueError(f"window of {length} too short for kernel {h['kernel_size']} and pool {h['pool_size']}")
    return Sequential([conv, ReLU(), MaxPool1D(h["pool_size"]), Flatten()]), pooled * h["conv_filters"]


def build(arch: str, input_channels: int = 6, w: int = 80, *, seed: int | None = None, **overrides) -> Model:
    """Layer graph for ``arch``; every graph maps ``(batch, w, c)`` windows to ``(batch, 2)``.

    ``overrides`` replace entries of :data:`DEFAULTS` (e.g. ``rnn_units``,
    ``hybrid_units``, ``conv_filters``).
    """
    if arch not in ARCHITECTURES:
        raise UnknownArchitecture(arch)
    unknown = set(overrides) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"unknown hyperparameters {sorted(unknown)}; valid: {sorted(DEFAULTS)}")
    h = {**DEFAULTS, **overrides}
    c = input_channels
    layers: list
    if arch == "MLP":
        branches = [Sequential([Dense(w, h["mlp_units"]), ReLU()]) for _ in range(c)]
        layers = [Concat(branches)] + _head(c * h["mlp_units"])
    elif arch == "CNN":
        block, feats = _conv_block(c, w, h)
        layers = list(block.layers) + [Dense(feats, h["cnn_dense_units"]), ReLU()] + _head(h["cnn_dense_units"])
    elif arch.startswith("CNN-"):
        rest = arch[4:]
        bi = rest.startswith("Bi")
        att = rest.endswith("-Att")
        kind = "LSTM" if "LSTM" in rest else "GRU"
        seg = h["segments"]
        if w % seg:
            raise ValueError(f"window {w} not divisible into {seg} segments")
        block, feats = _conv_block(c, w // seg, h)
        u = h["hybrid_units"]
        if bi:
            rnn = Bidirectional(_cell(kind, feats, u, att), _cell(kind, feats, u, att))
            width = 2 * u
        else:
            rnn = _cell(kind, feats, u, att)
            width = u
        layers = [Reshape((seg, w // seg, c)), TimeDistributed(block), rnn]
        if att:
            layers.append(SelfAttention(width))
        layers += _head(width)
    else:
        stacked = arch.startswith("stacked-")
        att = arch.endswith("-Att")
        kind = "LSTM" if "LSTM" in arch else "GRU"
        bi = arch.startswith("Bi")
        u = h["rnn_units"]
        if stacked:
            layers = [_cell(kind, c, u, True), _cell(kind, u, u, att)]
            if att:
                layers.append(SelfAttention(u))
            layers += _head(u)
        elif bi:
            layers = [Bidirectional(_cell(kind, c, u, False), _cell(kind, c, u, False))] + _head(2 * u)
        else:
            layers = [_cell(kind, c, u, False)] + _head(u)
    model = Model(Sequential(layers), arch=arch, input_channels=c, w=w,
                  hyper={k: v for k, v in overrides.items()})
    if seed is not None:
        model.initialize(seed)
    return model


def parameter_counts(input_channels: int = 6, w: int = 80, **overrides) -> dict[str, int]:
    return {a: build(a, input_channels, w, **overrides).param_count for a in ARCHITECTURES}


class NoAttention(ValueError):
    pass


def attention_profile(model: Model, ds: WindowedDataset, batch_size: int = 1024) -> np.ndarray:
    """Mean attention weight per position of the attended axis, over all pairs of ``ds``."""
    att = model.attention_layer()
    if att is None:
        raise NoAttention(f"model {model.arch} has no attention layer")
    if len(ds) == 0:
        raise ValueError("attention profile of an empty dataset")
    total = None
    for s in range(0, len(ds), batch_size):
        idx = np.arange(s, min(len(ds), s + batch_size))
        model.forward(ds.windows(idx))
        part = att.last_weights.sum(axis=0)
        total = part if total is None else total + part
    model.net.clear()
    return total / len(ds)


def profile_csv(profile: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestep", "weight"])
    for i, v in enumerate(profile, start=1):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()
