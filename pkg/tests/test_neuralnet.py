import json

import numpy as np
import pytest

from gaitevents.neuralnet import (GRU, LSTM, Dense, LinearActivation, MaxPool1D, Model, SelfAttention, Sequential,
                                  ShapeError, TrainConfig, TrainingError, EarlyStopping, load_checkpoint, mse,
                                  predict, save_checkpoint, train)
from gaitevents.neuralnet import model as model_mod
from gaitevents.neuralnet.gradcheck import check_layer, rel_error
from gaitevents.neuralnet.layers import Flatten, sigmoid
from gaitevents.zoo import build
from nnhelpers import array_dataset, layer_cases
from oracles import conv1d_loops


def test_dense_zero_input_zero_bias():
    d = Dense(4, 3)
    d.init(np.random.default_rng(0))
    assert np.all(d.forward(np.zeros((2, 4))) == 0)


def test_maxpool_example_and_gradient_support():
    pool = MaxPool1D(2)
    x = np.array([1.0, 5.0, 2.0, 8.0]).reshape(1, 4, 1)
    assert pool.forward(x).ravel().tolist() == [5.0, 8.0]
    g = pool.backward(np.ones((1, 2, 1))).ravel()
    assert g.tolist() == [0.0, 1.0, 0.0, 1.0]


def test_gru_with_zero_weights_stays_zero():
    gru = GRU(3, 4, return_sequences=True)
    h = gru.forward(np.random.default_rng(1).standard_normal((2, 7, 3)))
    assert np.all(h == 0)


def test_linear_activation_passes_gradient():
    g = np.random.default_rng(2).standard_normal((3, 2))
    lin = LinearActivation()
    lin.forward(g)
    assert np.array_equal(lin.backward(g), g)


def test_conv_matches_loop_oracle():
    from gaitevents.neuralnet import Conv1D
    rng = np.random.default_rng(3)
    for stride in (1, 2):
        conv = Conv1D(3, 4, 3, stride=stride)
        conv.init(rng)
        conv.params[1][...] = rng.standard_normal(4)
        x = rng.standard_normal((2, 11, 3))
        np.testing.assert_allclose(conv.forward(x), conv1d_loops(x, *conv.params, stride=stride), atol=1e-12)


def test_lstm_matches_step_equations():
    rng = np.random.default_rng(4)
    lstm = LSTM(3, 2, return_sequences=True)
    lstm.init(rng)
    Wx, Wh, b = lstm.params
    x = rng.standard_normal((1, 5, 3))
    h = np.zeros(2)
    c = np.zeros(2)
    want = []
    for t in range(5):
        z = x[0, t] @ Wx + h @ Wh + b
        i, f, g, o = z[:2], z[2:4], z[4:6], z[6:]
        c = sigmoid(f) * c + sigmoid(i) * np.tanh(g)
        h = sigmoid(o) * np.tanh(c)
        want.append(h)
    np.testing.assert_allclose(lstm.forward(x)[0], want, atol=1e-12)
    assert np.all(b[2:4] == 1.0)  # forget bias starts at one


def test_attention_weights_are_softmax():
    rng = np.random.default_rng(5)
    att = SelfAttention(4)
    att.init(rng)
    att.forward(rng.standard_normal((3, 6, 4)))
    np.testing.assert_allclose(att.last_weights.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(att.last_weights > 0)


def test_shape_errors():
    with pytest.raises(ShapeError):
        Dense(3, 2).forward(np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        LSTM(3, 2).forward(np.zeros((2, 3)))


@pytest.mark.parametrize("name", [c[0] for c in layer_cases(np.random.default_rng(0))])
def test_gradients_match_finite_differences(name):
    case = {n: (layer, x) for n, layer, x in layer_cases(np.random.default_rng(10))}[name]
    errs = check_layer(*case, seed=1)
    assert max(errs.values()) < 1e-6, errs


def test_rel_error_definition():
    assert rel_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert rel_error(np.array([1.0, 2.0]), np.array([1.0, 1.0])) == pytest.approx(0.5)


def _linear_task(n=256, seed=0):
    x = np.random.default_rng(seed).standard_normal((n, 2, 1))
    return array_dataset(x, x[:, :, 0])


def _dense_model(seed=1):
    return Model(Sequential([Flatten(), Dense(2, 2), LinearActivation()]), arch="toy", input_channels=1,
                 w=2).initialize(seed)


def test_dense_learns_identity():
    tr, va = _linear_task(seed=0), _linear_task(seed=1)
    model, hist = train(_dense_model(), tr, va, TrainConfig(lr=0.05, batch_size=32, max_epochs=50, patience=50))
    assert min(hist.train_loss) < 1e-3
    # predictions on the training pairs reproduce the recorded loss of the restored epoch
    loss, _ = mse(predict(model, tr), tr.y)
    assert loss == pytest.approx(hist.train_loss[hist.best_epoch - 1], abs=1e-9)


def test_same_seed_same_history():
    tr, va = _linear_task(seed=0), _linear_task(seed=1)
    cfg = TrainConfig(lr=0.01, batch_size=16, max_epochs=5, seed=3)
    _, h1 = train(_dense_model(), tr, va, cfg)
    _, h2 = train(_dense_model(), tr, va, cfg)
    assert h1 == h2


def test_patience_semantics(monkeypatch):
    val = iter([5.0, 4.0, 3.0] + [3.0 + k for k in range(1, 50)])
    calls = {"n": 0}

    def fake(model, ds, batch_size=1024):
        calls["n"] += 1
        return 1.0 if calls["n"] % 2 else next(val)

    monkeypatch.setattr(model_mod, "evaluate_loss", fake)
    tr, va = _linear_task(32), _linear_task(32, seed=1)
    _, hist = train(_dense_model(), tr, va, TrainConfig(max_epochs=100, patience=10))
    assert hist.epochs == 13 and hist.best_epoch == 3 and hist.stopped_early


def test_early_stopping_counts_one_based():
    es = EarlyStopping(2)
    assert [es.update(e, v) for e, v in enumerate([3.0, 2.0, 2.5, 2.6], start=1)] == [False, False, False, True]


def test_non_finite_loss_is_reported():
    tr = _linear_task(32)
    bad = array_dataset(tr.windows(), np.full((32, 2), np.inf))
    with pytest.raises(TrainingError, match="epoch 1, batch 0"):
        train(_dense_model(), bad, tr, TrainConfig(batch_size=32))


def test_unnormalised_data_rejected():
    x = np.zeros((4, 2, 1))
    with pytest.raises(TrainingError):
        train(_dense_model(), array_dataset(x, x[:, :, 0], False), array_dataset(x, x[:, :, 0]))


def test_predict_empty_and_finite():
    m = _dense_model()
    m.norm = None
    empty = array_dataset(np.zeros((0, 2, 1)), np.zeros((0, 2)))
    assert predict(m, empty).shape == (0, 2)
    out = predict(m, _linear_task(10))
    assert np.all(np.isfinite(out))


def test_checkpoint_roundtrip(tmp_path):
    m = build("CNN-BiGRU-Att", 3, 20, seed=4, hybrid_units=5, conv_filters=3)
    m.norm = _linear_task(4).norm
    save_checkpoint(m, tmp_path / "ck", extra={"note": 1})
    back, manifest = load_checkpoint(tmp_path / "ck")
    assert manifest["architecture"] == "CNN-BiGRU-Att" and manifest["note"] == 1
    for (n1, a), (n2, b) in zip(m.named_parameters(), back.named_parameters()):
        assert n1 == n2 and np.array_equal(a, b)
    x = np.random.default_rng(0).standard_normal((2, 20, 3))
    assert np.array_equal(m.forward(x), back.forward(x))
    blob = (tmp_path / "ck" / "model.bin").read_bytes()
    (tmp_path / "ck" / "model.bin").write_bytes(bytes([blob[0] ^ 0xFF]) + blob[1:])
    with pytest.raises(TrainingError, match="checksum"):
        load_checkpoint(tmp_path / "ck")
    table = json.loads((tmp_path / "ck" / "model.json").read_text())["tensors"]
    assert table[0]["offset"] == 0
