"""Layers with explicit forward/backward passes over float64 numpy arrays.

Inputs are batch-first. Sequence layers take ``(batch, time, features)``.
``forward`` caches whatever ``backward`` needs; ``backward`` takes the
gradient of the loss with respect to the layer output, stores parameter
gradients in ``self.grads`` (aligned with ``self.params``) and returns the
gradient with respect to the input.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    pass


class StateError(RuntimeError):
    pass


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    limit = math.sqrt(3.0 / max(1, fan_in))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Layer:
    kind = "Layer"
    param_names: tuple[str, ...] = ()

    def __init__(self) -> None:
        self.params: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []
        self._cache = None

    # subclasses override -------------------------------------------------
    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def init(self, rng: np.random.Generator) -> None:
        pass

    def describe(self) -> dict:
        return {"kind": self.kind}

    # helpers ---------------------------------------------------------------
    def children(self) -> list["Layer"]:
        return []

    def _need_cache(self):
        if self._cache is None:
            raise StateError(f"{self.kind}: backward called before forward")
        return self._cache

    def _check(self, x: np.ndarray, ndim: int, last: int | None = None) -> None:
        if x.ndim != ndim or (last is not None and x.shape[-1] != last):
            want = f"{ndim}-d" + (f" with last axis {last}" if last is not None else "")
            raise ShapeError(f"{self.kind}: expected {want} input, got shape {x.shape}")

    def clear(self) -> None:
        self._cache = None
        for ch in self.children():
            ch.clear()

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.params))


class Dense(Layer):
    kind = "Dense"
    param_names = ("W", "b")

    def __init__(self, in_features: int, units: int) -> None:
        super().__init__()
        self.in_features, self.units = in_features, units
        self.params = [np.zeros((in_features, units)), np.zeros(units)]

    def init(self, rng):
        self.params[0][...] = _uniform(rng, self.in_features, self.params[0].shape)
        self.params[1][...] = 0.0

    def forward(self, x):
        if x.ndim < 2 or x.shape[-1] != self.in_features:
            raise ShapeError(f"Dense: expected (..., {self.in_features}) input, got shape {x.shape}")
        self._cache = x
        return x @ self.params[0] + self.params[1]

    def backward(self, grad):
        x = self._need_cache()
        x2 = x.reshape(-1, self.in_features)
        g2 = grad.reshape(-1, self.units)
        self.grads = [x2.T @ g2, g2.sum(axis=0)]
        return grad @ self.params[0].T

    def describe(self):
        return {"kind": self.kind, "in_features": self.in_features, "units": self.units}


class ReLU(Layer):
    kind = "ReLU"

    def forward(self, x):
        self._cache = x > 0
        return np.where(self._cache, x, 0.0)

    def backward(self, grad):
        return grad * self._need_cache()


class LinearActivation(Layer):
    kind = "LinearActivation"

    def forward(self, x):
        self._cache = True
        return x

    def backward(self, grad):
        self._need_cache()
        return grad


class Conv1D(Layer):
    """Valid 1-d convolution over ``(batch, length, channels)``."""
    kind = "Conv1D"
    param_names = ("W", "b")

    def __init__(self, in_channels: int, filters: int, kernel_size: int, stride: int = 1) -> None:
        super().__init__()
        self.in_channels, self.filters, self.kernel_size, self.stride = in_channels, filters, kernel_size, stride
        self.params = [np.zeros((kernel_size, in_channels, filters)), np.zeros(filters)]

    def init(self, rng):
        fan_in = self.kernel_size * self.in_channels
        self.params[0][...] = _uniform(rng, fan_in, self.params[0].shape)
        self.params[1][...] = 0.0

    def out_length(self, length: int) -> int:
        return (length - self.kernel_size) // self.stride + 1

    def forward(self, x):
        self._check(x, 3, self.in_channels)
        if x.shape[1] < self.kernel_size:
            raise ShapeError(f"Conv1D: input length {x.shape[1]} shorter than kernel {self.kernel_size}")
        # (B, L', C, k) -> (B, L', k, C)
        cols = sliding_window_view(x, self.kernel_size, axis=1)[:, :: self.stride].transpose(0, 1, 3, 2)
        B, Lo = cols.shape[:2]
        cols2 = cols.reshape(B * Lo, self.kernel_size * self.in_channels)
        W2 = self.params[0].reshape(-1, self.filters)
        self._cache = (x.shape, cols2, Lo)
        return (cols2 @ W2).reshape(B, Lo, self.filters) + self.params[1]

    def backward(self, grad):
        shape, cols2, Lo = self._need_cache()
        B = shape[0]
        g2 = grad.reshape(B * Lo, self.filters)
        W2 = self.params[0].reshape(-1, self.filters)
        self.grads = [(cols2.T @ g2).reshape(self.params[0].shape), g2.sum(axis=0)]
        dcols = (g2 @ W2.T).reshape(B, Lo, self.kernel_size, self.in_channels)
        dx = np.zeros(shape)
        span = self.stride * (Lo - 1) + 1
        for j in range(self.kernel_size):
            dx[:, j:j + span:self.stride, :] += dcols[:, :, j, :]
        return dx

    def describe(self):
        return {"kind": self.kind, "in_channels": self.in_channels, "filters": self.filters,
                "kernel_size": self.kernel_size, "stride": self.stride}


class MaxPool1D(Layer):
    kind = "MaxPool1D"

    def __init__(self, pool_size: int = 2) -> None:
        super().__init__()
        self.pool_size = pool_size

    def forward(self, x):
        self._check(x, 3)
        B, L, C = x.shape
        Lo = L // self.pool_size
        if Lo == 0:
            raise ShapeError(f"MaxPool1D: input length {L} shorter than pool {self.pool_size}")
        win = x[:, : Lo * self.pool_size].reshape(B, Lo, self.pool_size, C)
        arg = win.argmax(axis=2)
        self._cache = (x.shape, arg)
        return np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, grad):
        shape, arg = self._need_cache()
        B, L, C = shape
        Lo = arg.shape[1]
        dwin = np.zeros((B, Lo, self.pool_size, C))
        np.put_along_axis(dwin, arg[:, :, None, :], grad[:, :, None, :], axis=2)
        dx = np.zeros(shape)
        dx[:, : Lo * self.pool_size] = dwin.reshape(B, Lo * self.pool_size, C)
        return dx

    def describe(self):
        return {"kind": self.kind, "pool_size": self.pool_size}


class Flatten(Layer):
    kind = "Flatten"

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._need_cache())


class Reshape(Layer):
    """Reshape everything after the batch axis to ``target``."""
    kind = "Reshape"

    def __init__(self, target: Sequence[int]) -> None:
        super().__init__()
        self.target = tuple(int(t) for t in target)

    def forward(self, x):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.target)):
            raise ShapeError(f"Reshape: cannot reshape {x.shape[1:]} to {self.target}")
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.target)

    def backward(self, grad):
        return grad.reshape(self._need_cache())

    def describe(self):
        return {"kind": self.kind, "target": list(self.target)}


class Sequential(Layer):
    kind = "Sequential"

    def __init__(self, layers: Sequence[Layer]) -> None:
        super().__init__()
        self.layers = list(layers)

    def children(self):
        return self.layers

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def init(self, rng):
        for layer in self.layers:
            layer.init(rng)

    def describe(self):
        return {"kind": self.kind, "layers": [l.describe() for l in self.layers]}


class Concat(Layer):
    """Per-channel branches over ``(batch, time, channels)``, outputs concatenated.

    Branch ``j`` sees ``x[:, :, j]`` as a ``(batch, time)`` array.
    """
    kind = "Concat"

    def __init__(self, branches: Sequence[Layer]) -> None:
        super().__init__()
        self.branches = list(branches)

    def children(self):
        return self.branches

    def init(self, rng):
        for b in self.branches:
            b.init(rng)

    def forward(self, x):
        self._check(x, 3, len(self.branches))
        outs = [b.forward(x[:, :, j]) for j, b in enumerate(self.branches)]
        self._cache = (x.shape, [o.shape[-1] for o in outs])
        return np.concatenate(outs, axis=-1)

    def backward(self, grad):
        shape, widths = self._need_cache()
        dx = np.zeros(shape)
        cuts = np.cumsum([0] + widths)
        for j, b in enumerate(self.branches):
            dx[:, :, j] = b.backward(grad[..., cuts[j]:cuts[j + 1]])
        return dx

    def describe(self):
        return {"kind": self.kind, "branches": [b.describe() for b in self.branches]}


class TimeDistributed(Layer):
    """Apply ``inner`` independently to every slice along axis 1."""
    kind = "TimeDistributed"

    def __init__(self, inner: Layer) -> None:
        super().__init__()
        self.inner = inner

    def children(self):
        return [self.inner]

    def init(self, rng):
        self.inner.init(rng)

    def forward(self, x):
        if x.ndim < 3:
            raise ShapeError(f"TimeDistributed: expected (batch, steps, ...) input, got shape {x.shape}")
        B, S = x.shape[:2]
        y = self.inner.forward(x.reshape((B * S,) + x.shape[2:]))
        self._cache = (B, S)
        return y.reshape((B, S) + y.shape[1:])

    def backward(self, grad):
        B, S = self._need_cache()
        dx = self.inner.backward(grad.reshape((B * S,) + grad.shape[2:]))
        return dx.reshape((B, S) + dx.shape[1:])

    def describe(self):
        return {"kind": self.kind, "inner": self.inner.describe()}


class LSTM(Layer):
    """Gate order (input, forget, candidate, output); sigmoid gates, tanh cell."""
    kind = "LSTM"
    param_names = ("W", "U", "b")

    def __init__(self, in_features: int, units: int, return_sequences: bool = False) -> None:
        super().__init__()
        self.in_features, self.units, self.return_sequences = in_features, units, return_sequences
        self.params = [np.zeros((in_features, 4 * units)), np.zeros((units, 4 * units)), np.zeros(4 * units)]

    def init(self, rng):
        u = self.units
        self.params[0][...] = _uniform(rng, self.in_features, self.params[0].shape)
        self.params[1][...] = _uniform(rng, u, self.params[1].shape)
        self.params[2][...] = 0.0
        self.params[2][u:2 * u] = 1.0

    def forward(self, x, state=None):
        self._check(x, 3, self.in_features)
        W, U, b = self.params
        B, T, _ = x.shape
        u = self.units
        h = np.zeros((B, u)) if state is None else state[0]
        c = np.zeros((B, u)) if state is None else state[1]
        xw = x @ W + b
        hs = np.empty((B, T + 1, u))
        cs = np.empty((B, T + 1, u))
        gates = np.empty((B, T, 4 * u))
        hs[:, 0], cs[:, 0] = h, c
        for t in range(T):
            z = xw[:, t] + hs[:, t] @ U
            i = sigmoid(z[:, :u])
            f = sigmoid(z[:, u:2 * u])
            g = np.tanh(z[:, 2 * u:3 * u])
            o = sigmoid(z[:, 3 * u:])
            cs[:, t + 1] = f * cs[:, t] + i * g
            hs[:, t + 1] = o * np.tanh(cs[:, t + 1])
            gates[:, t] = np.concatenate([i, f, g, o], axis=1)
        self._cache = (x, hs, cs, gates)
        return hs[:, 1:].copy() if self.return_sequences else hs[:, -1].copy()

    def backward(self, grad):
        x, hs, cs, gates = self._need_cache()
        W, U, _ = self.params
        B, T, _ = x.shape
        u = self.units
        if self.return_sequences:
            gh_seq = grad
        else:
            gh_seq = np.zeros((B, T, u))
            gh_seq[:, -1] = grad
        dz = np.empty((B, T, 4 * u))
        dh = np.zeros((B, u))
        dc = np.zeros((B, u))
        for t in reversed(range(T)):
            i, f, g, o = (gates[:, t, k * u:(k + 1) * u] for k in range(4))
            dh = dh + gh_seq[:, t]
            tc = np.tanh(cs[:, t + 1])
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc ** 2)
            di = dc * g
            dg = dc * i
            df = dc * cs[:, t]
            dz[:, t] = np.concatenate([di * i * (1 - i), df * f * (1 - f), dg * (1 - g ** 2), do * o * (1 - o)], axis=1)
            dc = dc * f
            dh = dz[:, t] @ U.T
        dz2 = dz.reshape(B * T, 4 * u)
        self.grads = [x.reshape(B * T, -1).T @ dz2, hs[:, :-1].reshape(B * T, u).T @ dz2, dz2.sum(axis=0)]
        return dz @ W.T

    def describe(self):
        return {"kind": self.kind, "in_features": self.in_features, "units": self.units,
                "return_sequences": self.return_sequences}


class GRU(Layer):
    """Gate order (update, reset, candidate); reset applied before the recurrent product.

    ``h_t = z * h_{t-1} + (1 - z) * tanh(x W_h + (r * h_{t-1}) U_h + b_h)``
    """
    kind = "GRU"
    param_names = ("W", "U", "b")

    def __init__(self, in_features: int, units: int, return_sequences: bool = False) -> None:
        super().__init__()
        self.in_features, self.units, self.return_sequences = in_features, units, return_sequences
        self.params = [np.zeros((in_features, 3 * units)), np.zeros((units, 3 * units)), np.zeros(3 * units)]

    def init(self, rng):
        self.params[0][...] = _uniform(rng, self.in_features, self.params[0].shape)
        self.params[1][...] = _uniform(rng, self.units, self.params[1].shape)
        self.params[2][...] = 0.0

    def forward(self, x, state=None):
        self._check(x, 3, self.in_features)
        W, U, b = self.params
        B, T, _ = x.shape
        u = self.units
        xw = x @ W + b
        hs = np.empty((B, T + 1, u))
        hs[:, 0] = 0.0 if state is None else state
        zs = np.empty((B, T, u))
        rs = np.empty((B, T, u))
        cands = np.empty((B, T, u))
        for t in range(T):
            h = hs[:, t]
            zr = sigmoid(xw[:, t, :2 * u] + h @ U[:, :2 * u])
            z, r = zr[:, :u], zr[:, u:]
            cand = np.tanh(xw[:, t, 2 * u:] + (r * h) @ U[:, 2 * u:])
            hs[:, t + 1] = z * h + (1.0 - z) * cand
            zs[:, t], rs[:, t], cands[:, t] = z, r, cand
        self._cache = (x, hs, zs, rs, cands)
        return hs[:, 1:].copy() if self.return_sequences else hs[:, -1].copy()

    def backward(self, grad):
        x, hs, zs, rs, cands = self._need_cache()
        W, U, _ = self.params
        B, T, _ = x.shape
        u = self.units
        Uz, Ur, Uh = U[:, :u], U[:, u:2 * u], U[:, 2 * u:]
        if self.return_sequences:
            gh_seq = grad
        else:
            gh_seq = np.zeros((B, T, u))
            gh_seq[:, -1] = grad
        dpre = np.empty((B, T, 3 * u))  # grads of (z, r, candidate) pre-activations
        rh = rs * hs[:, :-1]
        dh = np.zeros((B, u))
        for t in reversed(range(T)):
            h = hs[:, t]
            z, r, cand = zs[:, t], rs[:, t], cands[:, t]
            dh = dh + gh_seq[:, t]
            dcand = dh * (1.0 - z)
            dz = dh * (h - cand)
            da_h = dcand * (1.0 - cand ** 2)
            drh = da_h @ Uh.T
            dr = drh * h
            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            dpre[:, t, :u], dpre[:, t, u:2 * u], dpre[:, t, 2 * u:] = da_z, da_r, da_h
            dh = dh * z + drh * r + da_z @ Uz.T + da_r @ Ur.T
        d2 = dpre.reshape(B * T, 3 * u)
        hprev = hs[:, :-1].reshape(B * T, u)
        dU = np.empty_like(U)
        dU[:, :2 * u] = hprev.T @ d2[:, :2 * u]
        dU[:, 2 * u:] = rh.reshape(B * T, u).T @ d2[:, 2 * u:]
        self.grads = [x.reshape(B * T, -1).T @ d2, dU, d2.sum(axis=0)]
        return dpre @ W.T

    def describe(self):
        return {"kind": self.kind, "in_features": self.in_features, "units": self.units,
                "return_sequences": self.return_sequences}


class Bidirectional(Layer):
    """Forward layer on the input, backward layer on the time-reversed input; outputs concatenated.

    With ``return_sequences`` the backward outputs are re-reversed so both
    halves are aligned with input time.
    """
    kind = "Bidirectional"

    def __init__(self, forward_layer: Layer, backward_layer: Layer) -> None:
        super().__init__()
        self.fwd, self.bwd = forward_layer, backward_layer
        if getattr(self.fwd, "return_sequences", None) != getattr(self.bwd, "return_sequences", None):
            raise ShapeError("Bidirectional: inner layers disagree on return_sequences")
        self.return_sequences = self.fwd.return_sequences
        self.units = self.fwd.units + self.bwd.units

    def children(self):
        return [self.fwd, self.bwd]

    def init(self, rng):
        self.fwd.init(rng)
        self.bwd.init(rng)

    def forward(self, x):
        yf = self.fwd.forward(x)
        yb = self.bwd.forward(x[:, ::-1])
        if self.return_sequences:
            yb = yb[:, ::-1]
        self._cache = yf.shape[-1]
        return np.concatenate([yf, yb], axis=-1)

    def backward(self, grad):
        k = self._need_cache()
        gf, gb = grad[..., :k], grad[..., k:]
        if self.return_sequences:
            gb = gb[:, ::-1]
        return self.fwd.backward(gf) + self.bwd.backward(gb)[:, ::-1]

    def describe(self):
        return {"kind": self.kind, "forward": self.fwd.describe(), "backward": self.bwd.describe()}


class SelfAttention(Layer):
    """Dot-product attention pooling over time with one learned query vector.

    ``a = softmax(H q / sqrt(d))`` over the time axis and the output is the
    context ``sum_t a_t h_t``. The weights of the last forward call are kept
    in ``last_weights`` with shape ``(batch, time)``.
    """
    kind = "SelfAttention"
    param_names = ("q",)

    def __init__(self, features: int) -> None:
        super().__init__()
        self.features = features
        self.params = [np.zeros(features)]
        self.last_weights: np.ndarray | None = None

    def init(self, rng):
        self.params[0][...] = _uniform(rng, self.features, self.features)

    def forward(self, x):
        self._check(x, 3, self.features)
        scale = 1.0 / math.sqrt(self.features)
        s = (x @ self.params[0]) * scale
        s = s - s.max(axis=1, keepdims=True)
        e = np.exp(s)
        a = e / e.sum(axis=1, keepdims=True)
        self._cache = (x, a)
        self.last_weights = a
        return np.einsum("bt,btd->bd", a, x)

    def backward(self, grad):
        x, a = self._need_cache()
        scale = 1.0 / math.sqrt(self.features)
        da = np.einsum("btd,bd->bt", x, grad)
        ds = a * (da - (a * da).sum(axis=1, keepdims=True))
        self.grads = [np.einsum("bt,btd->d", ds, x) * scale]
        return a[:, :, None] * grad[:, None, :] + ds[:, :, None] * (self.params[0] * scale)[None, None, :]

    def describe(self):
        return {"kind": self.kind, "features": self.features}


def walk(layer: Layer, prefix: str = ""):
    """Yield ``(name, layer)`` for ``layer`` and every nested layer, depth first."""
    yield prefix.rstrip(".") or "model", layer
    if isinstance(layer, Sequential):
        for i, l in enumerate(layer.layers):
            yield from walk(l, f"{prefix}{i}.")
    elif isinstance(layer, Concat):
        for i, l in enumerate(layer.branches):
            yield from walk(l, f"{prefix}branch{i}.")
    elif isinstance(layer, TimeDistributed):
        yield from walk(layer.inner, f"{prefix}inner.")
    elif isinstance(layer, Bidirectional):
        yield from walk(layer.fwd, f"{prefix}fwd.")
        yield from walk(layer.bwd, f"{prefix}bwd.")


def named_params(root: Layer) -> list[tuple[str, Layer, int]]:
    """``(name, owner, index)`` for every parameter tensor, in a fixed order."""
    out = []
    for name, layer in walk(root):
        for k, pname in enumerate(layer.param_names):
            if k < len(layer.params):
                out.append((f"{name}.{pname}", layer, k))
    return out
