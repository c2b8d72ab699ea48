"""Central finite-difference gradient checking."""
from __future__ import annotations

import numpy as np

from .layers import Layer, named_params


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute difference scaled by the largest magnitude of either tensor."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric))) / scale


def _numeric(f, arr: np.ndarray, h: float, max_entries: int | None, rng) -> tuple[np.ndarray, np.ndarray]:
    flat = arr.reshape(-1)
    idx = np.arange(flat.size)
    if max_entries is not None and flat.size > max_entries:
        idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        out[k] = (fp - fm) / (2 * h)
    return idx, out


def check_layer(layer: Layer, x: np.ndarray, h: float = 1e-5, seed: int = 0,
                max_entries: int | None = None) -> dict[str, float]:
    """Relative errors of input and parameter gradients of ``sum(layer(x) * R)`` for random R."""
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    out = layer.forward(x)
    R = rng.standard_normal(out.shape)

    def loss() -> float:
        return float(np.sum(layer.forward(x) * R))

    layer.forward(x)
    dx = layer.backward(R)
    analytic = {"input": dx}
    for name, owner, k in named_params(layer):
        analytic[name] = owner.grads[k].copy()

    errors = {}
    idx, num = _numeric(loss, x, h, max_entries, rng)
    errors["input"] = rel_error(analytic["input"].reshape(-1)[idx], num)
    for name, owner, k in named_params(layer):
        idx, num = _numeric(loss, owner.params[k], h, max_entries, rng)
        errors[name] = rel_error(analytic[name].reshape(-1)[idx], num)
    return errors
