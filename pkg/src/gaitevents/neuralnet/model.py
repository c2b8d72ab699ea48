"""Model container, loss, optimizer, training loop and checkpoint I/O."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..dataset import NormStats, WindowedDataset
from .layers import Layer, SelfAttention, Sequential, named_params, walk

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class Model:
    """A layer graph plus the metadata needed to reproduce and apply it."""

    def __init__(self, net: Layer, *, arch: str = "custom", input_channels: int = 1, w: int = 1,
                 hyper: dict | None = None) -> None:
        self.net = net
        self.arch = arch
        self.input_channels = input_channels
        self.w = w
        self.hyper = dict(hyper or {})
        self.norm: NormStats | None = None
        self.channels: tuple[str, ...] = ()
        self.seed: int | None = None

    # parameters ------------------------------------------------------------
    def initialize(self, seed: int) -> "Model":
        self.seed = seed
        self.net.init(np.random.default_rng(seed))
        return self

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(n, layer.params[k]) for n, layer, k in named_params(self.net)]

    def parameters(self) -> list[np.ndarray]:
        return [p for _, p in self.named_parameters()]

    def gradients(self) -> list[np.ndarray]:
        return [layer.grads[k] for _, layer, k in named_params(self.net)]

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def get_state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_state(self, state: list[np.ndarray]) -> None:
        for p, s in zip(self.parameters(), state, strict=True):
            p[...] = s

    # compute -----------------------------------------------------------------
    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(x)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.net.backward(grad)

    def attention_layer(self) -> SelfAttention | None:
        for _, layer in walk(self.net):
            if isinstance(layer, SelfAttention):
                return layer
        return None

    def describe(self) -> dict:
        return self.net.describe()


def mse(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 256
    max_epochs: int = 100
    patience: int = 10
    seed: int = 1

    def __post_init__(self) -> None:
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("patience, batch_size and max_epochs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {"train_loss": list(self.train_loss), "val_loss": list(self.val_loss),
                "best_epoch": self.best_epoch, "stopped_early": self.stopped_early}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainHistory":
        return cls(list(d["train_loss"]), list(d["val_loss"]), int(d["best_epoch"]), bool(d["stopped_early"]))

    @property
    def epochs(self) -> int:
        return len(self.val_loss)


class EarlyStopping:
    """Tracks the best validation loss; ``update`` returns True when training should stop."""

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        if val_loss < self.best:
            self.best, self.best_epoch = val_loss, epoch
            return False
        return epoch - self.best_epoch >= self.patience


def _batches(n: int, batch_size: int, order: np.ndarray):
    for s in range(0, n, batch_size):
        yield order[s:s + batch_size]


def evaluate_loss(model: Model, ds: WindowedDataset, batch_size: int = 1024) -> float:
    if len(ds) == 0:
        return float("nan")
    total = 0.0
    for idx in _batches(len(ds), batch_size, np.arange(len(ds))):
        pred = model.forward(ds.windows(idx))
        total += float(np.sum((pred - ds.y[idx]) ** 2))
    return total / (len(ds) * 2)


def train(model: Model, train_ds: WindowedDataset, val_ds: WindowedDataset, cfg: TrainConfig = TrainConfig(),
          on_epoch: Callable[[int, float, float], None] | None = None) -> tuple[Model, TrainHistory]:
    """Minibatch Adam on MSE with early stopping on validation loss.

    Per-epoch losses are full passes over each set after the epoch's
    updates. On return the parameters of the best validation epoch are
    restored. The same seed reproduces the same history bit for bit.
    """
    if train_ds.norm is None or val_ds.norm is None or train_ds.norm != val_ds.norm:
        raise TrainingError("train and validation sets must be normalised with the same statistics")
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise TrainingError("empty training or validation set")
    if train_ds.c != model.input_channels or train_ds.w != model.w:
        raise TrainingError(f"dataset windows are {train_ds.w}x{train_ds.c}, model expects "
                            f"{model.w}x{model.input_channels}")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    stopper = EarlyStopping(cfg.patience)
    hist = TrainHistory()
    best_state = model.get_state()
    params = model.parameters()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_ds))
        for b, idx in enumerate(_batches(len(train_ds), cfg.batch_size, order)):
            pred = model.forward(train_ds.windows(idx))
            loss, grad = mse(pred, train_ds.y[idx])
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            model.backward(grad)
            opt.step(params, model.gradients())
        tr = evaluate_loss(model, train_ds)
        va = evaluate_loss(model, val_ds)
        if not (math.isfinite(tr) and math.isfinite(va)):
            raise TrainingError(f"non-finite loss at end of epoch {epoch} (train={tr}, val={va})")
        hist.train_loss.append(tr)
        hist.val_loss.append(va)
        stop = stopper.update(epoch, va)
        if stopper.best_epoch == epoch:
            best_state = model.get_state()
        log.info("epoch %d train %.6f val %.6f", epoch, tr, va)
        if on_epoch:
            on_epoch(epoch, tr, va)
        if stop:
            hist.stopped_early = True
            break
    hist.best_epoch = stopper.best_epoch
    model.set_state(best_state)
    model.norm = train_ds.norm
    model.channels = tuple(c.value for c in train_ds.channels)
    model.net.clear()
    return model, hist


def predict(model: Model, ds: WindowedDataset, batch_size: int = 1024) -> np.ndarray:
    """``(len(ds), 2)`` (right, left) outputs in dataset order."""
    if model.norm is not None and ds.norm != model.norm:
        raise TrainingError("dataset normalisation does not match the model's statistics")
    if len(ds) == 0:
        return np.zeros((0, 2))
    out = np.empty((len(ds), 2))
    for idx in _batches(len(ds), batch_size, np.arange(len(ds))):
        out[idx] = model.forward(ds.windows(idx))
    model.net.clear()
    return out


# ----------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: Model, directory: str | Path, history: TrainHistory | None = None,
                    extra: dict | None = None) -> Path:
    """``model.json`` manifest plus ``model.bin`` (little-endian float64 tensors back to back)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    table, chunks, offset = [], [], 0
    for name, p in model.named_parameters():
        raw = np.ascontiguousarray(p, dtype="<f8").tobytes()
        table.append({"name": name, "shape": list(p.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    blob = b"".join(chunks)
    (d / "model.bin").write_bytes(blob)
    manifest = {
        "architecture": model.arch,
        "input_channels": model.input_channels,
        "w": model.w,
        "hyper": model.hyper,
        "channels": list(model.channels),
        "norm": model.norm.to_dict() if model.norm is not None else None,
        "seed": model.seed,
        "param_count": model.param_count,
        "tensors": table,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
        "history": history.to_dict() if history else None,
    }
    manifest.update(extra or {})
    path = d / "model.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def load_checkpoint(directory: str | Path) -> tuple[Model, dict]:
    from ..zoo import build  # local import: zoo depends on this module

    d = Path(directory)
    manifest = json.loads((d / "model.json").read_text())
    blob = (d / "model.bin").read_bytes()
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise TrainingError(f"{d}: parameter blob checksum mismatch")
    model = build(manifest["architecture"], manifest["input_channels"], manifest["w"], **manifest["hyper"])
    named = dict(model.named_parameters())
    for entry in manifest["tensors"]:
        p = named[entry["name"]]
        arr = np.frombuffer(blob, dtype="<f8", count=entry["nbytes"] // 8, offset=entry["offset"])
        if list(p.shape) != entry["shape"]:
            raise TrainingError(f"tensor {entry['name']} shape {entry['shape']} != model {list(p.shape)}")
        p[...] = arr.reshape(p.shape)
    model.seed = manifest.get("seed")
    model.channels = tuple(manifest.get("channels", ()))
    if manifest.get("norm"):
        model.norm = NormStats.from_dict(manifest["norm"])
    return model, manifest
