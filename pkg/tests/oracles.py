"""Independent reference implementations used by the tests.

Each oracle is written the slow, literal way so that it shares no code path
with the package implementation it checks.
"""
from __future__ import annotations

import math

import numpy as np


def sos_gain(sos: np.ndarray, freq_hz: float, fs: float) -> float:
    """|H(e^{jw})| of a second-order-section cascade by direct polynomial evaluation."""
    z = complex(math.cos(2 * math.pi * freq_hz / fs), math.sin(2 * math.pi * freq_hz / fs))
    h = 1 + 0j
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 / z + b2 / z ** 2) / (a0 + a1 / z + a2 / z ** 2)
    return abs(h)


def brute_validate(x, max_thr: float = 0.5, mean_thr: float = 0.6, width: int = 3) -> list[float] | None:
    """Pulse validation written sample by sample.

    Zeros join the pulse that follows them (the one before, at the very end).
    A pulse survives when its peak magnitude exceeds ``max_thr``, its mean
    magnitude exceeds ``mean_thr`` and it is longer than ``width`` samples
    (the first and last pulse are exempt from the width rule). A rejected
    pulse continues whatever phase came before it; rejected pulses before
    the first survivor take the survivor's phase. Returns None when nothing
    survives.
    """
    x = [float(v) for v in x]
    n = len(x)
    sign = [0.0] * n
    for i in range(n):
        if x[i] != 0:
            sign[i] = 1.0 if x[i] > 0 else -1.0
        else:
            j = i
            while j < n and x[j] == 0:
                j += 1
            if j < n:
                sign[i] = 1.0 if x[j] > 0 else -1.0
            else:
                k = i
                while k >= 0 and x[k] == 0:
                    k -= 1
                sign[i] = 0.0 if k < 0 else (1.0 if x[k] > 0 else -1.0)
    if all(s == 0 for s in sign):
        return None
    runs = []
    start = 0
    for i in range(1, n + 1):
        if i == n or sign[i] != sign[start]:
            runs.append((start, i))
            start = i
    ok = []
    for k, (a, b) in enumerate(runs):
        s = sign[a]
        mags = [x[i] * s for i in range(a, b)]
        good = max(mags) > max_thr and sum(mags) / len(mags) > mean_thr
        if k not in (0, len(runs) - 1):
            good = good and (b - a) > width
        ok.append(good)
    if not any(ok):
        return None
    out = [0.0] * n
    current = sign[runs[ok.index(True)][0]]
    for (a, b), good in zip(runs, ok):
        if good:
            current = sign[a]
        for i in range(a, b):
            out[i] = current
    return out


def brute_match_count(pred: list[int], truth: list[int], window: int) -> int:
    """Greedy one-to-one matching by (|offset|, earlier time, later time), by exhaustive scan."""
    used_p, used_t = set(), set()
    count = 0
    while True:
        best = None
        for i, p in enumerate(pred):
            if i in used_p:
                continue
            for j, t in enumerate(truth):
                if j in used_t or abs(p - t) > window:
                    continue
                key = (abs(p - t), min(p, t), max(p, t))
                if best is None or key < best[0]:
                    best = (key, i, j)
        if best is None:
            return count
        used_p.add(best[1])
        used_t.add(best[2])
        count += 1


def conv1d_loops(x: np.ndarray, W: np.ndarray, b: np.ndarray, stride: int = 1) -> np.ndarray:
    """Valid cross-correlation; ``x`` (batch, length, cin), ``W`` (kernel, cin, cout)."""
    bsz, length, cin = x.shape
    k, _, cout = W.shape
    lo = (length - k) // stride + 1
    out = np.zeros((bsz, lo, cout))
    for n in range(bsz):
        for t in range(lo):
            for o in range(cout):
                acc = b[o]
                for d in range(k):
                    for c in range(cin):
                        acc += x[n, t * stride + d, c] * W[d, c, o]
                out[n, t, o] = acc
    return out


# ----------------------------------------------------------------------------
# parameter counts from layer formulas


def dense(i: int, o: int) -> int:
    return i * o + o


def lstm(i: int, u: int) -> int:
    return 4 * (i * u + u * u + u)


def gru(i: int, u: int) -> int:
    return 3 * (i * u + u * u + u)


def conv(cin: int, f: int, k: int) -> int:
    return k * cin * f + f


def golden_counts(c: int = 6, w: int = 80) -> dict[str, int]:
    """Parameter counts of the sixteen architectures at the default sizes."""
    u, hu, f, k, pool, seg = 100, 600, 64, 5, 2, 2
    cnn_feat = ((w - k + 1) // pool) * f
    seg_feat = ((w // seg - k + 1) // pool) * f
    cell = {"LSTM": lstm, "GRU": gru}
    out = {
        "MLP": c * dense(w, 100) + dense(c * 100, 2),
        "CNN": conv(c, f, k) + dense(cnn_feat, 50) + dense(50, 2),
    }
    for kind in ("LSTM", "GRU"):
        g = cell[kind]
        out[kind] = g(c, u) + dense(u, 2)
        out[f"Bi{kind}"] = 2 * g(c, u) + dense(2 * u, 2)
        out[f"stacked-{kind}"] = g(c, u) + g(u, u) + dense(u, 2)
        out[f"stacked-{kind}-Att"] = out[f"stacked-{kind}"] + u
        out[f"CNN-{kind}"] = conv(c, f, k) + g(seg_feat, hu) + dense(hu, 2)
        out[f"CNN-Bi{kind}"] = conv(c, f, k) + 2 * g(seg_feat, hu) + dense(2 * hu, 2)
        out[f"CNN-Bi{kind}-Att"] = out[f"CNN-Bi{kind}"] + 2 * hu
    return out
