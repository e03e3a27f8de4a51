"""Inference-time CNN layers on channels-last arrays.

Spatial layers accept ``(H, W, C)`` or a batch ``(N, H, W, C)``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ShapeError


def conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, name: str = "conv") -> np.ndarray:
    """Stride-1, zero-padded 'same' cross-correlation.

    ``kernel`` is (C_out, C_in, kh, kw) with odd kh, kw.
    """
    x = np.asarray(x, dtype=np.float64)
    cout, cin, kh, kw = kernel.shape
    if x.ndim not in (3, 4):
        raise ShapeError(f"{name}: expected (H, W, C) input, got shape {x.shape}")
    if x.shape[-1] != cin:
        raise ShapeError(f"{name}: kernel expects {cin} input channels, input has {x.shape[-1]}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"{name}: kernel size must be odd, got {kh}x{kw}")
    if bias.shape != (cout,):
        raise ShapeError(f"{name}: bias shape {bias.shape} does not match {cout} output channels")
    h, w = x.shape[-3], x.shape[-2]
    ph, pw = kh // 2, kw // 2
    pad = [(0, 0)] * (x.ndim - 3) + [(ph, ph), (pw, pw), (0, 0)]
    xp = np.pad(x, pad)
    # Patch matrix with columns ordered (dy, dx, c); one 2-D matmul is far
    # faster than a batched matmul per tap on strided views.
    patches = np.concatenate(
        [xp[..., dy:dy + h, dx:dx + w, :] for dy in range(kh) for dx in range(kw)], axis=-1
    )
    flat_kernel = kernel.transpose(0, 2, 3, 1).reshape(cout, kh * kw * cin)
    out = patches.reshape(-1, kh * kw * cin) @ flat_kernel.T
    return out.reshape(x.shape[:-1] + (cout,)) + bias


def batchnorm_infer(x: np.ndarray, gamma, beta, mean, var, eps: float = 1e-5) -> np.ndarray:
    scale = np.asarray(gamma) / np.sqrt(np.asarray(var) + eps)
    return (x - mean) * scale + beta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def maxpool2d(x: np.ndarray, pool: int = 2) -> np.ndarray:
    """Non-overlapping max pooling; trailing rows/columns that do not fill a window are dropped."""
    h, w = x.shape[-3] // pool, x.shape[-2] // pool
    if h == 0 or w == 0:
        raise ShapeError(f"maxpool: input {x.shape[-3]}x{x.shape[-2]} smaller than pool {pool}")
    x = x[..., : h * pool, : w * pool, :]
    x = x.reshape(x.shape[:-3] + (h, pool, w, pool, x.shape[-1]))
    return x.max(axis=(-4, -2))


def dropout(x: np.ndarray, p: float, train: bool = False,
            rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Inverted dropout. Inference mode is the identity."""
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    rng = np.random.default_rng(rng)
    keep = rng.random(np.shape(x)) >= p
    return np.where(keep, x / (1.0 - p), 0.0)


def softmax(logits, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    peak = np.max(z, axis=axis, keepdims=True)
    if not np.all(np.isfinite(peak)):
        raise ParameterError("softmax needs at least one finite logit per row")
    e = np.exp(z - peak)
    return e / e.sum(axis=axis, keepdims=True)
