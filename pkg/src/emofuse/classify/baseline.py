"""Softmax-regression baseline trained with full-batch Adam, plus learning-rate schedules."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..emotions import N_CLASSES, Emotion
from ..errors import DataError, ParameterError, ValidationError
from .layers import softmax

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState,
              lr: float | None = None) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update. Inputs are not modified."""
    lr = state.lr if lr is None else lr
    t = state.t + 1
    new_params, m, v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m[name] = state.beta1 * state.m.get(name, np.zeros_like(p)) + (1 - state.beta1) * g
        v[name] = state.beta2 * state.v.get(name, np.zeros_like(p)) + (1 - state.beta2) * g * g
        m_hat = m[name] / (1 - state.beta1 ** t)
        v_hat = v[name] / (1 - state.beta2 ** t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, t=t, m=m, v=v)


def lr_schedule(kind: str, lr0: float, epoch: int, decay: float = 0.01, drop: float = 0.5,
                period: int = 10, k: float = 0.1) -> float:
    if epoch < 0:
        raise ParameterError("epoch must be non-negative")
    if kind == "time_based":
        return lr0 / (1.0 + decay * epoch)
    if kind == "step":
        return lr0 * drop ** (epoch // period)
    if kind == "exponential":
        return lr0 * math.exp(-k * epoch)
    raise ParameterError(f"unknown schedule {kind!r}; expected time_based, step or exponential")


def cross_entropy(params: Params, x: np.ndarray, y: np.ndarray,
                  sample_weight: np.ndarray | None = None) -> tuple[float, Params]:
    """Mean (optionally weighted) softmax cross-entropy and its gradient."""
    n = x.shape[0]
    logits = x @ params["weight"] + params["bias"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    nll = log_norm - shifted[np.arange(n), y]
    w = np.ones(n) if sample_weight is None else sample_weight
    loss = float(np.sum(w * nll) / n)
    delta = np.exp(shifted - log_norm[:, None])
    delta[np.arange(n), y] -= 1.0
    delta *= (w / n)[:, None]
    return loss, {"weight": x.T @ delta, "bias": delta.sum(axis=0)}


@dataclass
class TrainResult:
    weight: np.ndarray  # (D, 7)
    bias: np.ndarray
    losses: list[float]
    adam: AdamState


def _check_training_data(features, labels) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError(f"features must be an (N, D) matrix with N >= 1, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("features contain NaN or infinite values")
    y = np.array([int(Emotion.parse(v)) for v in labels], dtype=np.int64)
    if y.shape[0] != x.shape[0]:
        raise DataError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
    return x, y


def train_baseline(features, labels, adam: AdamState | None = None, epochs: int = 500,
                   seed: int | None = None, class_weights: dict | None = None,
                   schedule: dict | None = None) -> TrainResult:
    """Full-batch Adam on softmax cross-entropy.

    Weights start at zero unless ``seed`` is given, in which case they are
    drawn from N(0, 0.01^2). ``schedule`` is passed to ``lr_schedule`` as
    keyword arguments (its ``kind`` key selects the family).
    """
    x, y = _check_training_data(features, labels)
    adam = adam or AdamState()
    d = x.shape[1]
    if seed is None:
        params = {"weight": np.zeros((d, N_CLASSES)), "bias": np.zeros(N_CLASSES)}
    else:
        rng = np.random.default_rng(seed)
        params = {"weight": rng.normal(0, 0.01, (d, N_CLASSES)), "bias": np.zeros(N_CLASSES)}
    sample_weight = None
    if class_weights:
        lookup = {int(Emotion.parse(k)): float(v) for k, v in class_weights.items() if v is not None}
        sample_weight = np.array([lookup.get(int(c), 1.0) for c in y])
    losses = []
    for epoch in range(epochs):
        loss, grads = cross_entropy(params, x, y, sample_weight)
        losses.append(loss)
        lr = None
        if schedule:
            opts = dict(schedule)
            lr = lr_schedule(opts.pop("kind"), adam.lr, epoch, **opts)
        params, adam = adam_step(params, grads, adam, lr=lr)
    losses.append(cross_entropy(params, x, y, sample_weight)[0])
    return TrainResult(params["weight"], params["bias"], losses, adam)


@dataclass
class BaselineClassifier:
    """Standardize features, then a linear softmax layer over the 7 classes."""

    mean: np.ndarray
    scale: np.ndarray
    weight: np.ndarray
    bias: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def predict_proba(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self.mean.size:
            raise DataError(f"baseline expects {self.mean.size} features, got {x.shape[1]}")
        z = (x - self.mean) / self.scale
        return softmax(z @ self.weight + self.bias, axis=-1)

    def to_dict(self) -> dict:
        return {
            "kind": "softmax_regression",
            "feature_names": list(self.feature_names),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "weight": self.weight.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BaselineClassifier":
        try:
            mean = np.asarray(doc["mean"], dtype=np.float64)
            scale = np.asarray(doc["scale"], dtype=np.float64)
            weight = np.asarray(doc["weight"], dtype=np.float64)
            bias = np.asarray(doc["bias"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"baseline weights: malformed document ({exc})") from None
        d = mean.size
        if scale.shape != (d,) or weight.shape != (d, N_CLASSES) or bias.shape != (N_CLASSES,):
            raise ValidationError(
                f"baseline weights: inconsistent shapes mean {mean.shape}, scale {scale.shape}, "
                f"weight {weight.shape}, bias {bias.shape}"
            )
        if np.any(scale <= 0) or not all(np.all(np.isfinite(a)) for a in (mean, scale, weight, bias)):
            raise ValidationError("baseline weights: non-finite values or non-positive scale")
        return cls(mean, scale, weight, bias, list(doc.get("feature_names", [])))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BaselineClassifier":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"baseline weights: invalid JSON ({exc.msg})") from None
        return cls.from_dict(doc)


def fit_baseline(features, labels, epochs: int = 2000, adam: AdamState | None = None,
                 class_weights: dict | None = None,
                 feature_names: list[str] | None = None) -> BaselineClassifier:
    x, _ = _check_training_data(features, labels)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale < 1e-12] = 1.0
    result = train_baseline((x - mean) / scale, labels, adam=adam, epochs=epochs,
                            class_weights=class_weights)
    return BaselineClassifier(mean, scale, result.weight, result.bias, list(feature_names or []))
