"""The three-block facial-expression CNN: parameters, JSON model files, forward pass."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..emotions import N_CLASSES, EmotionDistribution
from ..errors import ShapeError, ValidationError
from ..vision import FACE_SIZE
from .layers import batchnorm_infer, conv2d, dropout, maxpool2d, relu, softmax

FORMAT_VERSION = 1
BLOCK_WIDTHS = (64, 128, 256)
KERNEL = 3
POOL = 2
BN_EPS = 1e-5
DEFAULT_DROPOUT = 0.25
INPUT_CHANNELS = 1
FINAL_SIDE = FACE_SIZE // POOL ** len(BLOCK_WIDTHS)  # 48 -> 24 -> 12 -> 6
HEAD_INPUTS = FINAL_SIDE * FINAL_SIDE * BLOCK_WIDTHS[-1]

BLOCK_TENSORS = ("kernel", "bias", "bn_gamma", "bn_beta", "bn_mean", "bn_var")


@dataclass
class ConvBlockParams:
    kernel: np.ndarray  # (out_ch, in_ch, 3, 3)
    bias: np.ndarray
    bn_gamma: np.ndarray
    bn_beta: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray
    bn_eps: float = BN_EPS
    dropout_p: float = DEFAULT_DROPOUT

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]


@dataclass
class ModelSpec:
    blocks: list[ConvBlockParams]
    head_weight: np.ndarray  # (6*6*256, 7), rows in (row, col, channel) order
    head_bias: np.ndarray
    meta: dict = field(default_factory=dict)

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for i, b in enumerate(self.blocks, start=1):
            for name in BLOCK_TENSORS:
                out[f"block{i}.{name}"] = getattr(b, name)
        out["head.weight"] = self.head_weight
        out["head.bias"] = self.head_bias
        return out


def expected_shapes() -> dict[str, tuple[int, ...]]:
    shapes = {}
    cin = INPUT_CHANNELS
    for i, cout in enumerate(BLOCK_WIDTHS, start=1):
        shapes[f"block{i}.kernel"] = (cout, cin, KERNEL, KERNEL)
        for name in BLOCK_TENSORS[1:]:
            shapes[f"block{i}.{name}"] = (cout,)
        cin = cout
    shapes["head.weight"] = (HEAD_INPUTS, N_CLASSES)
    shapes["head.bias"] = (N_CLASSES,)
    return shapes


def validate_model(model: ModelSpec) -> None:
    if len(model.blocks) != len(BLOCK_WIDTHS):
        raise ValidationError(f"model has {len(model.blocks)} blocks, expected {len(BLOCK_WIDTHS)}")
    for i, (block, width) in enumerate(zip(model.blocks, BLOCK_WIDTHS), start=1):
        if block.out_channels != width:
            raise ValidationError(
                f"block{i}.out_channels: expected {width}, got {block.out_channels}"
            )
        if not 0.0 <= block.dropout_p < 1.0:
            raise ValidationError(f"block{i}.dropout: rate {block.dropout_p} outside [0, 1)")
    expected = expected_shapes()
    for name, arr in model.tensors().items():
        if arr.shape != expected[name]:
            raise ValidationError(f"{name}: shape {list(arr.shape)}, expected {list(expected[name])}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name}: contains NaN or infinite values")
        if name.endswith("bn_var") and np.any(arr < 0):
            raise ValidationError(f"{name}: running variance must be non-negative")


def _check_arch(arch) -> float:
    if not isinstance(arch, dict):
        raise ValidationError("arch: missing or not an object")
    blocks = arch.get("blocks")
    if not isinstance(blocks, list) or len(blocks) != len(BLOCK_WIDTHS):
        raise ValidationError(f"arch.blocks: expected a list of {len(BLOCK_WIDTHS)} widths, got {blocks!r}")
    for i, (got, want) in enumerate(zip(blocks, BLOCK_WIDTHS), start=1):
        if got != want:
            raise ValidationError(f"block{i}.out_channels: expected {want}, got {got}")
    for key, want in (("kernel", KERNEL), ("pool", POOL), ("classes", N_CLASSES)):
        if arch.get(key) != want:
            raise ValidationError(f"arch.{key}: expected {want}, got {arch.get(key)!r}")
    p = arch.get("dropout", DEFAULT_DROPOUT)
    if not isinstance(p, (int, float)) or not 0.0 <= p < 1.0:
        raise ValidationError(f"arch.dropout: expected a rate in [0, 1), got {p!r}")
    return float(p)


def _tensor(tensors: dict, name: str, shape: tuple[int, ...]) -> np.ndarray:
    entry = tensors.get(name)
    if entry is None:
        raise ValidationError(f"{name}: missing tensor")
    if not isinstance(entry, dict) or "shape" not in entry or "data" not in entry:
        raise ValidationError(f"{name}: tensor must be an object with 'shape' and 'data'")
    declared = tuple(entry["shape"])
    if declared != shape:
        if name.endswith(".kernel") and len(declared) == 4 and declared[0] != shape[0]:
            block = name.split(".")[0]
            raise ValidationError(
                f"{block}.out_channels: kernel has {declared[0]} output channels, expected {shape[0]}"
            )
        raise ValidationError(f"{name}: shape {list(declared)}, expected {list(shape)}")
    try:
        data = np.asarray(entry["data"], dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: data must be a flat list of numbers") from None
    if data.ndim != 1 or data.size != math.prod(shape):
        raise ValidationError(f"{name}: {data.size} values for shape {list(shape)}")
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{name}: contains NaN or infinite values")
    return data.reshape(shape)


def load_model(document) -> ModelSpec:
    """Parse and validate a model document (dict, JSON text, or path)."""
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"model file is not valid JSON: {exc.msg} at offset {exc.pos}") from None
    if not isinstance(document, dict):
        raise ValidationError("model document must be a JSON object")
    if document.get("format_version") != FORMAT_VERSION:
        raise ValidationError(
            f"format_version: expected {FORMAT_VERSION}, got {document.get('format_version')!r}"
        )
    p = _check_arch(document.get("arch"))
    tensors = document.get("tensors")
    if not isinstance(tensors, dict):
        raise ValidationError("tensors: missing or not an object")
    shapes = expected_shapes()
    arrays = {name: _tensor(tensors, name, shape) for name, shape in shapes.items()}
    blocks = [
        ConvBlockParams(*(arrays[f"block{i}.{n}"] for n in BLOCK_TENSORS), dropout_p=p)
        for i in range(1, len(BLOCK_WIDTHS) + 1)
    ]
    model = ModelSpec(blocks, arrays["head.weight"], arrays["head.bias"], meta=document.get("meta", {}))
    validate_model(model)
    return model


def model_document(model: ModelSpec) -> dict:
    validate_model(model)
    return {
        "format_version": FORMAT_VERSION,
        "arch": {
            "blocks": list(BLOCK_WIDTHS), "kernel": KERNEL, "pool": POOL,
            "classes": N_CLASSES, "dropout": model.blocks[0].dropout_p,
        },
        "meta": model.meta,
        "tensors": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}
            for name, arr in model.tensors().items()
        },
    }


def save_model(model: ModelSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_document(model), separators=(",", ":")) + "\n")


def zero_model() -> ModelSpec:
    shapes = expected_shapes()
    arrays = {name: np.zeros(shape) for name, shape in shapes.items()}
    for i in range(1, 4):
        arrays[f"block{i}.bn_gamma"] = np.ones(shapes[f"block{i}.bn_gamma"])
        arrays[f"block{i}.bn_var"] = np.ones(shapes[f"block{i}.bn_var"])
    blocks = [ConvBlockParams(*(arrays[f"block{i}.{n}"] for n in BLOCK_TENSORS)) for i in range(1, 4)]
    return ModelSpec(blocks, arrays["head.weight"], arrays["head.bias"])


def random_model(seed: int = 0, scale: float = 0.1) -> ModelSpec:
    rng = np.random.default_rng(seed)
    blocks = []
    cin = INPUT_CHANNELS
    for cout in BLOCK_WIDTHS:
        fan_in = cin * KERNEL * KERNEL
        blocks.append(ConvBlockParams(
            kernel=rng.normal(0, 1 / math.sqrt(fan_in), (cout, cin, KERNEL, KERNEL)),
            bias=rng.normal(0, scale, cout),
            bn_gamma=rng.uniform(0.5, 1.5, cout),
            bn_beta=rng.normal(0, scale, cout),
            bn_mean=rng.normal(0, scale, cout),
            bn_var=rng.uniform(0.5, 2.0, cout),
        ))
        cin = cout
    head_w = rng.normal(0, 1 / math.sqrt(HEAD_INPUTS), (HEAD_INPUTS, N_CLASSES))
    return ModelSpec(blocks, head_w, rng.normal(0, scale, N_CLASSES))


def forward_batch(model: ModelSpec, images: np.ndarray, trace: list | None = None) -> np.ndarray:
    """Class probabilities for a stack of 48x48 images scaled to [0, 1]; returns (N, 7)."""
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (FACE_SIZE, FACE_SIZE):
        raise ShapeError(f"input: expected (N, {FACE_SIZE}, {FACE_SIZE}) images, got {x.shape}")
    x = x[..., None]
    for i, block in enumerate(model.blocks, start=1):
        x = conv2d(x, block.kernel, block.bias, name=f"block{i}.conv")
        x = batchnorm_infer(x, block.bn_gamma, block.bn_beta, block.bn_mean, block.bn_var, block.bn_eps)
        x = relu(x)
        x = maxpool2d(x, POOL)
        x = dropout(x, block.dropout_p, train=False)
        if trace is not None:
            trace.append((f"block{i}", x.shape[1:]))
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != model.head_weight.shape[0]:
        raise ShapeError(
            f"head: {flat.shape[1]} flattened features, weight expects {model.head_weight.shape[0]}"
        )
    logits = flat @ model.head_weight + model.head_bias
    if trace is not None:
        trace.append(("head", logits.shape[1:]))
    return softmax(logits, axis=-1)


def forward(model: ModelSpec, image: np.ndarray, trace: list | None = None) -> EmotionDistribution:
    img = np.asarray(image, dtype=np.float64)
    if img.shape != (FACE_SIZE, FACE_SIZE):
        raise ShapeError(f"input: expected a {FACE_SIZE}x{FACE_SIZE} image, got {img.shape}")
    return EmotionDistribution(forward_batch(model, img[None], trace)[0])
