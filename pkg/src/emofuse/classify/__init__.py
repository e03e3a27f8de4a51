"""CNN inference engine and the trainable softmax baseline."""

from .baseline import (
    AdamState,
    BaselineClassifier,
    TrainResult,
    adam_step,
    cross_entropy,
    fit_baseline,
    lr_schedule,
    train_baseline,
)
from .layers import batchnorm_infer, conv2d, dropout, maxpool2d, relu, softmax
from .model import (
    BLOCK_WIDTHS,
    HEAD_INPUTS,
    ConvBlockParams,
    ModelSpec,
    expected_shapes,
    forward,
    forward_batch,
    load_model,
    model_document,
    random_model,
    save_model,
    validate_model,
    zero_model,
)

__all__ = [
    "AdamState", "BaselineClassifier", "TrainResult", "adam_step", "cross_entropy",
    "fit_baseline", "lr_schedule", "train_baseline", "batchnorm_infer", "conv2d", "dropout",
    "maxpool2d", "relu", "softmax", "BLOCK_WIDTHS", "HEAD_INPUTS", "ConvBlockParams",
    "ModelSpec", "expected_shapes", "forward", "forward_batch", "load_model", "model_document",
    "random_model", "save_model", "validate_model", "zero_model",
]
