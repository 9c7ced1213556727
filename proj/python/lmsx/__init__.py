"""Large-margin softmax loss: margin math, analytic gradients, training."""

from lmsx._core import (
    ConfigError,
    ShapeMismatchError,
    ZeroNormError,
    accuracy,
    angular_stats,
    cos_multiple,
    cos_multiple_derivative,
    ideal_margin,
    lambda_at,
    lsoftmax_backward,
    lsoftmax_forward,
    make_blobs,
    psi,
    psi_derivative,
    segment_of,
    train_from_config,
)

__all__ = [
    "ConfigError",
    "ShapeMismatchError",
    "ZeroNormError",
    "accuracy",
    "angular_stats",
    "cos_multiple",
    "cos_multiple_derivative",
    "ideal_margin",
    "lambda_at",
    "lsoftmax_backward",
    "lsoftmax_forward",
    "make_blobs",
    "psi",
    "psi_derivative",
    "segment_of",
    "train_from_config",
]
