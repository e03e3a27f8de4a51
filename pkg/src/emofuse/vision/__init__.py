"""Face image preprocessing and landmark features."""

from .image import (
    FACE_SIZE,
    GrayImage,
    RgbImage,
    as_gray,
    decode_pnm,
    encode_pgm,
    encode_ppm,
    preprocess_face,
    quantize,
    read_image,
    resize,
    resize_48,
    to_grayscale,
)
from .landmarks import (
    FaceFeatures,
    as_landmarks,
    face_features,
    interocular_distance,
    mouth_metrics,
    normalize_features,
    parse_landmarks,
    select_landmarks,
)

__all__ = [
    "FACE_SIZE", "GrayImage", "RgbImage", "as_gray", "decode_pnm", "encode_pgm", "encode_ppm",
    "preprocess_face", "quantize", "read_image", "resize", "resize_48", "to_grayscale",
    "FaceFeatures", "as_landmarks", "face_features", "interocular_distance", "mouth_metrics",
    "normalize_features", "parse_landmarks", "select_landmarks",
]
