"""Pipeline configuration stored as a single JSON document.

Schema (every key optional)::

    {
      "window":   {"min_s": 5, "max_s": 8, "target_s": 6},
      "wheel":    {"sarcasm_threshold_deg": 90, "blend_threshold_deg": 90},
      "frame":    {"frame_len": 1024, "hop_len": 512, "window": "hann"},
      "features": {"n_mels": 40, "n_mfcc": 13},
      "model_path": "model.json",
      "baseline_path": "baseline.json",
      "seed": 0,
      "out_dir": "out"
    }

Relative paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .afme import PlutchikWheel, WindowConfig
from .errors import InputError, ValidationError
from .signal import FeatureConfig, FrameSpec

ENV_VAR = "EMOFUSE_CONFIG"
MAX_SEED = 2**64 - 1

_SECTIONS = {
    "window": ("min_s", "max_s", "target_s"),
    "wheel": ("sarcasm_threshold_deg", "blend_threshold_deg"),
    "frame": ("frame_len", "hop_len", "window"),
    "features": ("n_mels", "n_mfcc"),
}
_TOP_LEVEL = set(_SECTIONS) | {"model_path", "baseline_path", "seed", "out_dir"}


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


@dataclass(frozen=True)
class PipelineConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    wheel: PlutchikWheel = field(default_factory=PlutchikWheel)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    model_path: Path | None = None
    baseline_path: Path | None = None
    seed: int = 0
    out_dir: Path | None = None

    def __post_init__(self):
        check_seed(self.seed)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object")
        unknown = sorted(set(doc) - _TOP_LEVEL)
        if unknown:
            raise ValidationError(f"config: unknown keys {unknown}")
        sections = {}
        for name, keys in _SECTIONS.items():
            sec = doc.get(name, {})
            if not isinstance(sec, dict):
                raise ValidationError(f"config.{name} must be an object")
            bad = sorted(set(sec) - set(keys))
            if bad:
                raise ValidationError(f"config.{name}: unknown keys {bad}")
            sections[name] = sec
        base = Path(base_dir)

        def path(key):
            value = doc.get(key)
            if value is None:
                return None
            if not isinstance(value, str) or not value:
                raise ValidationError(f"config.{key} must be a non-empty string")
            return base / value

        try:
            frame = FrameSpec(**sections["frame"])
            return cls(
                window=WindowConfig(**sections["window"]),
                wheel=PlutchikWheel(**sections["wheel"]),
                features=FeatureConfig(frame=frame, **sections["features"]),
                model_path=path("model_path"),
                baseline_path=path("baseline_path"),
                seed=check_seed(doc.get("seed", 0)),
                out_dir=path("out_dir"),
            )
        except InputError as exc:
            raise ValidationError(f"config: {exc}") from None
        except TypeError as exc:
            raise ValidationError(f"config: {exc}") from None

    def to_dict(self) -> dict:
        f = self.features
        return {
            "window": {"min_s": self.window.min_s, "max_s": self.window.max_s,
                       "target_s": self.window.target_s},
            "wheel": {"sarcasm_threshold_deg": self.wheel.sarcasm_threshold_deg,
                      "blend_threshold_deg": self.wheel.blend_threshold_deg},
            "frame": {"frame_len": f.frame.frame_len, "hop_len": f.frame.hop_len,
                      "window": f.frame.window},
            "features": {"n_mels": f.n_mels, "n_mfcc": f.n_mfcc},
            "model_path": None if self.model_path is None else str(self.model_path),
            "baseline_path": None if self.baseline_path is None else str(self.baseline_path),
            "seed": self.seed,
            "out_dir": None if self.out_dir is None else str(self.out_dir),
        }

    def fingerprint(self) -> str:
        """SHA-256 of the settings that affect results; paths and seed excluded."""
        doc = self.to_dict()
        for key in ("model_path", "baseline_path", "out_dir", "seed"):
            doc.pop(key)
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_overrides(self, **changes) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    return PipelineConfig.from_dict(doc, base_dir=path.parent)


def resolve_config(explicit: str | Path | None = None,
                   fallback: str | Path | None = None) -> PipelineConfig:
    """Explicit path first, then $EMOFUSE_CONFIG, then ``fallback`` if it exists, else defaults."""
    if explicit is not None:
        return load_config(explicit)
    env = os.environ.get(ENV_VAR)
    if env:
        return load_config(env)
    if fallback is not None and Path(fallback).is_file():
        return load_config(fallback)
    return PipelineConfig()
