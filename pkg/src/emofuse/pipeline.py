"""End-to-end batch run over a manifest of clips.

Per clip: frames are preprocessed and classified by the CNN, audio windows
go through feature extraction and the speech baseline, and the two streams
are fused window by window. Outputs are written so that the same inputs,
config and seed always give the same bytes: no timestamps, no absolute
paths, fixed key order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .afme import (
    WindowVerdict,
    image_stream_from_probs,
    run_afme,
    segment_windows,
    stream_to_json,
    verdicts_document,
)
from .classify import BaselineClassifier, ModelSpec, forward_batch, load_model
from .config import PipelineConfig
from .emotions import EmotionDistribution
from .errors import AlignmentError, DataError, DecodeError, EmofuseError, InsufficientDataError, ValidationError
from .evaluation import DatasetManifest, evaluate_labels, read_label_csv, read_manifest, write_label_csv
from .signal import extract_features, feature_names, read_wav
from .vision import encode_pgm, face_features, parse_landmarks, preprocess_face, quantize, read_image

FAILED_MARKER = "FAILED"
LANDMARK_SUFFIX = ".landmarks.json"


@dataclass(frozen=True)
class ClipBundle:
    clip_id: str
    frames: tuple[tuple[float, Path], ...]
    audio: Path | None
    landmarks: tuple[Path | None, ...] = ()

    def __post_init__(self):
        times = [t for t, _ in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError(f"{self.clip_id}: frame timestamps must be strictly increasing")


def bundles_from_manifest(manifest: DatasetManifest, root: str | Path) -> list[ClipBundle]:
    """Group manifest rows by clip, keeping first-appearance order."""
    root = Path(root)
    order: list[str] = []
    frames: dict[str, list] = {}
    audio: dict[str, list] = {}
    for row in manifest:
        if not row.clip_id:
            raise DataError(f"manifest row {row.path} has no clip_id")
        if row.clip_id not in frames:
            order.append(row.clip_id)
            frames[row.clip_id], audio[row.clip_id] = [], []
        if row.modality == "image":
            if row.timestamp_s is None:
                raise DataError(f"frame {row.path} has no timestamp")
            frames[row.clip_id].append((row.timestamp_s, root / row.path))
        else:
            audio[row.clip_id].append(root / row.path)
    bundles = []
    for cid in order:
        if len(audio[cid]) > 1:
            raise DataError(f"{cid}: expected one audio file, found {len(audio[cid])}")
        fr = tuple(sorted(frames[cid], key=lambda p: p[0]))
        marks = tuple(_landmark_path(p) for _, p in fr)
        bundles.append(ClipBundle(cid, fr, audio[cid][0] if audio[cid] else None, marks))
    return bundles


def _landmark_path(frame: Path) -> Path | None:
    candidate = frame.with_name(frame.stem + LANDMARK_SUFFIX)
    return candidate if candidate.is_file() else None


@dataclass
class ClipResult:
    clip_id: str
    verdicts: list[WindowVerdict] = field(default_factory=list)
    error: EmofuseError | None = None
    stage: str = ""

    @property
    def failed(self) -> bool:
        return self.error is not None

    def predictions(self) -> dict[str, str]:
        return {f"{self.clip_id}:{i}": v.verdict_label for i, v in enumerate(self.verdicts)}


def _write_json(path: Path, doc, compact: bool = False) -> None:
    text = json.dumps(doc, separators=(",", ":")) if compact else json.dumps(doc, indent=2)
    path.write_text(text + "\n")


def _as_emofuse_error(exc: Exception) -> EmofuseError:
    if isinstance(exc, EmofuseError):
        return exc
    if isinstance(exc, OSError):
        return DecodeError(f"cannot read {exc.filename}: {exc.strerror}")
    return EmofuseError(f"{type(exc).__name__}: {exc}")


def process_clip(bundle: ClipBundle, model: ModelSpec, baseline: BaselineClassifier,
                 config: PipelineConfig, out_dir: Path) -> ClipResult:
    result = ClipResult(bundle.clip_id)
    cdir = out_dir / "clips" / bundle.clip_id
    (cdir / "faces").mkdir(parents=True, exist_ok=True)
    marker = cdir / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    stage = "preprocess"
    try:
        if not bundle.frames:
            raise InsufficientDataError(f"{bundle.clip_id}: no image frames")
        faces = []
        for _, path in bundle.frames:
            face = preprocess_face(read_image(path))
            (cdir / "faces" / (path.stem + ".pgm")).write_bytes(encode_pgm(face))
            # The CNN sees exactly the bytes written to disk.
            faces.append(quantize(face) / 255.0)

        stage = "classify"
        probs = forward_batch(model, np.stack(faces))
        times = [t for t, _ in bundle.frames]
        image_stream = image_stream_from_probs(times, probs)
        _write_json(cdir / "image_stream.json", stream_to_json(image_stream.entries))

        stage = "landmarks"
        geometry = []
        for (t, _), lm_path in zip(bundle.frames, bundle.landmarks or ()):
            if lm_path is None:
                continue
            f = face_features(parse_landmarks(lm_path.read_bytes()))
            geometry.append({"timestamp": t, "lip_gap": f.lip_gap, "philtrum_len": f.philtrum_len,
                             "normalized_vector": f.normalized_vector.tolist()})
        if geometry:
            _write_json(cdir / "face_features.json", geometry, compact=True)

        stage = "audio"
        if bundle.audio is None:
            raise DataError(f"{bundle.clip_id}: no audio file in manifest")
        audio = read_wav(bundle.audio)
        if audio.duration_s < times[-1]:
            raise AlignmentError(
                f"{bundle.clip_id}: audio lasts {audio.duration_s:g} s but the last frame is at {times[-1]:g} s"
            )
        w = config.window
        speech = []
        for start, end in segment_windows(audio.duration_s, w.min_s, w.max_s, w.target_s):
            fv = extract_features(audio.slice_seconds(start, end), config.features)
            speech.append((start, EmotionDistribution.from_values(
                baseline.predict_proba(fv.to_vector())[0], renormalize=True)))
        _write_json(cdir / "speech_stream.json", stream_to_json(speech))

        stage = "fuse"
        result.verdicts = run_afme(image_stream, speech, audio.duration_s, config.wheel, config.window)
        _write_json(cdir / "verdicts.json", verdicts_document(bundle.clip_id, result.verdicts))
    except Exception as exc:  # noqa: BLE001 - any stage failure marks the clip, the run continues
        result.error, result.stage = _as_emofuse_error(exc), stage
        marker.write_text(f"stage: {stage}\nexit_code: {result.error.exit_code}\nerror: {result.error}\n")
    return result


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_inputs(config: PipelineConfig) -> tuple[ModelSpec, BaselineClassifier]:
    if config.model_path is None or config.baseline_path is None:
        raise ValidationError("config must name both model_path and baseline_path")
    for p in (config.model_path, config.baseline_path):
        if not Path(p).is_file():
            raise ValidationError(f"config references a missing file: {p}")
    model = load_model(Path(config.model_path))
    baseline = BaselineClassifier.load(config.baseline_path)
    expected = feature_names(config.features.n_mfcc)
    if baseline.feature_names and baseline.feature_names != expected:
        raise ValidationError(
            f"baseline was trained on {len(baseline.feature_names)} features, config yields {len(expected)}"
        )
    return model, baseline


@dataclass
class PipelineRun:
    results: list[ClipResult]
    report: dict
    exit_code: int


def run_pipeline(manifest_path: str | Path, config: PipelineConfig, out_dir: str | Path,
                 truth_path: str | Path | None = None) -> PipelineRun:
    manifest_path = Path(manifest_path)
    out = Path(out_dir)
    model, baseline = _load_inputs(config)
    bundles = bundles_from_manifest(read_manifest(manifest_path), manifest_path.parent)
    if truth_path is None and (manifest_path.parent / "truth.csv").is_file():
        truth_path = manifest_path.parent / "truth.csv"
    truth = read_label_csv(Path(truth_path).read_text()) if truth_path is not None else None

    out.mkdir(parents=True, exist_ok=True)
    results = [process_clip(b, model, baseline, config, out) for b in bundles]

    predictions: dict[str, str] = {}
    for r in results:
        predictions.update(r.predictions())
    (out / "predictions.csv").write_text(write_label_csv(predictions))

    failed = [r for r in results if r.failed]
    report: dict = {
        "clips": len(results),
        "failed_clips": [{"clip_id": r.clip_id, "stage": r.stage, "error": str(r.error)} for r in failed],
        "windows": len(predictions),
        "sarcasm_windows": [k for k, v in predictions.items() if v == "SARCASM"],
        "evaluation": None,
    }
    if truth is not None:
        ok = {r.clip_id for r in results if not r.failed}
        scored = {k: v for k, v in truth.items() if k.rsplit(":", 1)[0] in ok}
        try:
            evaluation = evaluate_labels(scored, predictions)
        except InsufficientDataError:
            evaluation = None
        if evaluation is not None:
            report["evaluation"] = evaluation.to_dict()
            (out / "report.csv").write_text(evaluation.summary_csv())
    _write_json(out / "report.json", report)

    _write_json(out / "run_manifest.json", {
        "tool": "emofuse",
        "version": __version__,
        "config_sha256": config.fingerprint(),
        "seed": config.seed,
        "inputs": {
            "manifest_sha256": _sha256(manifest_path),
            "model_sha256": _sha256(Path(config.model_path)),
            "baseline_sha256": _sha256(Path(config.baseline_path)),
            "truth_sha256": None if truth_path is None else _sha256(Path(truth_path)),
        },
        "clips": [r.clip_id for r in results],
        "failed": [r.clip_id for r in failed],
    })
    exit_code = max((r.error.exit_code for r in failed), default=0)
    return PipelineRun(results, report, exit_code)
