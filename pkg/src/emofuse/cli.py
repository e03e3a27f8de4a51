"""Command-line surface: ``emofuse <command> ...``.

Exit codes: 0 success, 2 input/format error, 3 alignment error, 4 internal.
Primary output goes to --out or standard output; diagnostics go to
standard error only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .afme import parse_stream, run_afme, image_stream_from_probs, verdicts_document
from .classify import forward_batch, load_model
from .config import PipelineConfig, check_seed, resolve_config
from .emotions import LABELS, Emotion
from .errors import EmofuseError, InputError, ParameterError
from .evaluation import (
    class_weights,
    consistency_audit,
    evaluate_run,
    format_manifest,
    random_oversample,
    read_manifest,
    read_published,
)
from .pipeline import run_pipeline
from .signal import FeatureConfig, FrameSpec, extract_features, features_csv, features_json, read_wav
from .synth import REGIMES, write_fixture
from .vision import encode_pgm, preprocess_face, quantize, read_image

IMAGE_SUFFIXES = (".ppm", ".pgm", ".pnm")


def _emit(payload: str | bytes, out: str | None) -> None:
    if out is not None:
        path = Path(out)
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload)
    elif isinstance(payload, bytes):
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(payload)
        sys.stdout.flush()


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _config(args) -> PipelineConfig:
    config = resolve_config(args.config)
    if args.seed is not None:
        config = config.with_overrides(seed=check_seed(args.seed))
    return config


# -- commands --------------------------------------------------------------


def cmd_features(args) -> int:
    config = _config(args)
    base = config.features
    frame = FrameSpec(
        frame_len=args.frame_len or base.frame.frame_len,
        hop_len=args.hop_len or base.frame.hop_len,
        window=args.window or base.frame.window,
    )
    fc = FeatureConfig(frame=frame, n_mels=args.n_mels or base.n_mels,
                       n_mfcc=args.n_mfcc or base.n_mfcc)
    fv = extract_features(read_wav(args.audio), fc)
    clip_id = Path(args.audio).stem
    _emit(features_csv([(clip_id, fv)]) if args.format == "csv" else features_json(clip_id, fv), args.out)
    return 0


def cmd_preprocess(args) -> int:
    _emit(encode_pgm(preprocess_face(read_image(args.image))), args.out)
    return 0


def _frame_inputs(path: Path, fps: float) -> list[tuple[float, Path]]:
    if not path.is_dir():
        return [(0.0, path)]
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    stamps_file = path / "timestamps.csv"
    if stamps_file.is_file():
        reader = csv.DictReader(io.StringIO(stamps_file.read_text()))
        if reader.fieldnames != ["file", "timestamp_s"]:
            raise InputError("timestamps.csv header must be exactly 'file,timestamp_s'")
        stamps = {row["file"]: float(row["timestamp_s"]) for row in reader}
        missing = [p.name for p in files if p.name not in stamps]
        if missing:
            raise InputError(f"timestamps.csv has no entry for {missing}")
        frames = sorted(((stamps[p.name], p) for p in files), key=lambda x: x[0])
    else:
        if not fps > 0:
            raise ParameterError(f"--fps must be positive, got {fps}")
        frames = [(i / fps, p) for i, p in enumerate(files)]
    if not frames:
        raise InputError(f"no {'/'.join(IMAGE_SUFFIXES)} frames in {path}")
    return frames


def cmd_classify(args) -> int:
    model = load_model(Path(args.model))
    frames = _frame_inputs(Path(args.input), args.fps)
    faces = np.stack([quantize(preprocess_face(read_image(p))) / 255.0 for _, p in frames])
    probs = forward_batch(model, faces)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["timestamp_s", *LABELS])
        for (t, _), p in zip(frames, probs):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in p])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(json.dumps([[float(t), [float(v) for v in p]] for (t, _), p in zip(frames, probs)]) + "\n",
              args.out)
    return 0


def _load_stream(path: str, what: str):
    return parse_stream(Path(path).read_text(), what)


def cmd_fuse(args) -> int:
    config = _config(args)
    image = _load_stream(args.image_stream, "image stream")
    speech = _load_stream(args.speech_stream, "speech stream")
    stream = image_stream_from_probs([t for t, _ in image], [d.probs for _, d in image])
    verdicts = run_afme(stream, speech, args.duration, config.wheel, config.window)
    clip_id = args.clip_id or Path(args.image_stream).name.split(".")[0]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_s", "end_s", "verdict", "confidence", "rule"])
        for v in verdicts:
            w.writerow([v.window[0], v.window[1], v.verdict_label, repr(v.confidence), v.rule_fired])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dumps(verdicts_document(clip_id, verdicts)), args.out)
    return 0


def cmd_evaluate(args) -> int:
    if args.audit:
        results = []
        for path in args.audit:
            rows = consistency_audit(read_published(Path(path).read_text()))
            results.append({
                "source": Path(path).name,
                "rows": [r.to_dict() for r in rows],
                "flagged": [r.name for r in rows if not r.consistent],
            })
        _emit(_dumps({"audit": results}), args.out)
        return 0
    if not (args.truth and args.predictions):
        raise ParameterError("evaluate needs TRUTH and PREDICTIONS files, or --audit FILE")
    report = evaluate_run(args.truth, args.predictions)
    _emit(report.summary_csv() if args.format == "csv" else report.to_json(), args.out)
    return 0


def cmd_balance(args) -> int:
    manifest = read_manifest(args.manifest)
    if args.method == "oversample":
        seed = check_seed(args.seed if args.seed is not None else 0)
        _emit(format_manifest(random_oversample(manifest, seed)), args.out)
        return 0
    counts = manifest.class_counts()
    if not counts:
        raise InputError("manifest has no labeled rows to weight")
    weights = class_weights(counts)
    _emit(_dumps({e.label: weights.get(e) for e in Emotion}), args.out)
    return 0


def cmd_pipeline(args) -> int:
    target = Path(args.target)
    manifest = target / "manifest.csv" if target.is_dir() else target
    if not manifest.is_file():
        raise InputError(f"no manifest at {manifest}")
    fallback = target / "config.json" if target.is_dir() else None
    config = resolve_config(args.config, fallback)
    if args.seed is not None:
        config = config.with_overrides(seed=check_seed(args.seed))
    out = args.out or config.out_dir
    if out is None:
        raise ParameterError("pipeline needs --out or out_dir in the config")
    run = run_pipeline(manifest, config, out, args.truth)
    for r in run.results:
        if r.failed:
            print(f"emofuse: clip {r.clip_id} failed at {r.stage}: {r.error}", file=sys.stderr)
    sys.stdout.write(_dumps(run.report))
    return run.exit_code


def cmd_synth_fixture(args) -> int:
    if args.out is None:
        raise ParameterError("synth-fixture needs --out DIR")
    seed = check_seed(args.seed if args.seed is not None else 0)
    summary = write_fixture(args.out, args.regime, seed, n_clips=args.clips, landmarks=not args.no_landmarks)
    _emit(_dumps({"clips": [c.clip_id for c in summary.clips], "sarcasm_windows": summary.sarcasm_keys}), None)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: $EMOFUSE_CONFIG)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="emofuse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"emofuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", parents=[common], help="audio feature vector for a WAV file")
    p.add_argument("audio")
    p.add_argument("--frame-len", type=int)
    p.add_argument("--hop-len", type=int)
    p.add_argument("--window", choices=("hann", "rectangular"))
    p.add_argument("--n-mels", type=int)
    p.add_argument("--n-mfcc", type=int)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("preprocess", parents=[common], help="PNM image to a 48x48 grayscale PGM")
    p.add_argument("image")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("classify", parents=[common], help="per-frame emotion distributions")
    p.add_argument("model")
    p.add_argument("input", help="image file or directory of frames")
    p.add_argument("--fps", type=float, default=1.0, help="frame rate when no timestamps.csv is present")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("fuse", parents=[common], help="fuse image and speech streams into verdicts")
    p.add_argument("image_stream")
    p.add_argument("speech_stream")
    p.add_argument("--duration", type=float, required=True, help="clip duration in seconds")
    p.add_argument("--clip-id")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions or audit published metrics")
    p.add_argument("truth", nargs="?")
    p.add_argument("predictions", nargs="?")
    p.add_argument("--audit", action="append", metavar="CSV", help="class,precision,recall,f1 file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("balance", parents=[common], help="oversample a manifest or compute class weights")
    p.add_argument("manifest")
    p.add_argument("--method", choices=("oversample", "reweight"), required=True)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("pipeline", parents=[common], help="run every stage over a bundle or manifest")
    p.add_argument("target", help="bundle directory or manifest CSV")
    p.add_argument("--truth", help="key,label truth file (default: truth.csv beside the manifest)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth-fixture", parents=[common], help="write a synthetic clip bundle")
    p.add_argument("--regime", choices=REGIMES, default="mixed")
    p.add_argument("--clips", type=int, default=12)
    p.add_argument("--no-landmarks", action="store_true")
    p.set_defaults(func=cmd_synth_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmofuseError as exc:
        print(f"emofuse {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"emofuse {args.command}: cannot access {exc.filename}: {exc.strerror}", file=sys.stderr)
        return InputError.exit_code
    except (ValueError, KeyError) as exc:
        print(f"emofuse {args.command}: invalid input: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
