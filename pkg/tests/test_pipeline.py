import json
import shutil

import numpy as np
import pytest

from emofuse.classify import forward_batch, load_model
from emofuse.config import PipelineConfig, check_seed, load_config, resolve_config
from emofuse.emotions import Emotion
from emofuse.errors import AlignmentError, DataError, ValidationError
from emofuse.evaluation import read_label_csv, read_manifest
from emofuse.pipeline import bundles_from_manifest, run_pipeline
from emofuse.signal import AudioBuffer, extract_features, write_wav
from emofuse.synth import (
    SAMPLE_RATE,
    gray_level,
    plan_clips,
    planted_model,
    tone,
    train_speech_baseline,
    write_fixture,
)


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestConfig:
    def test_defaults(self):
        c = PipelineConfig()
        assert (c.window.min_s, c.window.max_s, c.window.target_s) == (5.0, 8.0, 6.0)
        assert c.wheel.sarcasm_threshold_deg == 90.0 and c.features.n_mfcc == 13

    def test_paths_relative_to_file(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"model_path": "m.json", "window": {"target_s": 7}}))
        c = load_config(tmp_path / "c.json")
        assert c.model_path == tmp_path / "m.json" and c.window.target_s == 7

    @pytest.mark.parametrize("doc", [
        {"bogus": 1},
        {"window": {"min_s": 9}},
        {"wheel": {"blend_threshold_deg": 120}},
        {"frame": {"hop_len": 4096}},
        {"seed": -1},
        {"seed": 2**64},
        {"seed": "7"},
        {"model_path": 3},
    ])
    def test_invalid(self, doc):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict(doc)

    def test_bad_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{")
        with pytest.raises(ValidationError):
            load_config(tmp_path / "c.json")

    def test_seed_bounds(self):
        assert check_seed(0) == 0 and check_seed(2**64 - 1) == 2**64 - 1
        with pytest.raises(ValidationError):
            check_seed(True)

    def test_fingerprint_ignores_paths(self):
        a = PipelineConfig.from_dict({"model_path": "a.json", "seed": 1})
        b = PipelineConfig.from_dict({"model_path": "b.json", "seed": 2})
        c = PipelineConfig.from_dict({"wheel": {"sarcasm_threshold_deg": 100}})
        assert a.fingerprint() == b.fingerprint() != c.fingerprint()

    def test_resolution_order(self, tmp_path, monkeypatch):
        for name, target in (("explicit", 6.5), ("env", 7.0), ("fallback", 7.5)):
            (tmp_path / f"{name}.json").write_text(json.dumps({"window": {"target_s": target}}))
        monkeypatch.setenv("EMOFUSE_CONFIG", str(tmp_path / "env.json"))
        assert resolve_config(tmp_path / "explicit.json", tmp_path / "fallback.json").window.target_s == 6.5
        assert resolve_config(None, tmp_path / "fallback.json").window.target_s == 7.0
        monkeypatch.delenv("EMOFUSE_CONFIG")
        assert resolve_config(None, tmp_path / "fallback.json").window.target_s == 7.5
        assert resolve_config(None, tmp_path / "absent.json") == PipelineConfig()


class TestPlantedModel:
    def test_reads_gray_levels(self):
        model = planted_model()
        levels = [gray_level(e) + d for e in Emotion for d in (-4, 0, 4)]
        probs = forward_batch(model, np.array([np.full((48, 48), v / 255) for v in levels]))
        assert probs.argmax(axis=1).tolist() == [int(e) for e in Emotion for _ in range(3)]

    def test_levels_distinct_and_in_range(self):
        levels = [gray_level(e) for e in Emotion]
        assert len(set(levels)) == 7 and min(levels) > 4 and max(levels) < 251


class TestSpeechBaseline:
    def test_tones_classified(self):
        baseline = train_speech_baseline(0)
        rng = np.random.default_rng(42)
        for e in Emotion:
            fv = extract_features(AudioBuffer(tone(e, 6.0, rng), SAMPLE_RATE))
            assert int(np.argmax(baseline.predict_proba(fv.to_vector()))) == int(e)

    def test_anger_top3_excludes_happy(self):
        # The contrast windows rely on this: speech Anger must not share a top-3 member with image Happy.
        baseline = train_speech_baseline(0)
        fv = extract_features(AudioBuffer(tone(Emotion.ANGER, 6.0, np.random.default_rng(3)), SAMPLE_RATE))
        p = baseline.predict_proba(fv.to_vector())[0]
        assert int(Emotion.HAPPY) not in np.argsort(-p)[:3]


class TestSynth:
    def test_plan_regimes(self):
        agree = plan_clips("agree", 0, n_clips=3)
        assert not any(w.truth == "Sarcasm" for c in agree for w in c.windows)
        contrast = plan_clips("contrast", 0, n_clips=3)
        assert all(c.windows[0].truth == "Sarcasm" and c.windows[1].truth != "Sarcasm" for c in contrast)
        mixed = plan_clips("mixed", 0, n_clips=4)
        assert [c.contrast for c in mixed] == [False, True, False, True]

    def test_contrast_window_shape(self):
        w = plan_clips("contrast", 5, n_clips=1)[0].windows[0]
        assert set(w.image) == {Emotion.HAPPY} and w.speech == Emotion.ANGER
        assert (w.start_s, w.end_s) == (0.0, 6.0) and len(w.image) == 6

    def test_bad_regime(self):
        with pytest.raises(ValueError):
            plan_clips("sideways", 0)

    def test_same_seed_same_bytes(self, tmp_path):
        write_fixture(tmp_path / "a", "mixed", seed=4, n_clips=2)
        write_fixture(tmp_path / "b", "mixed", seed=4, n_clips=2)
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_manifest_consistent(self, mixed_bundle):
        manifest = read_manifest(mixed_bundle.root / "manifest.csv")
        bundles = bundles_from_manifest(manifest, mixed_bundle.root)
        assert [b.clip_id for b in bundles] == [c.clip_id for c in mixed_bundle.clips]
        assert all(len(b.frames) == 12 and b.audio.is_file() for b in bundles)
        assert all(all(m is not None for m in b.landmarks) for b in bundles)
        truth = read_label_csv((mixed_bundle.root / "truth.csv").read_text())
        assert len(truth) == 24
        assert load_model((mixed_bundle.root / "model.json").read_text()).meta["name"]


class TestPipeline:
    def _config(self, bundle):
        return load_config(bundle.root / "config.json")

    def test_verdicts_match_plan(self, tmp_path, mixed_bundle):
        run = run_pipeline(mixed_bundle.root / "manifest.csv", self._config(mixed_bundle), tmp_path)
        assert run.exit_code == 0
        ev = run.report["evaluation"]
        assert ev["accuracy"] == 1.0 and ev["sarcasm"] == {"tp": 6, "fp": 0, "fn": 0}
        doc = json.loads((tmp_path / "clips" / "clip_01" / "verdicts.json").read_text())
        assert doc["windows"][0]["rule"] == "sarcasm"
        assert doc["windows"][0]["image_top3"][0][0] == "Happy"
        assert doc["windows"][0]["speech_top3"][0][0] == "Anger"

    def test_artifacts(self, tmp_path, agree_bundle):
        run_pipeline(agree_bundle.root / "manifest.csv", self._config(agree_bundle), tmp_path)
        clip = tmp_path / "clips" / "clip_00"
        assert len(list((clip / "faces").glob("*.pgm"))) == 12
        geometry = json.loads((clip / "face_features.json").read_text())
        assert len(geometry) == 12 and len(geometry[0]["normalized_vector"]) == 128
        for name in ("predictions.csv", "report.json", "report.csv", "run_manifest.json"):
            assert (tmp_path / name).is_file()
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert {"version", "config_sha256", "seed"} <= set(manifest)

    def test_byte_identical_rerun(self, tmp_path, agree_bundle):
        cfg = self._config(agree_bundle)
        run_pipeline(agree_bundle.root / "manifest.csv", cfg, tmp_path / "a")
        run_pipeline(agree_bundle.root / "manifest.csv", cfg, tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_short_audio_is_alignment_failure(self, tmp_path, agree_bundle):
        bundle = tmp_path / "bundle"
        shutil.copytree(agree_bundle.root, bundle)
        rng = np.random.default_rng(0)
        write_wav(bundle / "clips" / "clip_02" / "audio.wav",
                  AudioBuffer(tone(Emotion.SAD, 8.0, rng), SAMPLE_RATE))
        run = run_pipeline(bundle / "manifest.csv", load_config(bundle / "config.json"), tmp_path / "o")
        assert run.exit_code == AlignmentError.exit_code
        marker = (tmp_path / "o" / "clips" / "clip_02" / "FAILED").read_text()
        assert "stage: audio" in marker
        assert run.report["windows"] == 6

    def test_marker_cleared_on_success(self, tmp_path, agree_bundle):
        out = tmp_path / "o"
        (out / "clips" / "clip_00").mkdir(parents=True)
        (out / "clips" / "clip_00" / "FAILED").write_text("stale")
        run_pipeline(agree_bundle.root / "manifest.csv", self._config(agree_bundle), out)
        assert not (out / "clips" / "clip_00" / "FAILED").exists()

    def test_unsorted_timestamps_rejected(self, tmp_path, agree_bundle):
        bundle = tmp_path / "bundle"
        shutil.copytree(agree_bundle.root, bundle)
        text = (bundle / "manifest.csv").read_text().splitlines()
        text[2] = text[2].rsplit(",", 1)[0] + ",0.5"  # duplicate of the first frame's time
        (bundle / "manifest.csv").write_text("\n".join(text) + "\n")
        with pytest.raises(DataError):
            bundles_from_manifest(read_manifest(bundle / "manifest.csv"), bundle)

    def test_rerun_into_same_dir_is_stable(self, tmp_path, agree_bundle):
        cfg = self._config(agree_bundle)
        run_pipeline(agree_bundle.root / "manifest.csv", cfg, tmp_path / "a")
        snapshot = tree_bytes(tmp_path / "a")
        run_pipeline(agree_bundle.root / "manifest.csv", cfg, tmp_path / "a")
        assert tree_bytes(tmp_path / "a") == snapshot
