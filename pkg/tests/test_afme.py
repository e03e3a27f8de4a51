import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emofuse.afme import (
    SARCASM,
    FrameLabelStream,
    PlutchikWheel,
    ScoredTopK,
    WindowConfig,
    afme_fuse,
    blend_emotions,
    frame_pmf,
    parse_stream,
    run_afme,
    segment_windows,
    speech_top3,
    top3,
    verdicts_document,
    wheel_distance,
)
from emofuse.emotions import Emotion, EmotionDistribution
from emofuse.errors import (
    AlignmentError,
    DataError,
    InsufficientDataError,
    ParameterError,
    UnmappedEmotionError,
)

A, D, F, H, S, U, N = (Emotion.ANGER, Emotion.DISGUST, Emotion.FEAR, Emotion.HAPPY,
                       Emotion.SAD, Emotion.SURPRISE, Emotion.NEUTRAL)
WHEEL = PlutchikWheel()
MAPPED = [e for e in Emotion if e != N]


def peaked(e, p=0.8):
    v = np.full(7, (1 - p) / 6)
    v[int(e)] = p
    return EmotionDistribution(v)


def stream(labels, t0=0.0, dt=1.0, p=0.8):
    return FrameLabelStream(tuple((t0 + i * dt, peaked(e, p)) for i, e in enumerate(labels)))


def topk(*pairs, source="speech"):
    return ScoredTopK(tuple(pairs), source)


class TestSegmentWindows:
    def test_exact_tiling(self):
        assert segment_windows(12) == [(0, 6), (6, 12)]

    def test_tail_merged(self):
        assert segment_windows(20) == [(0, 6), (6, 12), (12, 20)]

    def test_short_clip(self):
        assert segment_windows(4) == [(0, 4)]

    def test_tail_kept_when_merge_too_long(self):
        # 3 s tail would make a 9 s window, so it stays short
        assert segment_windows(15) == [(0, 6), (6, 12), (12, 15)]

    def test_tail_at_minimum(self):
        assert segment_windows(17) == [(0, 6), (6, 12), (12, 17)]

    def test_invalid(self):
        with pytest.raises(ParameterError):
            segment_windows(0)
        with pytest.raises(ParameterError):
            segment_windows(10, min_s=7, target_s=6)

    @given(st.floats(0.1, 600))
    def test_tiles_duration(self, duration):
        w = segment_windows(duration)
        assert w[0][0] == 0 and w[-1][1] == duration
        assert all(a[1] == b[0] for a, b in zip(w, w[1:]))
        assert all(e - s <= 8 + 1e-9 for s, e in w)
        # Only the final window may deviate from the target length.
        assert all(abs((e - s) - 6) <= 1e-9 for s, e in w[:-1])


class TestFramePMF:
    def test_frequency_count(self):
        pmf = frame_pmf(stream([H, H, A, H]), (0, 10))
        assert pmf.mass == {A: 0.25, H: 0.75}

    def test_point_mass(self):
        assert frame_pmf(stream([S] * 5), (0, 10)).mass == {S: 1.0}

    def test_tie_goes_to_lower_ordinal(self):
        v = np.array([0.3, 0.1, 0.1, 0.3, 0.1, 0.05, 0.05])
        s = FrameLabelStream(((0.0, EmotionDistribution(v)), (1.0, EmotionDistribution(v))))
        assert frame_pmf(s, (0, 5)).mass == {A: 1.0}

    def test_window_bounds(self):
        s = stream([H, A, S, U], t0=4.0)  # t = 4, 5, 6, 7
        assert frame_pmf(s, (0, 6)).mass == {H: 0.5, A: 0.5}
        assert frame_pmf(s, (6, 7)).mass == {S: 1.0}
        assert frame_pmf(s, (6, 7), include_end=True).mass == {S: 0.5, U: 0.5}

    def test_empty_window(self):
        with pytest.raises(InsufficientDataError):
            frame_pmf(stream([H]), (3, 6))

    def test_timestamps_increasing(self):
        with pytest.raises(DataError):
            FrameLabelStream(((1.0, peaked(H)), (1.0, peaked(H))))

    def test_confidence_retained(self):
        s = FrameLabelStream(((0.0, peaked(H, 0.9)), (1.0, peaked(H, 0.5)), (2.0, peaked(A, 0.7))))
        pmf = frame_pmf(s, (0, 3))
        assert pmf.confidence[H] == pytest.approx(0.7)
        assert pmf.confidence[A] == pytest.approx(0.7)


class TestTop3:
    def _pmf(self, mass, conf=None):
        from emofuse.afme import FramePMF
        return FramePMF(mass, conf or {e: 0.5 for e in mass}, 10)

    def test_ordering(self):
        assert top3(self._pmf({H: .5, A: .3, S: .2})).labels == [H, A, S]

    def test_tie_by_ordinal(self):
        assert top3(self._pmf({H: .4, A: .4, S: .2})).labels == [A, H, S]

    def test_tie_by_confidence_first(self):
        t = top3(self._pmf({H: .4, A: .4, S: .2}, {H: .9, A: .6, S: .5}))
        assert t.labels == [H, A, S]

    def test_nonzero_only(self):
        assert top3(self._pmf({H: 1.0})).labels == [H]

    def test_truncates_to_three(self):
        assert top3(self._pmf({H: .4, A: .3, S: .2, U: .1})).labels == [H, A, S]

    def test_all_zero(self):
        with pytest.raises(InsufficientDataError):
            top3(self._pmf({H: 0.0}))

    def test_speech_top3(self):
        d = EmotionDistribution([0.05, 0.05, 0.1, 0.6, 0.0, 0.0, 0.2])
        assert speech_top3(d).entries == ((H, 0.6), (N, 0.2), (F, 0.1))


class TestWheel:
    def test_examples(self):
        assert wheel_distance(WHEEL, H, S) == 180
        assert wheel_distance(WHEEL, F, U) == 45
        assert wheel_distance(WHEEL, H, A) == 90

    def test_neutral_unmapped(self):
        with pytest.raises(UnmappedEmotionError):
            wheel_distance(WHEEL, N, H)

    def test_metric_axioms(self):
        for a, b in itertools.product(MAPPED, repeat=2):
            d = wheel_distance(WHEEL, a, b)
            assert 0 <= d <= 180
            assert d == wheel_distance(WHEEL, b, a)
            assert (d == 0) == (a == b)
        for a, b, c in itertools.product(MAPPED, repeat=3):
            assert wheel_distance(WHEEL, a, c) <= wheel_distance(WHEEL, a, b) + wheel_distance(WHEEL, b, c)

    def test_bad_thresholds(self):
        with pytest.raises(ParameterError):
            PlutchikWheel(sarcasm_threshold_deg=0)
        with pytest.raises(ParameterError):
            PlutchikWheel(sarcasm_threshold_deg=200)


class TestBlend:
    def test_fear_surprise_weighted(self):
        mean = math.degrees(math.atan2(0.6 + 0.7 * math.sin(math.radians(135)), 0.7 * math.cos(math.radians(135))))
        assert 114.0 < mean < 114.5
        assert abs(135 - mean) < abs(90 - mean)
        assert blend_emotions(F, 0.6, U, 0.7, WHEEL) == U

    def test_same_emotion(self):
        for e in MAPPED:
            assert blend_emotions(e, 0.2, e, 0.9, WHEEL) == e

    def test_equidistant_equal_weight_ordinal(self):
        assert blend_emotions(F, 0.5, U, 0.5, WHEEL) == F
        assert blend_emotions(U, 0.5, F, 0.5, WHEEL) == F

    def test_unmapped(self):
        with pytest.raises(UnmappedEmotionError):
            blend_emotions(N, 0.5, H, 0.5, WHEEL)


class TestFuse:
    def test_intersection(self):
        speech = topk((H, .6), (N, .3), (S, .1))
        image = topk((H, .8), (U, .1), (N, .1), source="image")
        v = afme_fuse(speech, image, WHEEL)
        assert v.verdict == H and v.rule_fired == "intersection"
        assert v.confidence == pytest.approx(0.7)

    def test_sarcasm_case(self):
        speech = topk((A, .7), (D, .2), (F, .1))
        image = topk((H, .8), (U, .1), (S, .1), source="image")
        v = afme_fuse(speech, image, WHEEL)
        assert v.verdict == SARCASM and v.rule_fired == "sarcasm" and v.is_sarcasm
        assert v.confidence == pytest.approx(0.7)

    def test_blend_case(self):
        speech = topk((F, .6), (D, .3), (A, .1))
        image = topk((U, .7), (S, .2), (H, .1), source="image")
        v = afme_fuse(speech, image, WHEEL)
        assert v.rule_fired == "blend"
        assert v.verdict == U

    def test_neutral_fallback(self):
        speech = topk((N, .6), (D, .3), (A, .1))
        image = topk((H, .9), (U, .1), source="image")
        v = afme_fuse(speech, image, WHEEL)
        assert v.verdict == H and v.rule_fired == "neutral_fallback"
        v = afme_fuse(image, speech, WHEEL)
        assert v.verdict == H

    def test_between_thresholds_keeps_stronger(self):
        wheel = PlutchikWheel(sarcasm_threshold_deg=135, blend_threshold_deg=45)
        v = afme_fuse(topk((A, .7)), topk((H, .8), source="image"), wheel)
        assert v.rule_fired == "blend" and v.verdict == H

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            afme_fuse(topk(), topk((H, 1.0)), WHEEL)

    def test_document_schema(self):
        v = afme_fuse(topk((A, .7)), topk((H, .8), source="image"), WHEEL, window=(0, 6))
        doc = verdicts_document("c1", [v])
        w = doc["windows"][0]
        assert set(w) == {"start_s", "end_s", "image_top3", "speech_top3", "verdict", "sarcasm",
                          "confidence", "rule"}
        assert w["image_top3"] == [["Happy", 0.8]]
        assert w["verdict"] == "SARCASM" and w["sarcasm"] is True


scored = st.lists(
    st.tuples(st.sampled_from(list(Emotion)), st.floats(0.0, 1.0)), min_size=1, max_size=3,
    unique_by=lambda p: p[0],
).map(lambda ps: ScoredTopK(tuple(sorted(ps, key=lambda p: -p[1])), "x"))


class TestFuseProperties:
    @settings(max_examples=500)
    @given(scored, scored)
    def test_sarcasm_iff_disjoint_contrast(self, a, b):
        v = afme_fuse(a, b, WHEEL)
        w = afme_fuse(b, a, WHEEL)
        assert v.is_sarcasm == w.is_sarcasm
        if set(a.labels) & set(b.labels):
            assert not v.is_sarcasm
        assert v.is_sarcasm == (v.rule_fired == "sarcasm")

    @settings(max_examples=200)
    @given(scored, scored)
    def test_equal_top1_wins(self, a, b):
        b = ScoredTopK(((a.top1[0], b.top1[1]),) + tuple(p for p in b.entries[1:] if p[0] != a.top1[0]), "y")
        # Rebuild only if still sorted.
        if any(y[1] > x[1] for x, y in zip(b.entries, b.entries[1:])):
            return
        # A tied runner-up may legitimately win on ordinal.
        if any(len(t.entries) > 1 and t.entries[1][1] >= t.top1[1] for t in (a, b)):
            return
        assert afme_fuse(a, b, WHEEL).verdict == a.top1[0]


class TestRunAfme:
    def test_agreeing_clip(self):
        img = stream([H] * 12, t0=0.5)
        speech = {0.0: peaked(H), 6.0: peaked(H)}
        verdicts = run_afme(img, speech, 12.0)
        assert [v.verdict for v in verdicts] == [H, H]

    def test_contrast_window(self):
        img = stream([H] * 6 + [S] * 6, t0=0.5)
        speech = [(0.0, peaked(A, 0.9)), (6.0, peaked(S))]
        verdicts = run_afme(img, speech, 12.0)
        assert [v.is_sarcasm for v in verdicts] == [True, False]

    def test_missing_speech_window(self):
        with pytest.raises(AlignmentError, match="window 1"):
            run_afme(stream([H] * 12), {0.0: peaked(H)}, 12.0)

    def test_extra_speech_entry(self):
        with pytest.raises(AlignmentError, match="no matching window"):
            run_afme(stream([H] * 12), {0.0: peaked(H), 6.0: peaked(H), 9.0: peaked(H)}, 12.0)

    def test_window_without_frames(self):
        with pytest.raises(AlignmentError, match="no image frames"):
            run_afme(stream([H] * 3), {0.0: peaked(H), 6.0: peaked(H)}, 12.0)

    def test_last_frame_at_duration_counts(self):
        img = FrameLabelStream(((1.0, peaked(H)), (12.0, peaked(S))))
        verdicts = run_afme(img, {0.0: peaked(H), 6.0: peaked(S)}, 12.0)
        assert verdicts[1].verdict == S

    def test_custom_windows(self):
        img = stream([H] * 20)
        speech = {float(t): peaked(H) for t in (0, 4, 8, 12, 16)}
        out = run_afme(img, speech, 20.0, windows=WindowConfig(3, 5, 4))
        assert len(out) == 5

    def test_parse_stream_forms(self):
        probs = peaked(H).tolist()
        a = parse_stream([[0.5, probs], [1.0] + probs, {"timestamp": 2.0, "probs": probs}])
        assert [t for t, _ in a] == [0.5, 1.0, 2.0]
        with pytest.raises(DataError):
            parse_stream([[0.5, [0.5, 0.5]]])
