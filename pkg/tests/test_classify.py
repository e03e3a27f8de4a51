import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emofuse.classify import (
    AdamState,
    BaselineClassifier,
    adam_step,
    batchnorm_infer,
    conv2d,
    cross_entropy,
    dropout,
    fit_baseline,
    forward,
    forward_batch,
    load_model,
    lr_schedule,
    maxpool2d,
    model_document,
    random_model,
    relu,
    softmax,
    train_baseline,
    zero_model,
)
from emofuse.emotions import Emotion
from emofuse.errors import DataError, ParameterError, ShapeError, ValidationError

from oracles import conv2d_loops, conv2d_windows, softmax_cross_entropy


@pytest.fixture(scope="module")
def small_random_model():
    return random_model(seed=11)


class TestConv2d:
    def test_center_tap_identity(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(6, 5, 2))
        k = np.zeros((2, 2, 3, 3))
        k[0, 0, 1, 1] = k[1, 1, 1, 1] = 1
        assert np.array_equal(conv2d(x, k, np.zeros(2)), x)

    def test_all_ones_center_is_sum(self):
        x = np.arange(9.0).reshape(3, 3, 1)
        out = conv2d(x, np.ones((1, 1, 3, 3)), np.zeros(1))
        assert out[1, 1, 0] == x.sum()
        assert out[0, 0, 0] == 0 + 1 + 3 + 4  # zero padding at the corner

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(8, 8, 2))
        k = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        assert np.max(np.abs(conv2d(x, k, b) - conv2d_loops(x, k, b))) <= 1e-6

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError, match="channels"):
            conv2d(np.zeros((4, 4, 3)), np.zeros((2, 2, 3, 3)), np.zeros(2))

    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3, 7, 7, 2))
        k = rng.normal(size=(4, 2, 3, 3))
        b = rng.normal(size=4)
        batched = conv2d(x, k, b)
        for i in range(3):
            assert np.allclose(batched[i], conv2d(x[i], k, b), atol=1e-12)


class TestPointwise:
    def test_batchnorm_identity(self):
        x = np.random.default_rng(0).normal(size=(4, 4, 3))
        assert np.array_equal(batchnorm_infer(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), eps=0), x)

    def test_batchnorm_at_mean_gives_beta(self):
        mean = np.array([0.5, -1.0])
        beta = np.array([2.0, 3.0])
        x = np.broadcast_to(mean, (3, 3, 2))
        out = batchnorm_infer(x, np.array([4.0, 5.0]), beta, mean, np.array([2.0, 0.1]))
        assert np.allclose(out, beta)

    def test_batchnorm_formula(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 5, 4))
        g, b, m, v = rng.normal(size=4), rng.normal(size=4), rng.normal(size=4), rng.uniform(0.1, 2, 4)
        out = batchnorm_infer(x, g, b, m, v, eps=1e-5)
        for c in range(4):
            for i in range(5):
                for j in range(5):
                    ref = g[c] * (x[i, j, c] - m[c]) / math.sqrt(v[c] + 1e-5) + b[c]
                    assert abs(out[i, j, c] - ref) <= 1e-9

    def test_relu(self):
        x = np.array([-2.0, -0.0, 0.0, 1.5])
        assert relu(x).tolist() == [0.0, 0.0, 0.0, 1.5]
        assert np.array_equal(relu(relu(x)), relu(x))

    def test_maxpool(self):
        assert maxpool2d(np.array([[1.0, 2], [3, 4]])[..., None])[..., 0].tolist() == [[4.0]]
        assert np.all(maxpool2d(np.full((6, 6, 2), 7.0)) == 7.0)
        assert maxpool2d(np.zeros((5, 5, 1))).shape == (2, 2, 1)

    def test_maxpool_floor_semantics(self):
        x = np.zeros((5, 5, 1))
        x[4, :, 0] = 100  # dropped row
        assert np.all(maxpool2d(x) == 0)


class TestDropout:
    def test_inference_identity(self):
        x = np.arange(10.0)
        assert dropout(x, 0.5, train=False) is x

    def test_p_zero(self):
        x = np.arange(10.0)
        assert np.array_equal(dropout(x, 0.0, train=True, rng=1), x)

    def test_seeded_mask(self):
        x = np.ones(10_000)
        a = dropout(x, 0.5, train=True, rng=42)
        b = dropout(x, 0.5, train=True, rng=42)
        assert np.array_equal(a, b)
        assert set(np.unique(a)) <= {0.0, 2.0}
        assert a.mean() == pytest.approx(1.0, rel=0.10)

    def test_p_one_rejected(self):
        with pytest.raises(ParameterError):
            dropout(np.ones(3), 1.0, train=True)


class TestSoftmax:
    def test_zeros_uniform(self):
        assert np.all(softmax(np.zeros(7)) == 1 / 7)

    @given(st.lists(st.floats(-50, 50), min_size=7, max_size=7), st.floats(-100, 100))
    def test_shift_invariant(self, v, c):
        assert np.allclose(softmax(v), softmax(np.asarray(v) + c), atol=1e-12)

    def test_closed_form(self):
        v = [math.log(1), math.log(2), math.log(4)] + [-math.inf] * 4
        assert np.allclose(softmax(v), [1 / 7, 2 / 7, 4 / 7, 0, 0, 0, 0], atol=1e-15)


class TestForward:
    def test_zero_model_uniform(self):
        trace = []
        dist = forward(zero_model(), np.random.default_rng(0).uniform(0, 1, (48, 48)), trace)
        assert np.all(dist.probs == 1 / 7)
        assert [shape for _, shape in trace[:3]] == [(24, 24, 64), (12, 12, 128), (6, 6, 256)]

    def test_random_model_matches_oracle_composition(self, small_random_model):
        m = small_random_model
        img = np.random.default_rng(5).uniform(0, 1, (48, 48))
        x = img[..., None]
        for b in m.blocks:
            x = conv2d_windows(x, b.kernel, b.bias)
            x = b.bn_gamma * (x - b.bn_mean) / np.sqrt(b.bn_var + b.bn_eps) + b.bn_beta
            x = np.maximum(x, 0)
            h, w, c = x.shape
            x = x.reshape(h // 2, 2, w // 2, 2, c).max(axis=(1, 3))
        logits = x.reshape(-1) @ m.head_weight + m.head_bias
        ref = np.exp(logits - logits.max())
        ref /= ref.sum()
        got = forward(m, img).probs
        assert np.max(np.abs(got - ref)) <= 1e-6
        assert got.sum() == pytest.approx(1.0, abs=1e-9)

    def test_batch_consistent(self, small_random_model):
        imgs = np.random.default_rng(6).uniform(0, 1, (3, 48, 48))
        batch = forward_batch(small_random_model, imgs)
        for i in range(3):
            assert np.allclose(batch[i], forward(small_random_model, imgs[i]).probs, atol=1e-12)

    def test_wrong_input_shape(self):
        with pytest.raises(ShapeError, match="input"):
            forward(zero_model(), np.zeros((32, 32)))

    def test_deterministic(self, small_random_model):
        img = np.random.default_rng(7).uniform(0, 1, (48, 48))
        a = forward(small_random_model, img).probs
        b = forward(small_random_model, img).probs
        assert a.tobytes() == b.tobytes()


class TestLoadModel:
    def test_roundtrip(self, small_random_model):
        doc = json.loads(json.dumps(model_document(small_random_model)))
        m = load_model(doc)
        for name, arr in small_random_model.tensors().items():
            assert np.array_equal(m.tensors()[name], arr)

    def test_bad_width(self):
        doc = model_document(zero_model())
        doc["arch"]["blocks"] = [64, 100, 256]
        with pytest.raises(ValidationError, match="block2.out_channels"):
            load_model(doc)

    def test_tensor_width_mismatch(self):
        doc = model_document(zero_model())
        doc["tensors"]["block2.kernel"]["shape"] = [100, 64, 3, 3]
        with pytest.raises(ValidationError, match="block2.out_channels"):
            load_model(doc)

    def test_nan(self):
        doc = model_document(zero_model())
        doc["tensors"]["head.bias"]["data"][3] = float("nan")
        text = json.dumps(doc)  # emits NaN, which Python's parser accepts
        with pytest.raises(ValidationError, match="head.bias"):
            load_model(text)

    def test_missing_tensor(self):
        doc = model_document(zero_model())
        del doc["tensors"]["block3.bn_var"]
        with pytest.raises(ValidationError, match="block3.bn_var: missing"):
            load_model(doc)

    def test_negative_variance(self):
        doc = model_document(zero_model())
        doc["tensors"]["block1.bn_var"]["data"][0] = -1.0
        with pytest.raises(ValidationError, match="variance"):
            load_model(doc)

    def test_wrong_value_count(self):
        doc = model_document(zero_model())
        doc["tensors"]["head.bias"]["data"].append(0.0)
        with pytest.raises(ValidationError, match="head.bias"):
            load_model(doc)


class TestAdam:
    def test_zero_gradient(self):
        p = {"x": np.array([0.3, -2.0])}
        new, state = adam_step(p, {"x": np.zeros(2)}, AdamState())
        assert np.array_equal(new["x"], p["x"])
        assert state.t == 1

    def test_first_step(self):
        new, _ = adam_step({"x": np.array([0.0])}, {"x": np.array([1.0])}, AdamState())
        assert new["x"][0] == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)

    def test_quadratic_converges(self):
        p, s = {"x": np.array([1.0])}, AdamState(lr=0.001)
        for _ in range(5000):
            p, s = adam_step(p, {"x": 2 * p["x"]}, s)
            if abs(p["x"][0]) < 1e-3:
                break
        assert abs(p["x"][0]) < 1e-3

    def test_inputs_not_mutated(self):
        p = {"x": np.array([1.0])}
        adam_step(p, {"x": np.array([1.0])}, AdamState())
        assert p["x"][0] == 1.0


class TestSchedules:
    @pytest.mark.parametrize("kind", ["time_based", "step", "exponential"])
    def test_epoch_zero(self, kind):
        assert lr_schedule(kind, 0.001, 0) == 0.001

    def test_step(self):
        assert lr_schedule("step", 0.01, 10, drop=0.5, period=10) == 0.005
        assert lr_schedule("step", 0.01, 9, drop=0.5, period=10) == 0.01

    def test_exponential(self):
        assert lr_schedule("exponential", 0.01, 10, k=0.1) == pytest.approx(0.01 * math.exp(-1))

    def test_time_based(self):
        assert lr_schedule("time_based", 0.01, 10, decay=0.1) == pytest.approx(0.005)

    def test_unknown(self):
        with pytest.raises(ParameterError):
            lr_schedule("cosine", 0.01, 1)


def separable_toy(n=20, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal([2.0, 2.0], 0.5, (half, 2))
    b = rng.normal([-2.0, -2.0], 0.5, (n - half, 2))
    return np.vstack([a, b]), [Emotion.HAPPY] * half + [Emotion.SAD] * (n - half)


class TestBaseline:
    def test_separable_reaches_full_accuracy(self):
        x, y = separable_toy()
        res = train_baseline(x, y, epochs=500)
        pred = np.argmax(x @ res.weight + res.bias, axis=1)
        assert np.all(pred == [int(e) for e in y])

    def test_zero_init_is_uniform(self):
        x, y = separable_toy()
        res = train_baseline(x, y, epochs=0)
        assert np.all(softmax(x @ res.weight + res.bias) == 1 / 7)

    def test_loss_monotone_over_windows(self):
        x, y = separable_toy()
        losses = train_baseline(x, y, epochs=300).losses
        assert all(losses[i + 10] <= losses[i] for i in range(len(losses) - 10))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(12, 4))
        y = rng.integers(0, 7, 12)
        params = {"weight": rng.normal(size=(4, 7)), "bias": rng.normal(size=7)}
        _, grads = cross_entropy(params, x, y)
        h = 1e-5
        worst = 0.0
        for name in ("weight", "bias"):
            it = np.nditer(params[name], flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                plus = {k: v.copy() for k, v in params.items()}
                minus = {k: v.copy() for k, v in params.items()}
                plus[name][idx] += h
                minus[name][idx] -= h
                num = (softmax_cross_entropy(plus["weight"], plus["bias"], x, y)
                       - softmax_cross_entropy(minus["weight"], minus["bias"], x, y)) / (2 * h)
                ana = grads[name][idx]
                worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-8))
        assert worst <= 1e-4

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            train_baseline(np.array([[np.nan, 1.0]]), [Emotion.HAPPY], epochs=1)

    def test_deterministic_with_seed(self):
        x, y = separable_toy()
        a = train_baseline(x, y, epochs=50, seed=3)
        b = train_baseline(x, y, epochs=50, seed=3)
        assert a.weight.tobytes() == b.weight.tobytes()

    def test_class_weights_change_loss(self):
        x, y = separable_toy()
        plain = train_baseline(x, y, epochs=1).losses[0]
        weighted = train_baseline(x, y, epochs=1, class_weights={"Happy": 2.0, "Sad": 1.0}).losses[0]
        assert weighted == pytest.approx(plain * 1.5)

    def test_schedule_slows_training(self):
        x, y = separable_toy()
        flat = train_baseline(x, y, epochs=100).losses[-1]
        decayed = train_baseline(x, y, epochs=100, schedule={"kind": "exponential", "k": 0.1}).losses[-1]
        assert decayed > flat

    def test_classifier_roundtrip(self, tmp_path):
        x, y = separable_toy()
        clf = fit_baseline(x, y, epochs=200, feature_names=["a", "b"])
        clf.save(tmp_path / "b.json")
        back = BaselineClassifier.load(tmp_path / "b.json")
        assert np.array_equal(back.predict_proba(x), clf.predict_proba(x))
        assert np.all(np.argmax(back.predict_proba(x), axis=1) == [int(e) for e in y])
