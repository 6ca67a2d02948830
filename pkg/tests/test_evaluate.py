import numpy as np
import pytest
from helpers import fd_grad, random_dae, rel_err

from scheda import (
    LinearClassifier,
    Rng,
    concat,
    error_rate,
    extract,
    finetune,
    init_composite,
    init_params,
    select_classifier,
    select_model,
    train_logreg,
)
from scheda.datasets import split, synthetic_dataset
from scheda.errors import ShapeError
from scheda.evaluate import finetune_grad, logreg_objective, predict


class TestExtract:
    def test_width_matches_hidden(self):
        p = init_params(9, 5, Rng(0))
        assert extract(p, np.random.rand(7, 9)).shape == (7, 5)

    def test_composite_width_sums(self):
        comp = init_composite(9, [4, 6], [0.1, 0.5], Rng(0))
        assert extract(comp, np.random.rand(7, 9)).shape == (7, 10)

    def test_zero_params_constant_features(self):
        p = init_params(4, 3, Rng(0))
        p.weights[:] = 0.0
        assert np.all(extract(p, np.random.rand(5, 4)) == 0.5)

    def test_extraction_deterministic(self):
        p = init_params(6, 4, Rng(1))
        x = np.random.rand(8, 6)
        assert np.array_equal(extract(p, x), extract(p, x))

    def test_width_mismatch(self):
        p = init_params(6, 4, Rng(1))
        with pytest.raises(ShapeError):
            extract(p, np.random.rand(8, 5))


class TestConcat:
    def test_paper_scale_width(self):
        out = concat(np.zeros((3, 2000)), np.zeros((3, 2000)))
        assert out.shape == (3, 4000)

    def test_empty_is_neutral(self):
        r = np.random.rand(4, 6)
        assert np.array_equal(concat(r, np.empty((4, 0))), r)

    def test_left_block_preserved(self):
        r1, r2 = np.random.rand(5, 3), np.random.rand(5, 4)
        out = concat(r1, r2)
        assert np.array_equal(out[:, :3], r1)
        assert np.array_equal(out[:, 3:], r2)

    def test_row_mismatch(self):
        with pytest.raises(ShapeError, match="row counts"):
            concat(np.zeros((3, 2)), np.zeros((4, 2)))


def separable_2d(n=40):
    rng = Rng(5)
    offsets = rng.uniform(-0.2, 0.2, 2 * n).reshape(n, 2)
    labels = np.arange(n) % 2
    centers = np.where(labels[:, None] == 0, -0.6, 0.6)
    return np.clip(centers + offsets, -1, 1) * 0.5 + 0.5, labels.astype(np.int64)


def perceptron_certifies_separable(x, labels, max_epochs=1000):
    # independent separability oracle
    w = np.zeros(x.shape[1] + 1)
    aug = np.hstack([x, np.ones((x.shape[0], 1))])
    signs = np.where(labels == 1, 1.0, -1.0)
    for _ in range(max_epochs):
        mistakes = 0
        for i in range(x.shape[0]):
            if signs[i] * (aug[i] @ w) <= 0:
                w += signs[i] * aug[i]
                mistakes += 1
        if mistakes == 0:
            return True
    return False


class TestLogreg:
    def test_huge_regularization_gives_majority_class(self):
        x = np.random.rand(10, 3)
        labels = np.array([0] * 7 + [1] * 3)
        clf = train_logreg(x, labels, reg=1e6)
        assert np.abs(clf.weights).max() < 1e-4
        assert np.all(predict(clf, x) == 0)
        assert error_rate(clf, x, labels) == pytest.approx(0.3)

    def test_separable_data_fit_exactly(self):
        x, labels = separable_2d()
        assert perceptron_certifies_separable(x, labels)
        clf = train_logreg(x, labels, reg=1e-6)
        assert error_rate(clf, x, labels) == 0.0

    def test_objective_no_worse_than_zero(self):
        rng = Rng(8)
        x = rng.uniform(n=60).reshape(20, 3)
        labels = (rng.raw(20) % 3).astype(np.int64)
        if np.unique(labels).size < 2:
            labels[0] = (labels[0] + 1) % 3
        clf = train_logreg(x, labels, reg=0.1)
        at_zero = logreg_objective(np.zeros_like(clf.weights), np.zeros_like(clf.bias), x, labels, 0.1)
        at_fit = logreg_objective(clf.weights, clf.bias, x, labels, 0.1)
        assert at_fit <= at_zero

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="single class"):
            train_logreg(np.random.rand(5, 2), np.zeros(5, dtype=np.int64), reg=0.1)

    def test_nonpositive_reg_rejected(self):
        x, labels = separable_2d()
        with pytest.raises(ValueError):
            train_logreg(x, labels, reg=0.0)

    def test_convexity_midpoint(self):
        rng = Rng(9)
        x = rng.uniform(n=80).reshape(20, 4)
        labels = (rng.raw(20) % 3).astype(np.int64)
        for trial in range(10):
            w1 = rng.uniform(-2, 2, 12).reshape(3, 4)
            w2 = rng.uniform(-2, 2, 12).reshape(3, 4)
            b1 = rng.uniform(-1, 1, 3)
            b2 = rng.uniform(-1, 1, 3)
            mid = logreg_objective((w1 + w2) / 2, (b1 + b2) / 2, x, labels, 0.05)
            ends = 0.5 * (
                logreg_objective(w1, b1, x, labels, 0.05)
                + logreg_objective(w2, b2, x, labels, 0.05)
            )
            assert mid <= ends + 1e-9


class TestErrorRate:
    def test_perfect_predictions(self):
        clf = LinearClassifier(np.eye(3), np.zeros(3), 1.0)
        x = np.eye(3)
        assert error_rate(clf, x, np.array([0, 1, 2])) == 0.0

    def test_all_wrong(self):
        clf = LinearClassifier(np.eye(2), np.zeros(2), 1.0)
        x = np.eye(2)
        assert error_rate(clf, x, np.array([1, 0])) == 1.0

    def test_hand_case_quarter(self):
        clf = LinearClassifier(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2), 1.0)
        x = np.array([[1, 0], [1, 0], [0, 1], [0.6, 0.4]])
        labels = np.array([0, 0, 1, 1])  # last one misclassified
        assert error_rate(clf, x, labels) == 0.25

    def test_matches_independent_accuracy(self):
        rng = Rng(10)
        clf = LinearClassifier(rng.uniform(-1, 1, 8).reshape(2, 4), rng.uniform(-1, 1, 2), 1.0)
        x = rng.uniform(n=40).reshape(10, 4)
        labels = (rng.raw(10) % 2).astype(np.int64)
        preds = np.argmax(x @ clf.weights.T + clf.bias, axis=1)
        accuracy = float(np.mean(preds == labels))
        err = error_rate(clf, x, labels)
        assert 0.0 <= err <= 1.0
        assert err == pytest.approx(1.0 - accuracy)

    def test_argmax_tie_goes_to_lowest_class(self):
        clf = LinearClassifier(np.zeros((3, 2)), np.zeros(3), 1.0)
        preds = predict(clf, np.random.rand(5, 2))
        assert np.all(preds == 0)


class TestSelectModel:
    def test_singleton(self):
        assert select_model([("only", 0.4)]) == "only"

    def test_strict_argmin(self):
        cands = [("a", 0.5), ("b", 0.2), ("c", 0.3)]
        assert select_model(cands) == "b"

    def test_tie_goes_to_earlier(self):
        cands = [("a", 0.5), ("b", 0.2), ("c", 0.2)]
        assert select_model(cands) == "b"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_model([])


class TestPipeline:
    def test_concat_extract_feeds_logreg(self):
        ds = synthetic_dataset(60, 10, 3, seed=3)
        a = init_params(10, 4, Rng(1))
        b = init_params(10, 6, Rng(2))
        features = concat(extract(a, ds.features), extract(b, ds.features))
        clf = train_logreg(features, ds.labels, reg=0.01)
        assert 0.0 <= error_rate(clf, features, ds.labels) <= 1.0

    def test_select_classifier_prefers_validation(self):
        ds = split(synthetic_dataset(120, 10, 3, seed=4), 80, 40, seed=9)
        p = init_params(10, 6, Rng(3))
        features = extract(p, ds.features)
        clf, reg, err = select_classifier(
            features, ds.labels, ds.train_idx, ds.valid_idx, reg_grid=(1e-4, 1e-2, 1.0)
        )
        assert reg in (1e-4, 1e-2, 1.0)
        assert err == error_rate(clf, features[ds.valid_idx], ds.labels[ds.valid_idx])


def labeled_toy(n=150, dim=12, classes=3, seed=6):
    return split(synthetic_dataset(n, dim, classes, seed=seed), int(n * 0.6), int(n * 0.4), seed=seed)


class TestFinetune:
    def test_zero_epochs_keeps_initialization(self):
        ds = labeled_toy()
        p = init_params(ds.dim, 5, Rng(7))
        result = finetune(p, ds, learning_rate=0.1, epochs=0)
        assert np.array_equal(result.net.hidden_w, p.weights)
        assert np.array_equal(result.net.hidden_b, p.enc_bias)
        assert np.all(result.net.out_w == 0.0)
        assert result.train_loss.shape == (0,)

    def test_zero_learning_rate_freezes_everything(self):
        ds = labeled_toy()
        p = init_params(ds.dim, 5, Rng(7))
        result = finetune(p, ds, learning_rate=0.0, epochs=3)
        assert np.array_equal(result.net.hidden_w, p.weights)
        assert np.all(result.net.out_w == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = Rng(11)
        p = random_dae(rng, 6, 4)
        from scheda.evaluate import FinetuneNet

        net = FinetuneNet(
            p.weights.copy(),
            p.enc_bias.copy(),
            rng.uniform(-0.5, 0.5, 12).reshape(3, 4),
            rng.uniform(-0.5, 0.5, 3),
        )
        x = rng.uniform(n=30).reshape(5, 6)
        labels = (rng.raw(5) % 3).astype(np.int64)
        _, grads = finetune_grad(net, x, labels)

        def loss():
            return finetune_grad(net, x, labels)[0]

        for analytic, array in [
            (grads.hidden_w, net.hidden_w),
            (grads.hidden_b, net.hidden_b),
            (grads.out_w, net.out_w),
            (grads.out_b, net.out_b),
        ]:
            assert rel_err(analytic, fd_grad(loss, array)) < 1e-6

    def test_valid_trace_recorded_each_epoch(self):
        ds = labeled_toy()
        p = init_params(ds.dim, 5, Rng(7))
        result = finetune(p, ds, learning_rate=0.2, epochs=6)
        assert result.valid_error.shape == (6,)
        assert result.best_epoch <= 6

    def test_frozen_hidden_matches_logreg(self):
        # with the encoder frozen, fine-tuning is softmax regression on
        # extracted features; validation errors agree to 0.5%
        ds = labeled_toy(n=200, seed=8)
        p = init_params(ds.dim, 6, Rng(9))
        features = extract(p, ds.features)
        clf = train_logreg(features[ds.train_idx], ds.labels[ds.train_idx], reg=1e-6)
        frozen_err = error_rate(clf, features[ds.valid_idx], ds.labels[ds.valid_idx])
        result = finetune(p, ds, learning_rate=0.5, epochs=300, freeze_hidden=True)
        assert abs(min(result.valid_error.min(), 1.0) - frozen_err) <= 0.005
