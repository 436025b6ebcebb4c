import numpy as np
import pytest

from dire import (DimensionError, ParameterError, Rng, SoftLabels,
                  TeacherModel, evaluate_student, extract_features,
                  extract_features_vjp, finite_diff_grad, gen_mixture,
                  model_accuracy, relabel, rng_normal, softmax, squeeze_train,
                  teacher_logits)


class TestGenMixture:
    def test_deterministic(self):
        a_train, a_test = gen_mixture(4, 6, 20, 0.2, seed=5)
        b_train, b_test = gen_mixture(4, 6, 20, 0.2, seed=5)
        assert np.array_equal(a_train.points, b_train.points)
        assert np.array_equal(a_test.labels, b_test.labels)

    def test_zero_spread_collapses_to_means(self):
        train, _ = gen_mixture(3, 4, 10, 0.0, seed=1)
        for c in range(3):
            pts = train.points[train.labels == c]
            assert np.all(pts == pts[0])
            assert np.linalg.norm(pts[0]) == pytest.approx(1.0, abs=1e-12)

    def test_two_class_frame_distance(self):
        train, _ = gen_mixture(2, 2, 50, 0.0, seed=3)
        m0 = train.points[train.labels == 0][0]
        m1 = train.points[train.labels == 1][0]
        assert np.linalg.norm(m0 - m1) >= np.sqrt(2) - 1e-9

    def test_split_sizes(self):
        train, test = gen_mixture(3, 5, 50, 0.1, seed=0)
        assert len(train) == 3 * 40 and len(test) == 3 * 10
        assert sorted(np.unique(train.labels)) == [0, 1, 2]

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            gen_mixture(1, 4, 20, 0.1, 0)
        with pytest.raises(ParameterError):
            gen_mixture(3, 1, 20, 0.1, 0)
        with pytest.raises(ParameterError):
            gen_mixture(3, 4, 5, 0.1, 0)
        with pytest.raises(ParameterError):
            gen_mixture(3, 4, 20, -0.1, 0)
        with pytest.raises(ParameterError):
            gen_mixture(9, 4, 20, 0.1, 0)  # frame supports 2*dim classes


class TestSqueezeTrain:
    def test_separable_two_class(self):
        train, test = gen_mixture(2, 8, 100, 0.05, seed=7)
        model = squeeze_train(train, (16,), epochs=20, lr=0.2, seed=7)
        assert model.meta["train_accuracy"] > 0.99
        assert model_accuracy(model, test) > 0.99

    def test_zero_lr_keeps_seeded_init(self):
        train, _ = gen_mixture(2, 4, 20, 0.1, seed=1)
        from dire.teacher import init_mlp
        w0, b0 = init_mlp(4, (8,), 2, seed=9)
        model = squeeze_train(train, (8,), epochs=3, lr=0.0, seed=9)
        for got, want in zip(model.weights, w0):
            assert np.array_equal(got, want)

    def test_feature_stats_match_recomputation(self):
        train, _ = gen_mixture(3, 6, 30, 0.2, seed=2)
        model = squeeze_train(train, (12,), epochs=5, lr=0.1, seed=2)
        feats = extract_features(model, train.points)
        np.testing.assert_allclose(model.feature_mean, feats.mean(axis=0), atol=1e-9)
        np.testing.assert_allclose(model.feature_var, feats.var(axis=0), atol=1e-9)
        assert np.all(model.feature_var >= 0)

    def test_determinism(self):
        train, _ = gen_mixture(3, 6, 30, 0.2, seed=4)
        m1 = squeeze_train(train, (12,), epochs=5, lr=0.1, seed=4)
        m2 = squeeze_train(train, (12,), epochs=5, lr=0.1, seed=4)
        for a, b in zip(m1.weights, m2.weights):
            assert np.array_equal(a, b)

    def test_divergence_names_epoch(self):
        from dire import LabeledDataset, TrainingError
        train, _ = gen_mixture(2, 4, 20, 0.1, seed=6)
        poisoned = train.points.copy()
        poisoned[0, 0] = np.nan
        bad = LabeledDataset(poisoned, train.labels, train.n_classes, "train")
        with pytest.raises(TrainingError, match="epoch"):
            squeeze_train(bad, (6,), epochs=2, lr=0.1, seed=6)


class TestFeatureExtraction:
    def _model(self, seed=0, hidden=(10,), dim=5, classes=3):
        train, _ = gen_mixture(classes, dim, 30, 0.2, seed=seed)
        return squeeze_train(train, hidden, epochs=5, lr=0.1, seed=seed)

    def test_zero_weight_teacher_broadcasts_bias(self):
        weights = [np.zeros((4, 6)), np.zeros((6, 2))]
        biases = [np.full(6, 0.3), np.zeros(2)]
        model = TeacherModel(weights, biases, feature_layer=1)
        feats = extract_features(model, rng_normal(Rng(1), 5, 4))
        np.testing.assert_allclose(feats, np.tanh(0.3), atol=1e-15)

    def test_duplicate_rows_identical_features(self):
        model = self._model()
        x = rng_normal(Rng(2), 1, 5)
        feats = extract_features(model, np.vstack([x, x]))
        assert np.array_equal(feats[0], feats[1])

    def test_vjp_matches_finite_differences(self):
        for seed in range(10):
            model = self._model(seed=seed)
            x = rng_normal(Rng(100 + seed), 3, 5)
            upstream = rng_normal(Rng(200 + seed), 3, 10)
            analytic = extract_features_vjp(model, x, upstream)

            def val(m):
                return float(np.sum(upstream * extract_features(model, m)))

            numeric = finite_diff_grad(val, x, h=1e-5)
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
            assert np.max(np.abs(analytic - numeric) / denom) < 1e-5

    def test_dimension_checks(self):
        model = self._model()
        with pytest.raises(DimensionError):
            extract_features(model, np.ones((2, 9)))
        with pytest.raises(DimensionError):
            extract_features_vjp(model, np.ones((2, 5)), np.ones((2, 3)))

    def test_feature_layer_must_be_hidden(self):
        with pytest.raises(ParameterError):
            TeacherModel([np.zeros((4, 6)), np.zeros((6, 2))],
                         [np.zeros(6), np.zeros(2)], feature_layer=2)


class TestRelabel:
    def _model(self):
        train, _ = gen_mixture(4, 6, 40, 0.1, seed=3)
        return squeeze_train(train, (12,), epochs=15, lr=0.2, seed=3), train

    def test_rows_sum_to_one(self):
        model, train = self._model()
        soft = relabel(model, train.points, temperature=2.0)
        np.testing.assert_allclose(soft.probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(soft.probs >= 0)

    def test_high_temperature_limit(self):
        model, train = self._model()
        soft = relabel(model, train.points[:10], temperature=1e9)
        assert np.abs(soft.probs - 0.25).max() < 1e-6

    def test_unit_temperature_argmax_is_hard_prediction(self):
        model, train = self._model()
        soft = relabel(model, train.points, temperature=1.0)
        hard = teacher_logits(model, train.points).argmax(axis=1)
        assert np.array_equal(soft.probs.argmax(axis=1), hard)

    def test_temperature_validated(self):
        model, train = self._model()
        with pytest.raises(ParameterError):
            relabel(model, train.points, temperature=0.0)

    def test_softmax_overflow_safe(self):
        z = np.array([[1000.0, 0.0], [-1000.0, 0.0]])
        p = softmax(z)
        assert np.all(np.isfinite(p))
        np.testing.assert_allclose(p.sum(axis=1), 1.0)


class TestEvaluateStudent:
    def test_untrained_student_near_chance(self):
        train, test = gen_mixture(10, 8, 30, 0.2, seed=11)
        acc = evaluate_student(train.points, train.labels, test, (16,),
                               epochs=0, lr=0.1, seed=11)
        assert abs(acc - 0.1) <= 0.15

    def test_real_copy_matches_teacher_ballpark(self):
        train, test = gen_mixture(4, 8, 100, 0.15, seed=13)
        teacher = squeeze_train(train, (16,), epochs=30, lr=0.2, seed=13)
        teacher_acc = model_accuracy(teacher, test)
        student_acc = evaluate_student(train.points, train.labels, test, (16,),
                                       epochs=30, lr=0.2, seed=14)
        assert student_acc >= teacher_acc - 0.02

    def test_deterministic(self):
        train, test = gen_mixture(3, 6, 40, 0.2, seed=17)
        args = (train.points, train.labels, test, (8,))
        a = evaluate_student(*args, epochs=10, lr=0.1, seed=5)
        b = evaluate_student(*args, epochs=10, lr=0.1, seed=5)
        assert a == b

    def test_soft_labels_accepted(self):
        train, test = gen_mixture(3, 6, 40, 0.2, seed=19)
        teacher = squeeze_train(train, (8,), epochs=10, lr=0.2, seed=19)
        soft = relabel(teacher, train.points, temperature=1.0)
        acc = evaluate_student(train.points, soft, test, (8,),
                               epochs=10, lr=0.1, seed=19)
        assert acc > 0.5

    def test_soft_label_invariants_enforced(self):
        bad = np.array([[0.5, 0.4]])
        with pytest.raises(ParameterError):
            SoftLabels(bad, temperature=1.0)
