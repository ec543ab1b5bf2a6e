import tempfile
import unittest
from pathlib import Path

import numpy as np

from cyclenet.core.dataset import INPUT_COLUMNS, OUTPUT_COLUMNS, Dataset, fit_scalers
from cyclenet.core.errors import RankDeficient
from cyclenet.core.regressor import load_model, save_model
from cyclenet.core.regressor.plugins.baselines import BaselineModel, fit_knn, fit_linear, fit_ridge, fit_tree
from cyclenet.core.regressor.plugins.baselines.knn import nearest_indices
from cyclenet.core.regressor.plugins.baselines.tree import grow_tree

N_IN, N_OUT = len(INPUT_COLUMNS), len(OUTPUT_COLUMNS)


def linear_dataset(n: int = 60, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, N_IN))
    coefficients = rng.normal(size=(N_IN + 1, N_OUT))
    y = coefficients[0] + x @ coefficients[1:]
    return Dataset(x, y), coefficients


class TestLinear(unittest.TestCase):
    def test_ols_recovers_exact_coefficients(self):
        data, coefficients = linear_dataset()
        model = fit_linear(data)
        np.testing.assert_allclose(model.coefficients, coefficients, atol=1e-10)
        np.testing.assert_allclose(model.predict_scaled(data.inputs), data.outputs, atol=1e-10)

    def test_rank_deficient(self):
        data, _ = linear_dataset()
        x = np.array(data.inputs)
        x[:, 3] = 2.0 * x[:, 1]
        with self.assertRaises(RankDeficient):
            fit_linear(Dataset(x, data.outputs))

    def test_ridge_zero_penalty_is_ols(self):
        data, _ = linear_dataset()
        np.testing.assert_allclose(fit_ridge(data, alpha=0.0).coefficients, fit_linear(data).coefficients, atol=1e-9)

    def test_ridge_shrinks(self):
        data, _ = linear_dataset()
        slopes = [np.linalg.norm(fit_ridge(data, alpha=a).coefficients[1:]) for a in (0.1, 1.0, 10.0)]
        self.assertTrue(slopes[0] >= slopes[1] >= slopes[2])
        with self.assertRaises(ValueError):
            fit_ridge(data, alpha=-1.0)

    def test_ridge_huge_penalty_keeps_only_the_mean(self):
        data, _ = linear_dataset()
        model = fit_ridge(data, alpha=1.0e9)
        self.assertLess(np.abs(model.coefficients[1:]).max(), 1e-3)
        np.testing.assert_allclose(model.coefficients[0], data.outputs.mean(axis=0), atol=1e-3)


class TestKnn(unittest.TestCase):
    def test_training_point_with_k_one(self):
        data, _ = linear_dataset()
        model = fit_knn(data, k=1)
        np.testing.assert_array_equal(model.predict_scaled(data.inputs[:5]), data.outputs[:5])

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(11)
        train_x = rng.normal(size=(300, N_IN))
        queries = rng.normal(size=(1000, N_IN))
        dist = ((queries[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=2)
        expected = np.argsort(dist, axis=1, kind="stable")[:, :5]
        np.testing.assert_array_equal(nearest_indices(train_x, queries, 5), expected)

    def test_ties_go_to_lowest_index(self):
        train_x = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [5.0, 5.0]])
        idx = nearest_indices(train_x, np.zeros((1, 2)), 2)
        np.testing.assert_array_equal(idx, [[0, 1]])

    def test_prediction_within_training_range(self):
        data, _ = linear_dataset()
        model = fit_knn(data, k=5)
        queries = np.random.default_rng(3).normal(size=(20, N_IN)) * 3.0
        prediction = model.predict_scaled(queries)
        self.assertTrue(np.all(prediction >= data.outputs.min(axis=0)))
        self.assertTrue(np.all(prediction <= data.outputs.max(axis=0)))

    def test_invalid_k(self):
        data, _ = linear_dataset(n=4)
        with self.assertRaises(ValueError):
            fit_knn(data, k=5)


class TestTree(unittest.TestCase):
    def test_unlimited_depth_fits_training_rows(self):
        data, _ = linear_dataset()
        model = fit_tree(data)
        np.testing.assert_allclose(model.predict_scaled(data.inputs), data.outputs, atol=1e-12)

    def test_depth_limit(self):
        data, _ = linear_dataset()
        stump = fit_tree(data, max_depth=0)
        np.testing.assert_allclose(
            stump.predict_scaled(data.inputs[:3]), np.tile(data.outputs.mean(axis=0), (3, 1)), atol=1e-12
        )
        model = fit_tree(data, max_depth=3, min_leaf=4)
        self.assertTrue(all(tree.depth <= 3 for tree in model.trees))

    def test_step_function(self):
        x = np.zeros((8, N_IN))
        x[:, 2] = np.arange(8.0)
        y = np.zeros((8, N_OUT))
        y[4:, 0] = 1.0
        model = fit_tree(Dataset(x, y), max_depth=1)
        tree = model.trees[0]
        self.assertEqual((int(tree.feature[0]), float(tree.threshold[0])), (2, 3.5))

    def test_split_between_adjacent_doubles(self):
        low = np.nextafter(1.0, 2.0)
        high = np.nextafter(low, 2.0)
        x = np.array([[low], [high]])
        tree = grow_tree(x, np.array([0.0, 1.0]))
        self.assertEqual(len(tree), 3)
        self.assertEqual(float(tree.threshold[0]), low)
        np.testing.assert_array_equal(tree.predict(x), [0.0, 1.0])


class TestBaselineFiles(unittest.TestCase):
    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            BaselineModel("svm")

    def test_save_load(self):
        data, _ = linear_dataset()
        scalers = fit_scalers(data)
        models = [
            fit_linear(data, scalers=scalers),
            fit_ridge(data, alpha=2.0, scalers=scalers),
            fit_knn(data, k=3, scalers=scalers),
            fit_tree(data, max_depth=4, scalers=scalers),
        ]
        with tempfile.TemporaryDirectory() as tmp:
            for model in models:
                path = Path(tmp) / f"{model.kind}.json"
                save_model(model, path)
                loaded = load_model(path)
                self.assertEqual(loaded.kind, model.kind)
                self.assertEqual(loaded.hyper, model.hyper)
                np.testing.assert_array_equal(loaded.predict(data.inputs), model.predict(data.inputs))


if __name__ == "__main__":
    unittest.main()
