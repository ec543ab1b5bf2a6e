import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from cyclenet.core.dataset import INPUT_COLUMNS, OUTPUT_COLUMNS, Dataset, fit_scalers
from cyclenet.core.errors import FreezeError, NonFiniteLoss, ParseError, VersionMismatch
from cyclenet.core.regressor import load_model, load_model_with_meta, save_model
from cyclenet.core.regressor.plugins.mlp import (
    TRANSFER_MASK,
    FreezeMask,
    MlpSpec,
    TrainConfig,
    forward,
    frozen_layers_equal,
    gradients,
    init_model,
    train,
    transfer_train,
)
from cyclenet.core.regressor.plugins.mlp.core import mse

SMALL = MlpSpec((3, 6, 5, 2))


def small_data(n: int = 64, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (n, 3))
    y = np.column_stack([x @ [0.5, -1.0, 0.3] + 0.2, x @ [-0.4, 0.2, 0.8]])
    return x, y


def small_dataset(n: int = 64, seed: int = 0) -> Dataset:
    x, y = small_data(n, seed)
    return Dataset(x, y, input_names=("a", "b", "c"), output_names=("u", "v"))


def engine_dataset(n: int = 40, seed: int = 1) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(rng.uniform(0.0, 3.0, (n, len(INPUT_COLUMNS))), rng.uniform(1.0, 2.0, (n, len(OUTPUT_COLUMNS))))


GRADIENT_SHAPES = ((3, 6, 5, 2), (4, 5, 3), (2, 4, 4, 4, 1), (3, 8, 2))


def numeric_gradients(model, x, y, h=1e-6):
    out = []
    for w, b in model.layers:
        pair = []
        for param in (w, b):
            numeric = np.zeros_like(param)
            for idx in np.ndindex(param.shape):
                saved = param[idx]
                param[idx] = saved + h
                up = mse(forward(model, x), y)
                param[idx] = saved - h
                down = mse(forward(model, x), y)
                param[idx] = saved
                numeric[idx] = (up - down) / (2.0 * h)
            pair.append(numeric)
        out.append(pair)
    return out


class TestGradients(unittest.TestCase):
    def test_matches_finite_differences(self):
        for case in range(100):
            rng = np.random.default_rng(case)
            spec = MlpSpec(GRADIENT_SHAPES[case % len(GRADIENT_SHAPES)])
            model = init_model(spec, seed=case)
            for w, b in model.layers:
                b += rng.normal(scale=0.1, size=b.shape)
            x = rng.normal(size=(10, spec.layer_sizes[0]))
            y = rng.normal(size=(10, spec.layer_sizes[-1]))
            frozen = [i for i in range(spec.n_layers) if rng.random() < 0.3][: spec.n_layers - 1]
            mask = FreezeMask.hidden(*frozen)

            _, grads = gradients(model, x, y, mask)
            numeric = numeric_gradients(model, x, y)
            for i in range(spec.n_layers):
                for j in (0, 1):
                    if i in frozen:
                        self.assertFalse(np.any(grads[i][j]), (case, i))
                    else:
                        np.testing.assert_allclose(
                            grads[i][j], numeric[i][j], rtol=1e-4, atol=1e-8, err_msg=f"case {case} layer {i}"
                        )

    def test_frozen_layers_have_zero_gradient(self):
        model = init_model(SMALL, seed=4)
        x, y = small_data(16)
        _, grads = gradients(model, x, y, FreezeMask.hidden(0, 1))
        for i in (0, 1):
            self.assertFalse(np.any(grads[i][0]) or np.any(grads[i][1]))
        self.assertTrue(np.any(grads[2][0]))

    def test_loss_value(self):
        model = init_model(SMALL, seed=4)
        x, y = small_data(16)
        loss, _ = gradients(model, x, y)
        self.assertAlmostEqual(loss, float(np.mean((forward(model, x) - y) ** 2)), places=14)


class TestInit(unittest.TestCase):
    def test_he_variance(self):
        model = init_model(MlpSpec((400, 400, 2)), seed=0)
        w, b = model.layers[0]
        self.assertAlmostEqual(float(w.var()) / (2.0 / 400), 1.0, delta=0.05)
        self.assertFalse(np.any(b))

    def test_seeded(self):
        a, b = init_model(SMALL, seed=1), init_model(SMALL, seed=1)
        for (wa, _), (wb, _) in zip(a.layers, b.layers):
            np.testing.assert_array_equal(wa, wb)

    def test_default_shape(self):
        model = init_model()
        self.assertEqual(model.spec.layer_sizes, (10, 16, 16, 16, 16, 16, 16, 5))
        self.assertEqual(forward(model, np.zeros((3, 10))).shape, (3, 5))

    def test_invalid_spec(self):
        with self.assertRaises(ValueError):
            MlpSpec((3,))
        with self.assertRaises(ValueError):
            MlpSpec((3, 4, 2), hidden_activation="tanh")


class TestTraining(unittest.TestCase):
    def test_zero_epochs_leaves_model_unchanged(self):
        model = init_model(SMALL, seed=2)
        trained, history = train(model, small_dataset(), TrainConfig(epochs=0))
        self.assertEqual(history, [])
        for (w0, b0), (w1, b1) in zip(model.layers, trained.layers):
            np.testing.assert_array_equal(w0, w1)
            np.testing.assert_array_equal(b0, b1)

    def test_input_model_not_modified(self):
        model = init_model(SMALL, seed=2)
        before = model.copy()
        train(model, small_dataset(), TrainConfig(epochs=3))
        self.assertTrue(frozen_layers_equal(before, model, FreezeMask.hidden(0, 1, 2)))

    def test_fits_linear_map(self):
        model = init_model(MlpSpec((3, 16, 16, 2)), seed=3)
        config = TrainConfig(epochs=200, batch_size=16, learning_rate=1e-2, shuffle_seed=1)
        trained, history = train(model, small_dataset(256), config)
        self.assertEqual(len(history), 200)
        self.assertLess(history[-1], 0.05 * history[0])
        x, y = small_data(128, seed=9)
        self.assertLess(mse(forward(trained, x), y), 1e-2)

    def test_deterministic(self):
        config = TrainConfig(epochs=5, shuffle_seed=7)
        a, ha = train(init_model(SMALL, seed=2), small_dataset(), config)
        b, hb = train(init_model(SMALL, seed=2), small_dataset(), config)
        self.assertEqual(ha, hb)
        np.testing.assert_array_equal(forward(a, np.eye(3)), forward(b, np.eye(3)))

    def test_frozen_layers_bit_identical(self):
        model = init_model(SMALL, seed=2)
        mask = FreezeMask.hidden(0)
        trained, _ = train(model, small_dataset(), TrainConfig(epochs=5, freeze=mask))
        self.assertTrue(frozen_layers_equal(model, trained, mask))
        self.assertFalse(np.array_equal(model.layers[2][0], trained.layers[2][0]))

    def test_everything_frozen(self):
        with self.assertRaises(FreezeError):
            train(init_model(SMALL), small_dataset(), TrainConfig(epochs=1, freeze=FreezeMask.hidden(0, 1, 2)))
        with self.assertRaises(FreezeError):
            train(init_model(SMALL), small_dataset(), TrainConfig(epochs=1, freeze=FreezeMask.hidden(5)))

    def test_divergence(self):
        config = TrainConfig(epochs=3, learning_rate=1e200)
        with np.errstate(all="ignore"):
            with self.assertRaises(NonFiniteLoss):
                train(init_model(SMALL, seed=2), small_dataset(), config)

    def test_transfer_keeps_input_side(self):
        model = init_model(seed=5)
        data = engine_dataset()
        trained, history = transfer_train(model, data, TrainConfig(epochs=3))
        self.assertEqual(len(history), 3)
        self.assertTrue(frozen_layers_equal(model, trained, TRANSFER_MASK))
        last = model.spec.n_layers - 1
        self.assertFalse(np.array_equal(model.layers[last][0], trained.layers[last][0]))


class TestModelFile(unittest.TestCase):
    def test_save_load_predicts_identically(self):
        data = engine_dataset()
        model = init_model(seed=6, scalers=fit_scalers(data))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "dnn.json"
            save_model(model, path, meta={"train_seconds": 1.5})
            loaded, meta = load_model_with_meta(path)
        self.assertEqual(meta, {"train_seconds": 1.5})
        np.testing.assert_array_equal(loaded.predict(data.inputs), model.predict(data.inputs))

    def test_needs_scalers(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ValueError):
                save_model(init_model(), Path(tmp) / "dnn.json")

    def test_bad_files(self):
        data = engine_dataset()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "dnn.json"
            path.write_text("{not json")
            with self.assertRaises(ParseError):
                load_model(path)

            save_model(init_model(scalers=fit_scalers(data)), path)
            doc = json.loads(path.read_text())
            doc["version"] = 2
            path.write_text(json.dumps(doc))
            with self.assertRaises(VersionMismatch):
                load_model(path)

            doc["version"] = 1
            del doc["layers"]
            path.write_text(json.dumps(doc))
            with self.assertRaises(ParseError):
                load_model(path)

            path.write_text(json.dumps({"format": "other"}))
            with self.assertRaises(ParseError):
                load_model(path)


if __name__ == "__main__":
    unittest.main()
