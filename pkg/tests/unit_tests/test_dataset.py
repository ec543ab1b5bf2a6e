import tempfile
import unittest
from pathlib import Path

import numpy as np

from cyclenet.core.dataset import (
    ALL_COLUMNS,
    INPUT_COLUMNS,
    OUTPUT_COLUMNS,
    ColumnScaler,
    Dataset,
    ScalerParams,
    fit_scalers,
    inverse_transform,
    read_csv,
    transform,
    write_csv,
)
from cyclenet.core.errors import ConstantColumn, ParseError, SchemaMismatch


def random_dataset(n: int = 40, seed: int = 0, cases: int = 4) -> Dataset:
    rng = np.random.default_rng(seed)
    case_id = np.repeat(np.arange(cases), n // cases)
    return Dataset(
        rng.uniform(1.0, 5.0, (n, len(INPUT_COLUMNS))),
        rng.uniform(-2.0, 9.0, (n, len(OUTPUT_COLUMNS))),
        case_id,
        np.array([f"trace-{c:02d}" for c in case_id], dtype=object),
        np.tile(np.arange(n // cases), cases),
    )


class TestDataset(unittest.TestCase):
    def test_immutable(self):
        data = random_dataset()
        with self.assertRaises(ValueError):
            data.inputs[0, 0] = 1.0

    def test_rejects_non_finite(self):
        inputs = np.ones((2, len(INPUT_COLUMNS)))
        inputs[1, 3] = np.nan
        with self.assertRaises(ValueError):
            Dataset(inputs, np.ones((2, len(OUTPUT_COLUMNS))))

    def test_select_cases(self):
        data = random_dataset()
        subset = data.select_cases([3, 1])
        self.assertEqual(subset.case_ids(), [1, 3])
        self.assertEqual(len(subset), 20)

    def test_concat(self):
        data = random_dataset()
        joined = Dataset.concat([data.select_cases([0]), data.select_cases([1, 2, 3])])
        np.testing.assert_array_equal(joined.inputs, data.inputs)
        with self.assertRaises(ValueError):
            Dataset.concat([])


class TestScaler(unittest.TestCase):
    def test_round_trip(self):
        data = random_dataset()
        params = fit_scalers(data)
        scaled = transform(data, params)
        np.testing.assert_allclose(scaled.inputs.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.inputs.std(axis=0), 1.0, rtol=1e-12)
        back = inverse_transform(scaled, params)
        np.testing.assert_allclose(back.inputs, data.inputs, rtol=1e-10)
        np.testing.assert_allclose(back.outputs, data.outputs, rtol=1e-10, atol=1e-12)

    def test_document(self):
        params = fit_scalers(random_dataset())
        loaded = ScalerParams.from_document(params.to_document())
        self.assertEqual(loaded.fitted_on, 40)
        np.testing.assert_array_equal(loaded.inputs.std, params.inputs.std)

    def test_constant_column(self):
        matrix = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        with self.assertRaises(ConstantColumn) as ctx:
            ColumnScaler.fit(matrix, ("a", "b"))
        self.assertEqual(ctx.exception.name, "b")

    def test_unclamped_outside_range(self):
        scaler = ColumnScaler.fit(np.array([[0.0], [1.0]]), ("a",))
        self.assertGreater(float(scaler.transform(np.array([[2.0]]))[0, 0]), float(scaler.transform(np.array([[1.0]]))[0, 0]))

    def test_schema_mismatch(self):
        data = random_dataset()
        params = fit_scalers(data)
        other = Dataset(data.inputs[:, :3], data.outputs, input_names=("a", "b", "c"))
        with self.assertRaises(SchemaMismatch):
            transform(other, params)


class TestCsv(unittest.TestCase):
    def test_write_read_exact(self):
        data = random_dataset()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rows.csv"
            write_csv(data, path)
            loaded = read_csv(path)
        np.testing.assert_array_equal(loaded.inputs, data.inputs)
        np.testing.assert_array_equal(loaded.outputs, data.outputs)
        np.testing.assert_array_equal(loaded.case_id, data.case_id)
        self.assertEqual(list(loaded.trace_id), list(data.trace_id))

    def test_missing_column(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rows.csv"
            path.write_text(",".join(c for c in ALL_COLUMNS if c != "torque") + "\n")
            with self.assertRaises(SchemaMismatch) as ctx:
                read_csv(path)
        self.assertEqual(ctx.exception.column, "torque")

    def test_bad_value_location(self):
        data = random_dataset(n=4, cases=1)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rows.csv"
            write_csv(data, path)
            lines = path.read_text().splitlines()
            cells = lines[2].split(",")
            cells[5] = "abc"
            lines[2] = ",".join(cells)
            path.write_text("\n".join(lines) + "\n")
            with self.assertRaises(ParseError) as ctx:
                read_csv(path)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (3, 6))

    def test_empty_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "rows.csv"
            path.write_text("")
            with self.assertRaises(ParseError):
                read_csv(path)


if __name__ == "__main__":
    unittest.main()
