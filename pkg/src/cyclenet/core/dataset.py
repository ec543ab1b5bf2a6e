"""
Tabular regression data: ten engine inputs, five engine outputs

CSV layout, one row per simulated second:

    case_id,trace_id,t,<10 input columns>,<5 output columns>

Floats are written with `repr`, so writing then reading returns the exact
same matrices.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from cyclenet.core.errors import ConstantColumn, ParseError, SchemaMismatch

logger = logging.getLogger(__name__)

INPUT_COLUMNS = (
    "ambient_temp",
    "humidity",
    "valve_timing",
    "compression_ratio",
    "spark_timing",
    "gear_ratio",
    "fuel_rate",
    "afr",
    "inlet_pressure",
    "intake_air_mass",
)
OUTPUT_COLUMNS = ("exhaust_temp", "exhaust_pressure", "no_ppm", "co_ppm", "torque")
META_COLUMNS = ("case_id", "trace_id", "t")
ALL_COLUMNS = META_COLUMNS + INPUT_COLUMNS + OUTPUT_COLUMNS


@dataclass(frozen=True)
class Dataset:
    """Immutable row-aligned inputs, outputs and per-row metadata

    Attributes:
        inputs:     (n, 10) matrix.
        outputs:    (n, 5) matrix.
        case_id:    Campaign case of each row.
        trace_id:   Drive trace of each row.
        t:          Second within the trace.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    case_id: np.ndarray = field(default=None)
    trace_id: np.ndarray = field(default=None)
    t: np.ndarray = field(default=None)
    input_names: Tuple[str, ...] = INPUT_COLUMNS
    output_names: Tuple[str, ...] = OUTPUT_COLUMNS

    def __post_init__(self) -> None:
        inputs = np.atleast_2d(np.array(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.array(self.outputs, dtype=float))
        n = inputs.shape[0]
        if outputs.shape[0] != n:
            raise ValueError(f"{n} input rows but {outputs.shape[0]} output rows")
        if inputs.shape[1] != len(self.input_names) or outputs.shape[1] != len(self.output_names):
            raise ValueError("matrix widths do not match the column names")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(outputs))):
            raise ValueError("dataset holds NaN or Inf")

        case_id = np.zeros(n, dtype=int) if self.case_id is None else np.array(self.case_id, dtype=int)
        trace_id = (
            np.full(n, "", dtype=object) if self.trace_id is None else np.array(self.trace_id, dtype=object)
        )
        t = np.arange(n, dtype=int) if self.t is None else np.array(self.t, dtype=int)
        if not case_id.shape == trace_id.shape == t.shape == (n,):
            raise ValueError("metadata columns must have one entry per row")

        for name, value in (
            ("inputs", inputs),
            ("outputs", outputs),
            ("case_id", case_id),
            ("trace_id", trace_id),
            ("t", t),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    def case_ids(self) -> List[int]:
        """Distinct case ids in order of first appearance"""
        _, first = np.unique(self.case_id, return_index=True)
        return [int(self.case_id[i]) for i in sorted(first)]

    def take(self, rows) -> "Dataset":
        return Dataset(
            self.inputs[rows],
            self.outputs[rows],
            self.case_id[rows],
            self.trace_id[rows],
            self.t[rows],
            self.input_names,
            self.output_names,
        )

    def select_cases(self, case_ids: Iterable[int]) -> "Dataset":
        """Rows of the given cases, in the dataset's own row order"""
        return self.take(np.isin(self.case_id, list(case_ids)))

    def with_matrices(self, inputs: np.ndarray, outputs: np.ndarray) -> "Dataset":
        return Dataset(
            inputs, outputs, self.case_id, self.trace_id, self.t, self.input_names, self.output_names
        )

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise ValueError("nothing to concatenate")
        names = {(p.input_names, p.output_names) for p in parts}
        if len(names) != 1:
            raise SchemaMismatch("*", "datasets have different columns")
        return Dataset(
            np.concatenate([p.inputs for p in parts]),
            np.concatenate([p.outputs for p in parts]),
            np.concatenate([p.case_id for p in parts]),
            np.concatenate([p.trace_id for p in parts]),
            np.concatenate([p.t for p in parts]),
            parts[0].input_names,
            parts[0].output_names,
        )


# Scalers ---------------------------------------------------------------------
@dataclass(frozen=True)
class ColumnScaler:
    """Min-max scaling to [0, 1] followed by standardisation

    The standardisation stage is fitted on the min-max scaled columns.
    No clamping: values outside the fitted range map outside [0, 1].
    """

    names: Tuple[str, ...]
    data_min: np.ndarray
    data_max: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray, names: Sequence[str]) -> "ColumnScaler":
        """
        Raises:
            ConstantColumn: A column has no spread.
        """
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] < 2:
            raise ValueError("need at least two rows to fit a scaler")
        data_min = matrix.min(axis=0)
        data_max = matrix.max(axis=0)
        for i, name in enumerate(names):
            if data_max[i] == data_min[i]:
                raise ConstantColumn(name)
        unit = (matrix - data_min) / (data_max - data_min)
        mean = unit.mean(axis=0)
        std = unit.std(axis=0)
        for i, name in enumerate(names):
            if not std[i] > 0.0:
                raise ConstantColumn(name)
        return cls(tuple(names), data_min, data_max, mean, std)

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        unit = (np.asarray(matrix, dtype=float) - self.data_min) / (self.data_max - self.data_min)
        return (unit - self.mean) / self.std

    def inverse_transform(self, matrix: np.ndarray) -> np.ndarray:
        unit = np.asarray(matrix, dtype=float) * self.std + self.mean
        return unit * (self.data_max - self.data_min) + self.data_min

    def to_document(self) -> Dict:
        return {
            "names": list(self.names),
            "min": self.data_min.tolist(),
            "max": self.data_max.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_document(cls, doc: Dict) -> "ColumnScaler":
        def _arr(key: str) -> np.ndarray:
            return np.array([float(v) for v in doc[key]])

        return cls(tuple(doc["names"]), _arr("min"), _arr("max"), _arr("mean"), _arr("std"))


@dataclass(frozen=True)
class ScalerParams:
    inputs: ColumnScaler
    outputs: ColumnScaler
    fitted_on: int

    def to_document(self) -> Dict:
        return {
            "inputs": self.inputs.to_document(),
            "outputs": self.outputs.to_document(),
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_document(cls, doc: Dict) -> "ScalerParams":
        return cls(
            ColumnScaler.from_document(doc["inputs"]),
            ColumnScaler.from_document(doc["outputs"]),
            int(doc["fitted_on"]),
        )


def fit_scalers(data: Dataset) -> ScalerParams:
    """Fit input and output scalers on training data only

    Raises:
        ConstantColumn: Named column has no spread.
    """
    return ScalerParams(
        inputs=ColumnScaler.fit(data.inputs, data.input_names),
        outputs=ColumnScaler.fit(data.outputs, data.output_names),
        fitted_on=len(data),
    )


def _check_names(data: Dataset, params: ScalerParams) -> None:
    for expected, found in ((params.inputs.names, data.input_names), (params.outputs.names, data.output_names)):
        if tuple(expected) != tuple(found):
            missing = [n for n in expected if n not in found] or list(found)
            raise SchemaMismatch(missing[0], "columns differ from the fitted scaler")


def transform(data: Dataset, params: ScalerParams) -> Dataset:
    _check_names(data, params)
    return data.with_matrices(params.inputs.transform(data.inputs), params.outputs.transform(data.outputs))


def inverse_transform(data: Dataset, params: ScalerParams) -> Dataset:
    _check_names(data, params)
    return data.with_matrices(
        params.inputs.inverse_transform(data.inputs), params.outputs.inverse_transform(data.outputs)
    )


# CSV -------------------------------------------------------------------------
def read_table(path: Path, required: Sequence[str]) -> Tuple[List[str], List[List[str]]]:
    """Header-checked CSV reader

    Args:
        path:       CSV file.
        required:   Columns that must be present in the header.

    Returns:
        Header and raw rows, every row as long as the header.

    Raises:
        ParseError:     Empty file or ragged row.
        SchemaMismatch: A required column is missing.
    """
    path = Path(path)
    with path.open(newline="") as f:
        rows = list(csv.reader(f))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError(f"empty file {path}", line=1)
    header = rows[0]
    for name in required:
        if name not in header:
            raise SchemaMismatch(name)
    body = []
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=i + 2)
        body.append(row)
    return header, body


def read_csv(path: Path) -> Dataset:
    """Read a dataset written by `write_csv` or by a campaign

    Raises:
        ParseError:     Empty file or a value that does not parse.
        SchemaMismatch: A required column is missing.
    """
    header, body = read_table(path, ALL_COLUMNS)
    index = {name: header.index(name) for name in ALL_COLUMNS}

    n = len(body)
    inputs = np.empty((n, len(INPUT_COLUMNS)))
    outputs = np.empty((n, len(OUTPUT_COLUMNS)))
    case_id = np.empty(n, dtype=int)
    trace_id = np.empty(n, dtype=object)
    t = np.empty(n, dtype=int)

    for i, row in enumerate(body):
        line = i + 2
        try:
            for j, name in enumerate(INPUT_COLUMNS):
                inputs[i, j] = float(row[index[name]])
            for j, name in enumerate(OUTPUT_COLUMNS):
                outputs[i, j] = float(row[index[name]])
            case_id[i] = int(row[index["case_id"]])
            t[i] = int(row[index["t"]])
        except ValueError:
            bad = _first_bad_column(row, header)
            raise ParseError(f"cannot parse value in {path}", line=line, column=bad)
        trace_id[i] = row[index["trace_id"]]

    try:
        return Dataset(inputs, outputs, case_id, trace_id, t)
    except ValueError as e:
        raise ParseError(f"{path}: {e}")


def _first_bad_column(row: List[str], header: List[str]) -> Optional[int]:
    for j, name in enumerate(header):
        if name == "trace_id":
            continue
        try:
            float(row[j])
        except ValueError:
            return j + 1
    return None


def dataset_rows(data: Dataset) -> Iterable[List[str]]:
    for i in range(len(data)):
        row = [str(int(data.case_id[i])), str(data.trace_id[i]), str(int(data.t[i]))]
        row.extend(repr(float(v)) for v in data.inputs[i])
        row.extend(repr(float(v)) for v in data.outputs[i])
        yield row


def write_csv(data: Dataset, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ALL_COLUMNS)
        writer.writerows(dataset_rows(data))
