import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import scipy.stats

from cyclenet.core.dataset import Dataset
from cyclenet.core.errors import ZeroObserved, ZeroVariance
from cyclenet.core.regressor.interface import IRegressor

logger = logging.getLogger(__name__)

METRICS = ("pearson_r", "mape")


def pearson_r(observed: np.ndarray, predicted: np.ndarray) -> float:
    """Sample product-moment correlation

    Raises:
        ZeroVariance: One of the vectors is constant.
    """
    observed = np.asarray(observed, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if observed.size != predicted.size or observed.size < 2:
        raise ValueError("need two vectors of equal length >= 2")
    if np.ptp(observed) == 0.0 or np.ptp(predicted) == 0.0:
        raise ZeroVariance("correlation of a constant vector is undefined")
    r = scipy.stats.pearsonr(observed, predicted)[0]
    return float(np.clip(r, -1.0, 1.0))


def mape(observed: np.ndarray, predicted: np.ndarray) -> float:
    """Mean absolute percentage error, in percent

    Raises:
        ZeroObserved: An observed value is zero.
    """
    observed = np.asarray(observed, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if observed.size != predicted.size or observed.size == 0:
        raise ValueError("need two non-empty vectors of equal length")
    zeros = np.nonzero(observed == 0.0)[0]
    if zeros.size:
        raise ZeroObserved(int(zeros[0]))
    return float(np.mean(100.0 * np.abs(observed - predicted) / np.abs(observed)))


@dataclass
class MetricReport:
    """Accuracy of one model on one regime

    Attributes:
        model:              Model name, ex: 'dnn'.
        regime:             Data the model was evaluated on, ex: 'test-1a'.
        pearson_r:          Correlation per output.
        mape:               Mean absolute percentage error per output (%).
        excluded:           Rows left out of the MAPE per output (zero observed).
        train_seconds:      Fitting time, 0 when unknown.
        inference_seconds:  Time to predict all rows.
        points:             Rows evaluated.
    """

    model: str
    regime: str = ""
    pearson_r: Dict[str, float] = field(default_factory=dict)
    mape: Dict[str, float] = field(default_factory=dict)
    excluded: Dict[str, int] = field(default_factory=dict)
    train_seconds: float = 0.0
    inference_seconds: float = 0.0
    points: int = 0

    @property
    def outputs(self):
        return tuple(self.mape)

    @property
    def seconds_per_point(self) -> float:
        return self.inference_seconds / self.points if self.points else 0.0

    def value(self, output: str, metric: str) -> float:
        return getattr(self, metric)[output]

    def to_document(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "regime": self.regime,
            "pearson_r": dict(self.pearson_r),
            "mape": dict(self.mape),
            "excluded": dict(self.excluded),
            "train_seconds": self.train_seconds,
            "inference_seconds": self.inference_seconds,
            "points": self.points,
        }

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "MetricReport":
        return cls(
            model=doc["model"],
            regime=doc.get("regime", ""),
            pearson_r={k: float(v) for k, v in doc["pearson_r"].items()},
            mape={k: float(v) for k, v in doc["mape"].items()},
            excluded={k: int(v) for k, v in doc.get("excluded", {}).items()},
            train_seconds=float(doc.get("train_seconds", 0.0)),
            inference_seconds=float(doc.get("inference_seconds", 0.0)),
            points=int(doc.get("points", 0)),
        )


def evaluate_model(
    model: IRegressor,
    data: Dataset,
    name: Optional[str] = None,
    regime: str = "",
    train_seconds: float = 0.0,
) -> MetricReport:
    """Per-output accuracy on the original scale

    Rows with a zero observation are left out of that output's MAPE and
    counted in `excluded`. The correlation uses every row and is NaN when the
    observed or predicted column is constant.

    Args:
        model:          Fitted regressor carrying its scalers.
        data:           Unscaled rows.
        name:           Report name, defaults to the model kind.
        regime:         Regime label stored in the report.
        train_seconds:  Fitting time to store in the report.
    """
    start = time.perf_counter()
    predicted = model.predict(data.inputs)
    inference_seconds = time.perf_counter() - start

    report = MetricReport(
        model=name or model.kind,
        regime=regime,
        train_seconds=train_seconds,
        inference_seconds=inference_seconds,
        points=len(data),
    )
    for j, output in enumerate(data.output_names):
        obs, pred = data.outputs[:, j], predicted[:, j]
        try:
            report.pearson_r[output] = pearson_r(obs, pred)
        except ZeroVariance:
            logger.warning(
                "%s on %s: constant %s, correlation recorded as NaN", report.model, regime or "data", output
            )
            report.pearson_r[output] = float("nan")

        nonzero = obs != 0.0
        report.excluded[output] = int((~nonzero).sum())
        if report.excluded[output]:
            logger.warning(
                "%s on %s: %d rows with zero observed %s left out of the MAPE",
                report.model,
                regime or "data",
                report.excluded[output],
                output,
            )
        report.mape[output] = mape(obs[nonzero], pred[nonzero]) if nonzero.any() else 0.0
    return report
