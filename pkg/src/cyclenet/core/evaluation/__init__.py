from .metrics import METRICS, MetricReport, evaluate_model, mape, pearson_r
from .report import (
    emit_report,
    merge_reports,
    read_metrics_json,
    read_report_csv,
    write_metrics_json,
)

__all__ = [
    "METRICS",
    "MetricReport",
    "emit_report",
    "evaluate_model",
    "mape",
    "merge_reports",
    "pearson_r",
    "read_metrics_json",
    "read_report_csv",
    "write_metrics_json",
]
