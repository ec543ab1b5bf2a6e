"""
Report files

    <name>.csv          model,output,metric,value     one row per model, output and metric
    <name>.timing.csv   model,metric,value             train_seconds, inference_seconds, points
    <name>.svg          parallel coordinates, one axis per output, one line per model

The SVG is 800 x 420 pt. Every model is one polyline, written by matplotlib as a
single <path> element inside a group with the id 'model-<name>'. Its markers
are drawn outside that group.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from matplotlib.figure import Figure

from cyclenet.core.dataset import read_table
from cyclenet.core.errors import ParseError

from .metrics import METRICS, MetricReport

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("model", "output", "metric", "value")
TIMING_COLUMNS = ("model", "metric", "value")
TIMING_METRICS = ("train_seconds", "inference_seconds", "points")
SVG_SIZE = (800, 420)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def write_report_csv(reports: Sequence[MetricReport], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            for output in report.outputs:
                for metric in METRICS:
                    writer.writerow((report.model, output, metric, repr(report.value(output, metric))))

    with _sibling(path, ".timing.csv").open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TIMING_COLUMNS)
        for report in reports:
            for metric in TIMING_METRICS:
                writer.writerow((report.model, metric, repr(getattr(report, metric))))


def read_report_csv(path: Path) -> List[MetricReport]:
    """Reports in order of first appearance, timing read when present

    Raises:
        ParseError:     A value does not parse or a metric is unknown.
        SchemaMismatch: A report column is missing.
    """
    path = Path(path)
    header, body = read_table(path, REPORT_COLUMNS)
    col = {name: header.index(name) for name in REPORT_COLUMNS}
    reports: Dict[str, MetricReport] = {}
    for i, row in enumerate(body):
        model, output, metric = row[col["model"]], row[col["output"]], row[col["metric"]]
        if metric not in METRICS:
            raise ParseError(f"unknown metric '{metric}'", line=i + 2, column=col["metric"] + 1)
        try:
            value = float(row[col["value"]])
        except ValueError:
            raise ParseError(f"bad value in {path}", line=i + 2, column=col["value"] + 1)
        report = reports.setdefault(model, MetricReport(model))
        getattr(report, metric)[output] = value

    timing = _sibling(path, ".timing.csv")
    if timing.is_file():
        header, body = read_table(timing, TIMING_COLUMNS)
        col = {name: header.index(name) for name in TIMING_COLUMNS}
        for i, row in enumerate(body):
            report = reports.get(row[col["model"]])
            metric = row[col["metric"]]
            if report is None or metric not in TIMING_METRICS:
                continue
            try:
                value = float(row[col["value"]])
            except ValueError:
                raise ParseError(f"bad value in {timing}", line=i + 2, column=col["value"] + 1)
            setattr(report, metric, int(value) if metric == "points" else value)
    return list(reports.values())


def write_report_svg(reports: Sequence[MetricReport], path: Path, metric: str = "mape") -> None:
    """Parallel coordinates of one metric

    Each axis is scaled to the largest value of its output across models.
    """
    outputs = list(reports[0].outputs) if reports else []
    values = np.array([[r.value(o, metric) for o in outputs] for r in reports], dtype=float)
    top = np.nan_to_num(np.abs(values)).max(axis=0) if values.size else np.ones(len(outputs))
    top[top == 0.0] = 1.0

    width, height = SVG_SIZE
    fig = Figure(figsize=(width / 72.0, height / 72.0), dpi=72)
    ax = fig.add_axes((0.08, 0.14, 0.76, 0.74))
    x = np.arange(len(outputs))
    for xi in x:
        ax.axvline(xi, color="0.6", linewidth=1.0)
    for i, report in enumerate(reports):
        y = values[i] / top
        (line,) = ax.plot(x, y)
        line.set_gid(f"model-{report.model}")
        ax.plot(x, y, "o", color=line.get_color())
        if len(x):
            ax.annotate(
                report.model, (x[-1], y[-1]), xytext=(6, 0), textcoords="offset points", va="center"
            )

    ax.set_xticks(x)
    ax.set_xticklabels([f"{o}\n{t:.3g}" for o, t in zip(outputs, top)])
    ax.set_ylim(-1.05 if metric == "pearson_r" else 0.0, 1.05)
    ax.set_yticks([])
    ax.set_title(f"{metric} per output")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})


def emit_report(reports: Sequence[MetricReport], path: Path, metric: str = "mape") -> Tuple[Path, Path]:
    """Write the long-format CSV, its timing sibling and the SVG

    Args:
        reports:    One report per model, all over the same outputs.
        path:       CSV path, the SVG goes next to it.
        metric:     Metric drawn in the SVG.

    Returns:
        CSV and SVG paths.
    """
    path = Path(path)
    write_report_csv(reports, path)
    svg = path.with_suffix(".svg")
    write_report_svg(reports, svg, metric)
    logger.info("report of %d model(s) written to %s", len(reports), path)
    return path, svg


# Metric documents ------------------------------------------------------------
def write_metrics_json(report: MetricReport, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(report.to_document(), f, indent=2, sort_keys=True)


def read_metrics_json(path: Path) -> MetricReport:
    """
    Raises:
        ParseError: Not a metric document.
    """
    path = Path(path)
    try:
        with path.open() as f:
            return MetricReport.from_document(json.load(f))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", line=e.lineno, column=e.colno)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ParseError(f"{path}: not a metric document ({e})")


def merge_reports(directory: Path, pattern: str = "*.metrics.json") -> List[MetricReport]:
    """Every metric document under a directory, sorted by path"""
    return [read_metrics_json(p) for p in sorted(Path(directory).rglob(pattern))]
