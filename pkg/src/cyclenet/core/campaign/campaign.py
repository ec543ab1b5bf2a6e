"""
Campaign driver

Cases are evaluated by an `ICaseRunner` in any order and written by a single
writer in case order, so the output files do not depend on the worker count.

Files written next to `spec.output_path` (ex: 'campaign.csv'):

    campaign.csv                valid rows, dataset schema
    campaign.flagged.csv        non-physical rows, same schema
    campaign.walltime.csv       case_id,seconds
    campaign.aggregates.csv     case_id,trace_id,output,peak,average,cumulative
    campaign.manifest.json      counts, seeds and timing summary
"""

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from cyclenet.core.dataset import ALL_COLUMNS, Dataset, dataset_rows

from .base import CampaignSpec, CaseResult, ICaseRunner
from .pool import PoolRunner
from .serial import SerialRunner

logger = logging.getLogger(__name__)


def sidecar_path(output_path: Path, kind: str) -> Path:
    """ex: ('out/campaign.csv', 'walltime') -> 'out/campaign.walltime.csv'"""
    output_path = Path(output_path)
    suffix = ".json" if kind == "manifest" else ".csv"
    return output_path.with_name(f"{output_path.stem}.{kind}{suffix}")


@dataclass
class CampaignSummary:
    output_path: str
    cases: int
    completed: int = 0
    rows: int = 0
    flagged_rows: int = 0
    wall_min: float = 0.0
    wall_max: float = 0.0
    wall_mean: float = 0.0
    elapsed: float = 0.0
    workers: int = 1
    seed: int = 0
    complete: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)


def _case_datasets(item: CaseResult):
    result = item.result
    n = len(result)
    case_id = np.full(n, item.case.case_id, dtype=int)
    trace_id = np.full(n, result.trace_id, dtype=object)
    valid = ~result.flagged

    def _rows(mask):
        return Dataset(result.inputs[mask], result.outputs[mask], case_id[mask], trace_id[mask], result.t[mask])

    return _rows(valid), _rows(~valid)


class _OrderedWriter:
    def __init__(self, spec: CampaignSpec, case_order: List[int], summary: CampaignSummary):
        """Buffers results until every earlier case has been written"""
        self.position = {case_id: i for i, case_id in enumerate(case_order)}
        self.summary = summary
        self.next = 0
        self.buffer: Dict[int, CaseResult] = {}
        self.seconds: List[float] = []

        path = Path(spec.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._files = [
            path.open("w", newline=""),
            sidecar_path(path, "flagged").open("w", newline=""),
            sidecar_path(path, "walltime").open("w", newline=""),
            sidecar_path(path, "aggregates").open("w", newline=""),
        ]
        self.rows, self.flagged, self.walltime, self.aggregates = (
            csv.writer(f, lineterminator="\n") for f in self._files
        )
        self.rows.writerow(ALL_COLUMNS)
        self.flagged.writerow(ALL_COLUMNS)
        self.walltime.writerow(("case_id", "seconds"))
        self.aggregates.writerow(("case_id", "trace_id", "output", "peak", "average", "cumulative"))

    def close(self) -> None:
        for f in self._files:
            f.close()

    def __call__(self, item: CaseResult) -> None:
        self.buffer[self.position[item.case.case_id]] = item
        while self.next in self.buffer:
            self._write(self.buffer.pop(self.next))
            self.next += 1

    def _write(self, item: CaseResult) -> None:
        valid, flagged = _case_datasets(item)
        self.rows.writerows(dataset_rows(valid))
        self.flagged.writerows(dataset_rows(flagged))
        self.walltime.writerow((item.case.case_id, repr(item.seconds)))
        for name, agg in item.result.aggregates().items():
            self.aggregates.writerow(
                (item.case.case_id, item.result.trace_id, name)
                + tuple(repr(agg[k]) for k in ("peak", "average", "cumulative"))
            )

        self.seconds.append(item.seconds)
        self.summary.completed += 1
        self.summary.rows += len(valid)
        self.summary.flagged_rows += len(flagged)
        if self.summary.completed % 100 == 0 or self.summary.completed == self.summary.cases:
            logger.info("campaign: %d / %d cases written", self.summary.completed, self.summary.cases)


def write_manifest(summary: CampaignSummary, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(asdict(summary), f, indent=2, sort_keys=True)


def run_campaign(
    spec: CampaignSpec,
    workers: int = 1,
    runner: Optional[ICaseRunner] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> CampaignSummary:
    """Evaluate every case of a campaign and write the results in case order

    Args:
        spec:       Traces, grid and output location.
        workers:    Process count, 1 runs in-process.
        runner:     Overrides the runner picked from `workers`.
        extra:      Entries copied into the manifest, ex: the config hash.

    Returns:
        Counts and the per-case wall-time summary, also written as manifest.

    Raises:
        OSError:    Output could not be written.

    Any abort leaves a partial manifest behind with `complete` set to False.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if runner is None:
        runner = SerialRunner() if workers == 1 else PoolRunner(workers)

    jobs = spec.jobs()
    summary = CampaignSummary(
        output_path=str(spec.output_path),
        cases=len(jobs),
        workers=workers,
        seed=spec.seed,
        extra=dict(extra or {}),
    )
    manifest_path = sidecar_path(spec.output_path, "manifest")
    logger.info("campaign: %d cases on %d worker(s) -> %s", len(jobs), workers, spec.output_path)

    start = time.perf_counter()
    writer = None
    try:
        writer = _OrderedWriter(spec, [job.case.case_id for job in jobs], summary)
        runner.run(jobs, writer)
    except Exception:
        summary.elapsed = time.perf_counter() - start
        logger.error("campaign aborted after %d / %d cases", summary.completed, summary.cases)
        try:
            write_manifest(summary, manifest_path)
        except OSError:
            logger.error("could not write the partial manifest %s", manifest_path)
        raise
    finally:
        if writer is not None:
            writer.close()

    summary.elapsed = time.perf_counter() - start
    summary.complete = True
    if writer.seconds:
        seconds = np.asarray(writer.seconds)
        summary.wall_min = float(seconds.min())
        summary.wall_max = float(seconds.max())
        summary.wall_mean = float(seconds.mean())
    logger.info(
        "campaign: %d rows, %d flagged, case wall time min %.3f s max %.3f s",
        summary.rows,
        summary.flagged_rows,
        summary.wall_min,
        summary.wall_max,
    )
    write_manifest(summary, manifest_path)
    return summary
