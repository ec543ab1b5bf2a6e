"""
Desk-scale closed-loop run, checked against the accuracy targets

    python tests/acceptance/closed_loop.py --out runs/acceptance --workers 8

Takes about half an hour on an 8-core desktop. Every stage writes into the
output directory, so a failed check can be inspected with `cyclenet report`.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Dict, List

import numpy as np

from cyclenet import experiments
from cyclenet.core.config import load_config
from cyclenet.core.dataset import OUTPUT_COLUMNS
from cyclenet.core.engine.cycle import simulate_engine_cycle
from cyclenet.core.engine.types import OperatingPoint
from cyclenet.core.evaluation import MetricReport
from cyclenet.core.regressor import load_model
from cyclenet.core.regressor.plugins.mlp import forward
from cyclenet.core.utils import create_logger, format_table

MAPE_LIMIT = {"exhaust_temp": 5.0, "exhaust_pressure": 5.0, "no_ppm": 5.0, "co_ppm": 15.0, "torque": 5.0}
MIN_R = 0.97
SIZES = (3000, 12000, 48000, 96000)


def check(results: List, name: str, ok: bool, detail: str = "") -> None:
    results.append([name, "ok" if ok else "FAILED", detail])


def accurate(report: MetricReport) -> bool:
    return all(report.pearson_r[o] >= MIN_R and report.mape[o] <= MAPE_LIMIT[o] for o in OUTPUT_COLUMNS)


def per_config_seconds(fn, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", type=Path)
    parser.add_argument("--out", type=Path, default=Path("runs/acceptance"))
    parser.add_argument("--workers", type=int, default=8)
    args = parser.parse_args()

    config = load_config(args.config).with_overrides(output_dir=args.out, workers=args.workers)
    create_logger(Path(config.output_dir) / "logs" / "acceptance.log")
    results: List = []

    experiments.cmd_generate(config)
    for method in experiments.METHODS:
        experiments.cmd_train(config, method)
    in_env: Dict[str, Dict[str, MetricReport]] = {}
    for regime in ("test-1a", "test-1b"):
        in_env[regime] = {r.model: r for r in experiments.cmd_evaluate(config, experiments.METHODS, regime)}

    # Closed-loop accuracy
    for regime, reports in in_env.items():
        dnn = reports["dnn"]
        check(results, f"accuracy {regime}", accurate(dnn), f"max MAPE {max(dnn.mape.values()):.3g}%")

    dnn = in_env["test-1a"]["dnn"]
    check(results, "CO hardest", max(dnn.mape, key=dnn.mape.get) == "co_ppm")

    wins = {
        m: sum(dnn.mape[o] <= in_env["test-1a"][m].mape[o] for o in OUTPUT_COLUMNS)
        for m in experiments.BASELINE_METHODS
    }
    check(results, "beats baselines", all(w >= 3 for w in wins.values()), str(wins))

    # Training size
    sized = dict(experiments.cmd_size_study(config, SIZES))
    small, large = sized[SIZES[0]], sized[SIZES[-1]]
    check(
        results,
        "size trend",
        all(large.mape[o] < small.mape[o] for o in OUTPUT_COLUMNS) and accurate(large),
    )

    # Transfer, frozen layers are checked inside transfer_train
    transfer = experiments.cmd_transfer(config)
    before, after = transfer["dnn-before"], transfer["dnn-transfer"]
    worse = sum(before.mape[o] > dnn.mape[o] for o in OUTPUT_COLUMNS)
    better = sum(after.mape[o] * 2.0 <= before.mape[o] for o in OUTPUT_COLUMNS)
    check(results, "shift hurts", worse >= 4, f"{worse} / 5 outputs")
    check(results, "transfer recovers", better >= 4, f"{better} / 5 outputs")

    # Inference speed
    model = load_model(experiments.model_path(config, "dnn"))
    x = np.zeros((1, model.spec.layer_sizes[0]))
    net = per_config_seconds(lambda: forward(model, x), 10000)
    op = OperatingPoint(2000.0, 1.0e-4, 15.0, 1.0e5, 1.5e-3)
    sim = per_config_seconds(
        lambda: simulate_engine_cycle(config.engine, config.fluid, config.combustion, op, settings=config.cycle), 5
    )
    check(results, "forward time", net <= 100e-6, f"{net * 1e6:.1f} us")
    check(results, "speed-up", sim / net >= 100.0, f"{sim / net:.0f}x")

    print(format_table(["check", "result", "detail"], results, width=24))
    return 0 if all(r[1] == "ok" for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
