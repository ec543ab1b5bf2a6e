"""
End-to-end experiments

Every command reads and writes plain files under the configured output
directory, so any stage can be rerun on its own:

    traces/<trace_id>.csv           drive traces
    regimes/design.csv              Latin hypercube design of the training cycles
    regimes/<regime>.csv            train, test-1a, test-1b, test-2 rows
    campaign.csv                    full factorial campaign (generate --full-grid)
    models/<method>.json            fitted models
    reports/<method>.<regime>.metrics.json
    reports/<name>.csv, .svg        report tables and plots
    logs/cyclenet.log
    manifest.json
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cyclenet.core.campaign import CampaignSpec, CaseSpec, run_campaign
from cyclenet.core.config import ExperimentConfig
from cyclenet.core.dataset import Dataset, ScalerParams, fit_scalers, read_csv, transform
from cyclenet.core.drive.simulate import GRID_PARAMETERS, GridPoint
from cyclenet.core.drive.trace import DriveCycleTrace, generate_traces, write_trace
from cyclenet.core.errors import UsageError
from cyclenet.core.evaluation import (
    MetricReport,
    emit_report,
    evaluate_model,
    merge_reports,
    write_metrics_json,
)
from cyclenet.core.regressor import IRegressor, load_model_with_meta, save_model
from cyclenet.core.regressor.plugins.baselines import fit_knn, fit_linear, fit_ridge, fit_tree
from cyclenet.core.regressor.plugins.mlp import (
    FreezeMask,
    MlpModel,
    MlpSpec,
    TrainConfig,
    init_model,
    train,
    transfer_train,
)
from cyclenet.core.sampling import Dimension, factorial_values, latin_hypercube

logger = logging.getLogger(__name__)

METHODS = ("dnn", "lm", "rg", "knn", "dt")
BASELINE_METHODS = METHODS[1:]
REGIMES = ("train", "test-1a", "test-1b", "test-2")


# Paths -----------------------------------------------------------------------
def regime_path(config: ExperimentConfig, regime: str) -> Path:
    return Path(config.output_dir) / "regimes" / f"{regime}.csv"


def model_path(config: ExperimentConfig, method: str) -> Path:
    return Path(config.output_dir) / "models" / f"{method}.json"


def reports_dir(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / "reports"


def update_manifest(config: ExperimentConfig, section: str, entry: Dict[str, Any]) -> None:
    """Merge one command's entry into the output directory manifest"""
    path = Path(config.output_dir) / "manifest.json"
    manifest: Dict[str, Any] = {}
    if path.is_file():
        with path.open() as f:
            manifest = json.load(f)
    manifest["config_hash"] = config.hash()
    manifest["seeds"] = config.to_document()["seeds"]
    manifest[section] = entry
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


# Generate --------------------------------------------------------------------
def build_traces(config: ExperimentConfig) -> List[DriveCycleTrace]:
    traces = generate_traces(config.seeds.trace, config.trace)
    length = config.regimes.trace_length
    if length is not None:
        traces = [t.truncated(length) for t in traces]
    return traces


def _bounds(config: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    levels = config.grid.ordered_levels()
    return np.array([min(lv) for lv in levels]), np.array([max(lv) for lv in levels])


def regime_cases(config: ExperimentConfig, traces: Sequence[DriveCycleTrace]) -> Dict[str, List[CaseSpec]]:
    """Cases of the four regimes, case ids unique across regimes

    'train' snaps a Latin hypercube to the grid levels and cycles through the
    training traces. 'test-1a' draws uniform in-envelope points driven on one
    shared training trace, 'test-1b' drives them on held-out traces. 'test-2'
    starts with the adaptation cycles, then mirrors 'test-1a' with scaled fuel
    flow and engine speed.
    """
    reg = config.regimes
    levels = config.grid.ordered_levels()
    held_out = traces[reg.train_traces :]

    design = latin_hypercube(config.grid.lhs_points, len(GRID_PARAMETERS), config.seeds.lhs)
    train_points = [GridPoint(*map(float, row)) for row in factorial_values(design, levels)]

    rng = np.random.Generator(np.random.PCG64(config.seeds.selection))
    lower, upper = _bounds(config)

    def _random_points(n: int) -> List[GridPoint]:
        return [GridPoint(*map(float, lower + rng.random(len(lower)) * (upper - lower))) for _ in range(n)]

    points_1a = _random_points(reg.test_cycles)
    points_1b = _random_points(reg.test_cycles)
    points_adapt = _random_points(reg.adapt_cycles)

    cases: Dict[str, List[CaseSpec]] = {name: [] for name in REGIMES}
    next_id = 0

    def _add(regime: str, trace: DriveCycleTrace, point: GridPoint, fuel_scale: float = 1.0, rpm: float = 1.0):
        nonlocal next_id
        cases[regime].append(CaseSpec(next_id, trace.id, point, fuel_scale, rpm))
        next_id += 1

    for i, point in enumerate(train_points):
        _add("train", traces[i % reg.train_traces], point)
    for point in points_1a:
        _add("test-1a", traces[0], point)
    for i, point in enumerate(points_1b):
        _add("test-1b", held_out[i % len(held_out)], point)
    for point in points_adapt + points_1a:
        _add("test-2", traces[0], point, reg.fuel_scale, reg.rpm_multiplier)
    return cases


def cmd_generate(config: ExperimentConfig, full_grid: bool = False) -> Dict[str, Any]:
    """Traces, campaigns and regime CSVs

    Args:
        config:     Experiment configuration.
        full_grid:  Run the full factorial campaign instead of the regimes.

    Returns:
        Manifest entry of the command.
    """
    out = Path(config.output_dir)
    traces = build_traces(config)
    for trace in traces:
        write_trace(trace, out / "traces" / f"{trace.id}.csv")

    engine = config.engine_config()
    entry: Dict[str, Any] = {}

    if full_grid:
        grid_traces = tuple(t.truncated(config.grid.full_grid_length) for t in traces[: config.grid.full_grid_traces])
        spec = CampaignSpec(
            traces=grid_traces,
            grid={name: tuple(lv) for name, lv in zip(GRID_PARAMETERS, config.grid.ordered_levels())},
            seed=config.seeds.trace,
            output_path=out / "campaign.csv",
            engine=engine,
            fluid=config.fluid,
            vehicle=config.vehicle,
        )
        summary = run_campaign(spec, config.workers, extra={"config_hash": config.hash()})
        entry["campaign"] = {"cases": summary.cases, "rows": summary.rows, "flagged_rows": summary.flagged_rows}
        update_manifest(config, "generate_full_grid", entry)
        return entry

    design = latin_hypercube(config.grid.lhs_points, len(GRID_PARAMETERS), config.seeds.lhs)
    design.with_mapping([Dimension(name) for name in GRID_PARAMETERS]).write_csv(out / "regimes" / "design.csv")

    for regime, cases in regime_cases(config, traces).items():
        spec = CampaignSpec(
            traces=tuple(traces),
            seed=config.seeds.trace,
            output_path=regime_path(config, regime),
            engine=engine,
            fluid=config.fluid,
            vehicle=config.vehicle,
            cases=tuple(cases),
        )
        summary = run_campaign(spec, config.workers, extra={"config_hash": config.hash(), "regime": regime})
        entry[regime] = {
            "cases": summary.cases,
            "rows": summary.rows,
            "flagged_rows": summary.flagged_rows,
            "wall_min": summary.wall_min,
            "wall_max": summary.wall_max,
            "elapsed": summary.elapsed,
        }
    update_manifest(config, "generate", entry)
    return entry


# Train -----------------------------------------------------------------------
def train_config(config: ExperimentConfig, epochs: Optional[int] = None, freeze: FreezeMask = FreezeMask()) -> TrainConfig:
    t = config.train
    return TrainConfig(
        epochs=t.epochs if epochs is None else epochs,
        batch_size=t.batch_size,
        learning_rate=t.learning_rate,
        beta1=t.beta1,
        beta2=t.beta2,
        epsilon=t.epsilon,
        shuffle_seed=config.seeds.shuffle,
        freeze=freeze,
    )


def fit_method(
    config: ExperimentConfig, method: str, data: Dataset, scalers: Optional[ScalerParams] = None
) -> Tuple[IRegressor, float, List[float]]:
    """Fit one method on unscaled rows

    Scalers are fitted on `data` unless given. A single drive cycle holds
    constant campaign parameters, so subsets of a regime pass the scalers of
    the whole regime.

    Returns:
        Model, fitting seconds and the loss history (empty for baselines).

    Raises:
        UsageError: Unknown method.
    """
    if method not in METHODS:
        raise UsageError(f"unknown method '{method}', expected one of {', '.join(METHODS)}")
    scalers = scalers or fit_scalers(data)
    scaled = transform(data, scalers)
    b = config.baselines

    start = time.perf_counter()
    history: List[float] = []
    if method == "dnn":
        model = init_model(MlpSpec(config.train.layer_sizes), config.seeds.init, scalers)
        model, history = train(model, scaled, train_config(config))
    elif method == "lm":
        model = fit_linear(scaled, scalers=scalers)
    elif method == "rg":
        model = fit_ridge(scaled, b.ridge_alpha, scalers=scalers)
    elif method == "knn":
        model = fit_knn(scaled, b.knn_k, scalers=scalers)
    else:
        model = fit_tree(scaled, b.tree_max_depth, b.tree_min_leaf, scalers=scalers)
    return model, time.perf_counter() - start, history


def cmd_train(config: ExperimentConfig, method: str) -> Dict[str, Any]:
    data = read_csv(regime_path(config, "train"))
    logger.info("training %s on %d rows", method, len(data))
    model, seconds, history = fit_method(config, method, data)
    meta = {"train_seconds": seconds, "loss_history": history, "rows": len(data), "config_hash": config.hash()}
    save_model(model, model_path(config, method), meta)
    update_manifest(config, f"train_{method}", {"train_seconds": seconds, "rows": len(data)})
    return meta


# Evaluate --------------------------------------------------------------------
def cmd_evaluate(config: ExperimentConfig, methods: Sequence[str], regime: str = "test-1a") -> List[MetricReport]:
    """
    Raises:
        OSError: A model file or the regime CSV is missing.
    """
    data = read_csv(regime_path(config, regime))
    reports = []
    for method in methods:
        model, meta = load_model_with_meta(model_path(config, method))
        report = evaluate_model(model, data, name=method, regime=regime, train_seconds=meta.get("train_seconds", 0.0))
        write_metrics_json(report, reports_dir(config) / f"{method}.{regime}.metrics.json")
        reports.append(report)
    emit_report(reports, reports_dir(config) / f"evaluate.{regime}.csv")
    update_manifest(config, f"evaluate_{regime}", {"models": list(methods), "rows": len(data)})
    return reports


# Size study ------------------------------------------------------------------
def cmd_size_study(config: ExperimentConfig, sizes: Optional[Sequence[int]] = None) -> List[Tuple[int, MetricReport]]:
    """Train one network per training set size, evaluate all on 'test-1a'

    Sizes are whole drive cycles: multiples of the trace length. Cycles are
    taken in case order, so a size holds the rows of its first cycles.

    Raises:
        UsageError: A size is not a whole number of cycles or exceeds the data.
    """
    sizes = list(sizes or config.train.sizes)
    data = read_csv(regime_path(config, "train"))
    test = read_csv(regime_path(config, "test-1a"))
    case_ids = data.case_ids()
    cycle = min(config.regimes.trace_length or config.trace.length, config.trace.length)

    for size in sizes:
        if size <= 0 or size % cycle:
            raise UsageError(f"size {size} is not a multiple of the {cycle}-row drive cycle")
        if size // cycle > len(case_ids):
            raise UsageError(f"size {size} needs {size // cycle} cycles, only {len(case_ids)} generated")

    scalers = fit_scalers(data)
    results = []
    for size in sizes:
        subset = data.select_cases(case_ids[: size // cycle])
        model, seconds, _ = fit_method(config, "dnn", subset, scalers)
        report = evaluate_model(model, test, name=f"dnn-{size}", regime="test-1a", train_seconds=seconds)
        write_metrics_json(report, reports_dir(config) / "size-study" / f"dnn-{size}.test-1a.metrics.json")
        results.append((size, report))

    emit_report([r for _, r in results], reports_dir(config) / "size-study.csv")
    update_manifest(config, "size_study", {"sizes": sizes, "cycle_rows": cycle})
    return results


# Transfer --------------------------------------------------------------------
def cmd_transfer(config: ExperimentConfig, epochs: Optional[int] = None) -> Dict[str, MetricReport]:
    """Transfer training of the network against retraining of the baselines

    The first `adapt_cycles` cases of 'test-2' are the adaptation rows. Every
    report is computed on the remaining 'test-2' rows.

    Raises:
        OSError:        The trained network is missing.
        FreezeError:    A frozen layer moved.
    """
    model, _ = load_model_with_meta(model_path(config, "dnn"))
    if not isinstance(model, MlpModel):
        raise UsageError("models/dnn.json does not hold a network")

    test2 = read_csv(regime_path(config, "test-2"))
    case_ids = test2.case_ids()
    n_adapt = config.regimes.adapt_cycles
    if n_adapt < 1 or n_adapt >= len(case_ids):
        raise UsageError("transfer needs at least one adaptation cycle and one test cycle in 'test-2'")
    adapt = test2.select_cases(case_ids[:n_adapt])
    held = test2.select_cases(case_ids[n_adapt:])

    reports = {"dnn-before": evaluate_model(model, held, name="dnn-before", regime="test-2")}

    freeze = FreezeMask.hidden(*config.train.transfer_frozen)
    t_epochs = config.train.transfer_epochs if epochs is None else epochs
    start = time.perf_counter()
    adapted, history = transfer_train(
        model, transform(adapt, model.scalers), train_config(config, t_epochs), freeze=freeze
    )
    seconds = time.perf_counter() - start
    save_model(adapted, model_path(config, "dnn-transfer"), {"train_seconds": seconds, "loss_history": history})
    reports["dnn-transfer"] = evaluate_model(adapted, held, name="dnn-transfer", regime="test-2", train_seconds=seconds)

    train_data = read_csv(regime_path(config, "train"))
    retrain = Dataset.concat([train_data, adapt])
    for method in BASELINE_METHODS:
        fitted, fit_seconds, _ = fit_method(config, method, retrain)
        name = f"{method}-retrain"
        reports[name] = evaluate_model(fitted, held, name=name, regime="test-2", train_seconds=fit_seconds)

    for name, report in reports.items():
        write_metrics_json(report, reports_dir(config) / "transfer" / f"{name}.test-2.metrics.json")
    emit_report(list(reports.values()), reports_dir(config) / "transfer.csv")
    update_manifest(
        config,
        "transfer",
        {"adapt_rows": len(adapt), "test_rows": len(held), "frozen": list(freeze.frozen), "epochs": t_epochs},
    )
    return reports


# Report ----------------------------------------------------------------------
def cmd_report(config: ExperimentConfig) -> List[MetricReport]:
    """Merge every metric document of the output directory into one report"""
    reports = merge_reports(reports_dir(config))
    if not reports:
        raise UsageError(f"no metric documents under {reports_dir(config)}")
    emit_report(reports, reports_dir(config) / "summary.csv")
    return reports
