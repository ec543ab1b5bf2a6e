"""
Experiment configuration

One JSON document overrides any subset of the defaults below. Every section
maps onto a dataclass and unknown keys are rejected, ex:

```json
{
    "grid": {"lhs_points": 16},
    "regimes": {"trace_length": 300},
    "train": {"epochs": 20},
    "seeds": {"trace": 7}
}
```
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union, get_args, get_origin, get_type_hints

from cyclenet.core.drive.simulate import GRID_PARAMETERS, EngineConfig, GridPoint, LoadMap
from cyclenet.core.drive.trace import TraceConfig
from cyclenet.core.drive.vehicle import VehicleConfig
from cyclenet.core.emissions.zeldovich import ZeldovichRates
from cyclenet.core.engine.types import CombustionSpec, CycleSettings, EngineGeometry, WorkingFluid
from cyclenet.core.errors import ConfigError
from cyclenet.core.utils import config_hash, derive_seed

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = {
    "spark_deg": (-35.0, -30.0, -25.0, -20.0, -15.0),
    "rpm_scale": (0.9, 0.95, 1.0, 1.05, 1.1),
    "ambient_temp": (270.0, 280.0, 290.0, 300.0, 310.0),
    "humidity": (0.005, 0.0075, 0.01, 0.0125, 0.015),
    "egr_fraction": (0.0, 0.05, 0.1, 0.15, 0.2),
    "compression_ratio": (9.0, 9.5, 10.0, 10.5, 11.0),
}


@dataclass(frozen=True)
class GridConfig:
    """Campaign grid and training design

    Attributes:
        levels:             Level values of each varied parameter.
        lhs_points:         Training cycles drawn by Latin hypercube.
        full_grid_traces:   Traces crossed with the full grid by `generate --full-grid`.
        full_grid_length:   Trace length of the full-grid campaign.
    """

    levels: Dict[str, Tuple[float, ...]] = field(default_factory=lambda: dict(DEFAULT_LEVELS))
    lhs_points: int = 64
    full_grid_traces: int = 1
    full_grid_length: int = 150

    def __post_init__(self) -> None:
        unknown = set(self.levels) - set(GRID_PARAMETERS)
        if unknown:
            raise ValueError(f"unknown grid parameters {sorted(unknown)}")
        if any(len(v) == 0 for v in self.levels.values()):
            raise ValueError("every grid parameter needs at least one level")
        if self.lhs_points < 1 or self.full_grid_traces < 1 or self.full_grid_length < 1:
            raise ValueError("lhs_points, full_grid_traces and full_grid_length must be >= 1")

    def ordered_levels(self) -> Tuple[Tuple[float, ...], ...]:
        """Levels in GRID_PARAMETERS order, defaults for missing parameters"""
        default = GridPoint()
        return tuple(tuple(self.levels.get(n, (getattr(default, n),))) for n in GRID_PARAMETERS)


@dataclass(frozen=True)
class RegimeConfig:
    """How generated cycles are split into training and test regimes

    Attributes:
        train_traces:   Traces 0 .. train_traces - 1 feed the training regime,
                        the others are held out for 'test-1b'.
        test_cycles:    Cycles in each test regime.
        adapt_cycles:   Extra 'test-2' cycles reserved for transfer training.
        fuel_scale:     Fuel flow multiplier of the out-of-envelope regime.
        rpm_multiplier: Engine speed multiplier of the out-of-envelope regime.
        trace_length:   Truncate traces for quick runs, None keeps them whole.
    """

    train_traces: int = 12
    test_cycles: int = 4
    adapt_cycles: int = 1
    fuel_scale: float = 1.2
    rpm_multiplier: float = 0.83
    trace_length: Optional[int] = None

    def __post_init__(self) -> None:
        if self.train_traces < 1 or self.test_cycles < 1 or self.adapt_cycles < 0:
            raise ValueError("train_traces and test_cycles must be >= 1, adapt_cycles >= 0")
        if self.fuel_scale <= 0.0 or self.rpm_multiplier <= 0.0:
            raise ValueError("fuel_scale and rpm_multiplier must be positive")
        if self.trace_length is not None and self.trace_length < 1:
            raise ValueError("trace_length must be >= 1")


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 1.0e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1.0e-8
    layer_sizes: Tuple[int, ...] = (10, 16, 16, 16, 16, 16, 16, 5)
    transfer_epochs: int = 50
    transfer_frozen: Tuple[int, ...] = (0, 1, 2)
    sizes: Tuple[int, ...] = (1500, 3000, 6000, 12000, 24000, 48000, 96000)


@dataclass(frozen=True)
class BaselineSection:
    ridge_alpha: float = 1.0
    knn_k: int = 5
    tree_max_depth: Optional[int] = None
    tree_min_leaf: int = 1


@dataclass(frozen=True)
class SeedSection:
    trace: int = 1
    lhs: int = 2
    selection: int = 3
    init: int = 4
    shuffle: int = 5

    @classmethod
    def derived(cls, base: int) -> "SeedSection":
        """Independent seeds for every stage from one base seed"""
        return cls(**{f.name: derive_seed(base, f.name) for f in fields(cls)})


@dataclass(frozen=True)
class ExperimentConfig:
    engine: EngineGeometry = field(default_factory=EngineGeometry)
    fluid: WorkingFluid = field(default_factory=WorkingFluid)
    combustion: CombustionSpec = field(default_factory=CombustionSpec)
    cycle: CycleSettings = field(default_factory=CycleSettings)
    rates: ZeldovichRates = field(default_factory=ZeldovichRates)
    load_map: LoadMap = field(default_factory=LoadMap)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    regimes: RegimeConfig = field(default_factory=RegimeConfig)
    train: TrainSection = field(default_factory=TrainSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)
    seeds: SeedSection = field(default_factory=SeedSection)
    output_dir: str = "runs/default"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.regimes.train_traces >= self.trace.n_traces:
            raise ValueError("regimes.train_traces must leave at least one held-out trace")

    def engine_config(self) -> EngineConfig:
        return EngineConfig(self.engine, self.combustion, self.cycle, self.rates, self.load_map)

    def to_document(self) -> Dict[str, Any]:
        return asdict(self)

    def hash(self) -> str:
        return config_hash(self.to_document())

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        workers: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Apply command line overrides, `seed` re-derives every seed"""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seeds"] = SeedSection.derived(seed)
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        if workers is not None:
            changes["workers"] = workers
        try:
            return replace(self, **changes)
        except ValueError as e:
            raise ConfigError(str(e))


# Loading ---------------------------------------------------------------------
def _convert(tp: Any, value: Any, where: str) -> Any:
    origin = get_origin(tp)

    if is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return _build(tp, value, where)

    if origin is Union:
        args = [a for a in get_args(tp) if a is not type(None)]
        if value is None and len(args) < len(get_args(tp)):
            return None
        return _convert(args[0], value, where)

    if origin in (tuple, Tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        args = get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{where}[{i}]") for i, v in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{where}: expected {len(args)} entries")
        return tuple(_convert(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(args, value)))

    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        _, value_type = get_args(tp)
        return {str(k): _convert(value_type, v, f"{where}.{k}") for k, v in value.items()}

    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{where}: expected an integer")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def _build(cls: type, doc: Dict[str, Any], where: str = "") -> Any:
    hints = get_type_hints(cls)
    names = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"unknown key '{where + '.' if where else ''}{unknown[0]}'")

    kwargs = {}
    defaults = cls()
    for name, value in doc.items():
        key = f"{where}.{name}" if where else name
        current = getattr(defaults, name)
        if is_dataclass(current) and isinstance(value, dict):
            kwargs[name] = _build(type(current), value, key)
        else:
            kwargs[name] = _convert(hints[name], value, key)
    try:
        return replace(defaults, **kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where or 'config'}: {e}")


def config_from_document(doc: Dict[str, Any]) -> ExperimentConfig:
    """
    Raises:
        ConfigError: Unknown key, wrong type or invalid value.
    """
    if not isinstance(doc, dict):
        raise ConfigError("the configuration must be a JSON object")
    return _build(ExperimentConfig, doc)


def load_config(path: Optional[Path] = None) -> ExperimentConfig:
    """Defaults overridden by an optional JSON file

    Raises:
        ConfigError:    The document is not valid JSON or does not validate.
        OSError:        The file cannot be read.
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    with path.open() as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e.msg} (line {e.lineno}, column {e.colno})")
    config = config_from_document(doc)
    logger.debug("configuration %s loaded from %s", config.hash()[:12], path)
    return config
