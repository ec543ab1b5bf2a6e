"""
Synthetic urban drive traces

Speed profiles are chained idle, accelerate, cruise and brake segments drawn
from a seeded generator. Fuel flow follows a road-load power model on top of
a constant idle flow.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

import numpy as np

from cyclenet.core.dataset import read_table
from cyclenet.core.errors import ParseError

logger = logging.getLogger(__name__)

TRACE_LENGTH = 1500
TRACE_COLUMNS = ("t", "vehicle_speed", "fuel_flow")
GRAVITY = 9.81


@dataclass(frozen=True)
class DriveCycleTrace:
    """1 Hz trace of vehicle speed (m/s) and fuel flow (kg/s)

    Standard traces hold TRACE_LENGTH samples. Shorter ones are allowed for
    reduced campaigns.
    """

    id: str
    vehicle_speed: np.ndarray
    fuel_flow: np.ndarray

    def __post_init__(self) -> None:
        speed = np.asarray(self.vehicle_speed, dtype=float)
        fuel = np.asarray(self.fuel_flow, dtype=float)
        if speed.ndim != 1 or speed.shape != fuel.shape or speed.size == 0:
            raise ValueError("speed and fuel flow must be 1-D arrays of equal non-zero length")
        if np.any(speed < 0.0) or np.any(fuel < 0.0):
            raise ValueError(f"trace {self.id}: speeds and fuel flow must be non-negative")
        if not (np.all(np.isfinite(speed)) and np.all(np.isfinite(fuel))):
            raise ValueError(f"trace {self.id}: non-finite sample")
        object.__setattr__(self, "vehicle_speed", speed)
        object.__setattr__(self, "fuel_flow", fuel)

    def __len__(self) -> int:
        return int(self.vehicle_speed.size)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self), dtype=int)

    def truncated(self, length: int) -> "DriveCycleTrace":
        return DriveCycleTrace(self.id, self.vehicle_speed[:length], self.fuel_flow[:length])

    def scaled(self, fuel_scale: float) -> "DriveCycleTrace":
        return DriveCycleTrace(self.id, self.vehicle_speed, self.fuel_flow * fuel_scale)


@dataclass(frozen=True)
class RoadLoad:
    """Tractive power model turning speed and acceleration into fuel flow"""

    mass: float = 1300.0
    rolling_resistance: float = 0.010
    drag_area: float = 0.65
    air_density: float = 1.2
    driveline_efficiency: float = 0.9
    engine_efficiency: float = 0.28
    fuel_lhv: float = 44.0e6
    idle_fuel: float = 2.0e-4
    max_power: float = 25.0e3

    def fuel_flow(self, speed: np.ndarray, accel: np.ndarray) -> np.ndarray:
        moving = speed > 0.0
        force = (
            self.mass * accel
            + np.where(moving, self.mass * GRAVITY * self.rolling_resistance, 0.0)
            + 0.5 * self.air_density * self.drag_area * speed**2
        )
        power = np.clip(force * speed, 0.0, self.max_power)
        return self.idle_fuel + power / (
            self.driveline_efficiency * self.engine_efficiency * self.fuel_lhv
        )


@dataclass(frozen=True)
class TraceConfig:
    """Segment statistics of the trace generator

    Ranges are (low, high) of uniform draws. Durations are in seconds, speeds
    in m/s, accelerations in m/s².
    """

    length: int = TRACE_LENGTH
    n_traces: int = 16
    idle_duration: Tuple[float, float] = (5.0, 40.0)
    cruise_duration: Tuple[float, float] = (20.0, 120.0)
    target_speed: Tuple[float, float] = (6.0, 30.0)
    acceleration: Tuple[float, float] = (0.4, 1.2)
    deceleration: Tuple[float, float] = (0.6, 2.0)
    rolling_stop_probability: float = 0.3
    road: RoadLoad = field(default_factory=RoadLoad)

    def __post_init__(self) -> None:
        if self.length < 1 or self.n_traces < 1:
            raise ValueError("length and n_traces must be >= 1")


def _speed_profile(rng: np.random.Generator, config: TraceConfig) -> np.ndarray:
    speeds: List[float] = []
    v = 0.0
    while len(speeds) < config.length:
        if v == 0.0:
            speeds.extend([0.0] * int(rng.uniform(*config.idle_duration)))

        target = rng.uniform(*config.target_speed)
        accel = rng.uniform(*config.acceleration)
        while v < target:
            v = min(v + accel, target)
            speeds.append(v)

        speeds.extend([v] * int(rng.uniform(*config.cruise_duration)))

        # Brake to a stop, or to a lower speed and go again
        decel = rng.uniform(*config.deceleration)
        floor = 0.0
        if rng.uniform() < config.rolling_stop_probability:
            floor = rng.uniform(0.2, 0.6) * v
        while v > floor:
            v = max(v - decel, floor)
            speeds.append(v)
    return np.asarray(speeds[: config.length])


def generate_trace(trace_id: str, seed: int, config: TraceConfig = TraceConfig()) -> DriveCycleTrace:
    """Seeded synthetic trace

    Args:
        trace_id:   Identifier stored with the rows.
        seed:       PCG64 seed, the same seed gives the same trace.
        config:     Segment statistics and road-load model.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    speed = _speed_profile(rng, config)
    accel = np.append(np.diff(speed), 0.0)
    fuel = config.road.fuel_flow(speed, accel)
    return DriveCycleTrace(trace_id, speed, fuel)


def generate_traces(seed: int, config: TraceConfig = TraceConfig()) -> List[DriveCycleTrace]:
    """`config.n_traces` traces named trace-00, trace-01, ..."""
    seeds = np.random.SeedSequence(seed).generate_state(config.n_traces, dtype=np.uint64)
    return [generate_trace(f"trace-{i:02d}", int(s), config) for i, s in enumerate(seeds)]


# Persistence -----------------------------------------------------------------
def write_trace(trace: DriveCycleTrace, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for t, v, m in zip(trace.t, trace.vehicle_speed, trace.fuel_flow):
            writer.writerow((int(t), repr(float(v)), repr(float(m))))


def read_trace(path: Path) -> DriveCycleTrace:
    """Trace CSV, the id is the file stem

    Raises:
        ParseError:     Empty file, ragged row, bad number or time step other than 1 s.
        SchemaMismatch: Header differs from `t,vehicle_speed,fuel_flow`.
    """
    path = Path(path)
    header, body = read_table(path, TRACE_COLUMNS)
    cols = [header.index(name) for name in TRACE_COLUMNS]
    if not body:
        raise ParseError(f"trace file {path} has no samples", line=1)

    values = np.empty((len(body), 3))
    for i, row in enumerate(body):
        for j, c in enumerate(cols):
            try:
                values[i, j] = float(row[c])
            except ValueError:
                raise ParseError(f"bad value in {path}", line=i + 2, column=c + 1)
    if np.any(values[:, 0] != np.arange(values.shape[0])):
        raise ParseError(f"trace {path} is not sampled every second from t = 0")
    try:
        return DriveCycleTrace(path.stem, values[:, 1], values[:, 2])
    except ValueError as e:
        raise ParseError(f"{path}: {e}")
