"""
Quasi-steady drive-cycle simulation

Every 1 Hz sample of a trace becomes one representative engine cycle. No
thermal state carries over from one second to the next, so all the samples
of a trace are evaluated as one vectorised batch.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np

from cyclenet.core.dataset import INPUT_COLUMNS, OUTPUT_COLUMNS
from cyclenet.core.drive.trace import DriveCycleTrace
from cyclenet.core.drive.vehicle import VehicleConfig, gear_ratio, rpm_from_speed
from cyclenet.core.emissions.thermo import ThermoTable
from cyclenet.core.emissions.zeldovich import ZeldovichRates
from cyclenet.core.engine.cycle import simulate_engine_cycles, trapped_temperature
from cyclenet.core.engine.kinematics import cylinder_volume
from cyclenet.core.engine.types import (
    CombustionSpec,
    CycleSettings,
    EngineGeometry,
    OperatingBatch,
    WorkingFluid,
)
from cyclenet.core.utils import format_ranges

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridPoint:
    """The six parameters varied across a campaign"""

    spark_deg: float = -25.0
    rpm_scale: float = 1.0
    ambient_temp: float = 290.0
    humidity: float = 0.01
    egr_fraction: float = 0.1
    compression_ratio: float = 10.0


GRID_PARAMETERS = tuple(f.name for f in fields(GridPoint))


@dataclass(frozen=True)
class LoadMap:
    """Calibration turning the fuel demand into mixture and throttle settings

    Attributes:
        base_phi:           Equivalence ratio at zero load.
        part_load_gain:     Enrichment reached at `part_load_span`.
        part_load_span:     Load where part-load enrichment saturates.
        enrich_start:       Load where full-load enrichment begins.
        enrich_span:        Load range of full-load enrichment.
        enrich_gain:        Extra equivalence ratio at full enrichment.
        egr_per_degree:     Internal EGR fraction per degree of valve overlap.
        min_inlet_factor:   Closed-throttle inlet pressure over ambient.
        wall_temp:          Cylinder wall temperature (K).
    """

    base_phi: float = 0.92
    part_load_gain: float = 0.08
    part_load_span: float = 0.5
    enrich_start: float = 0.8
    enrich_span: float = 0.2
    enrich_gain: float = 0.15
    egr_per_degree: float = 0.005
    min_inlet_factor: float = 0.15
    wall_temp: float = 400.0

    def phi(self, load: np.ndarray) -> np.ndarray:
        part = self.part_load_gain * np.minimum(load / self.part_load_span, 1.0)
        rich = self.enrich_gain * np.clip((load - self.enrich_start) / self.enrich_span, 0.0, 1.0)
        return self.base_phi + part + rich


@dataclass(frozen=True)
class EngineConfig:
    """Engine hardware and model closures shared by all cases of a campaign"""

    geometry: EngineGeometry = field(default_factory=EngineGeometry)
    combustion: CombustionSpec = field(default_factory=CombustionSpec)
    settings: CycleSettings = field(default_factory=CycleSettings)
    rates: ZeldovichRates = field(default_factory=ZeldovichRates)
    load_map: LoadMap = field(default_factory=LoadMap)


@dataclass
class DriveCycleResult:
    """Per-second rows of one case plus their aggregates

    Flagged rows left the physical domain. They keep their position but are
    excluded from the aggregates and from ML datasets.
    """

    trace_id: str
    inputs: np.ndarray
    outputs: np.ndarray
    flagged: np.ndarray

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self), dtype=int)

    def aggregates(self) -> Dict[str, Dict[str, float]]:
        """Peak, average and cumulative value of every output over valid rows"""
        valid = self.outputs[~self.flagged]
        result = {}
        for j, name in enumerate(OUTPUT_COLUMNS):
            column = valid[:, j]
            result[name] = {
                "peak": float(column.max()) if column.size else 0.0,
                "average": float(column.mean()) if column.size else 0.0,
                "cumulative": float(column.sum()),
            }
        return result


# Operating points ------------------------------------------------------------
def derive_operating_batch(
    engine: EngineConfig,
    fluid: WorkingFluid,
    vehicle: VehicleConfig,
    trace: DriveCycleTrace,
    params: GridPoint,
    fuel_scale: float = 1.0,
    rpm_multiplier: float = 1.0,
) -> Tuple[OperatingBatch, np.ndarray, np.ndarray]:
    """Mutually consistent engine inputs for every second of a trace

    Returns:
        Operating points, gear ratio and fuel flow (kg/s) per second.
    """
    geom = replace(engine.geometry, compression_ratio=params.compression_ratio)
    settings = engine.settings
    load_map = engine.load_map
    n = len(trace)

    speed = trace.vehicle_speed
    fuel_flow = trace.fuel_flow * fuel_scale
    rpm = rpm_from_speed(vehicle, speed) * params.rpm_scale * rpm_multiplier
    ratio = gear_ratio(vehicle, speed)

    fuel_cycle = fuel_flow * 120.0 / rpm
    fuel_cyl = fuel_cycle / geom.n_cylinders

    egr = np.full(n, params.egr_fraction)
    ambient_temp = np.full(n, params.ambient_temp)
    reference = OperatingBatch(
        rpm=rpm,
        fuel_per_cycle=fuel_cycle,
        afr=np.ones(n),
        inlet_pressure=np.full(n, settings.ambient_pressure),
        intake_air_mass=np.ones(n),
        ambient_temp=ambient_temp,
        humidity=np.full(n, params.humidity),
        egr_fraction=egr,
        valve_timing_deg=egr / load_map.egr_per_degree,
        wall_temp=np.full(n, load_map.wall_temp),
    )
    v_ivc = cylinder_volume(geom, settings.theta_ivc)
    charge_ambient = (
        settings.ambient_pressure * v_ivc / (fluid.gas_constant * trapped_temperature(settings, reference))
    )
    fresh_ambient = charge_ambient * (1.0 - egr)

    load = fuel_cyl / (fresh_ambient / (1.0 + fluid.stoich_afr))
    afr = fluid.stoich_afr / load_map.phi(load)
    air_cyl = fuel_cyl * afr
    factor = (air_cyl + fuel_cyl) / (1.0 - egr) / charge_ambient

    # Closed throttle floor: the cylinder still breathes without fuel
    closed = factor < load_map.min_inlet_factor
    factor = np.where(closed, load_map.min_inlet_factor, factor)
    air_cyl = np.where(closed, factor * fresh_ambient - fuel_cyl, air_cyl)
    fired = fuel_cyl > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        afr = np.where(closed & fired, air_cyl / fuel_cyl, afr)

    batch = replace(
        reference,
        afr=afr,
        inlet_pressure=settings.ambient_pressure * factor,
        intake_air_mass=air_cyl * geom.n_cylinders,
    )
    return batch, ratio, fuel_flow


def input_matrix(
    batch: OperatingBatch,
    params: GridPoint,
    gear: np.ndarray,
    fuel_flow: np.ndarray,
) -> np.ndarray:
    """The ten model inputs, columns in INPUT_COLUMNS order"""
    n = len(batch)
    columns = {
        "ambient_temp": batch.ambient_temp,
        "humidity": batch.humidity,
        "valve_timing": batch.valve_timing_deg,
        "compression_ratio": np.full(n, params.compression_ratio),
        "spark_timing": np.full(n, params.spark_deg),
        "gear_ratio": gear,
        "fuel_rate": fuel_flow,
        "afr": batch.afr,
        "inlet_pressure": batch.inlet_pressure,
        "intake_air_mass": batch.intake_air_mass,
    }
    return np.column_stack([columns[name] for name in INPUT_COLUMNS])


# Simulation ------------------------------------------------------------------
def simulate_drive_cycle(
    engine: EngineConfig,
    fluid: WorkingFluid,
    vehicle: VehicleConfig,
    trace: DriveCycleTrace,
    params: GridPoint,
    fuel_scale: float = 1.0,
    rpm_multiplier: float = 1.0,
    table: Optional[ThermoTable] = None,
) -> DriveCycleResult:
    """Evaluate every second of a trace at one grid point

    Args:
        engine:         Engine hardware and closures.
        fluid:          Working fluid.
        vehicle:        Gear map.
        trace:          1 Hz speed and fuel trace.
        params:         Campaign parameters of this case.
        fuel_scale:     Multiplier on the trace fuel flow.
        rpm_multiplier: Multiplier on the engine speed after the gear map.
        table:          Thermochemistry table.
    """
    batch, gear, fuel_flow = derive_operating_batch(
        engine, fluid, vehicle, trace, params, fuel_scale, rpm_multiplier
    )
    geom = replace(engine.geometry, compression_ratio=params.compression_ratio)
    spec = replace(engine.combustion, spark_deg=params.spark_deg)

    out = simulate_engine_cycles(
        geom, fluid, spec, batch, settings=engine.settings, rates=engine.rates, table=table
    )
    outputs = np.column_stack([getattr(out, name) for name in OUTPUT_COLUMNS])

    flagged = out.flagged | ~np.all(np.isfinite(outputs), axis=1)
    outputs = np.where(flagged[:, None], 0.0, outputs)
    if flagged.any():
        seconds = format_ranges(int(s) for s in np.nonzero(flagged)[0])
        logger.warning("trace %s: %d non-physical seconds (%s)", trace.id, int(flagged.sum()), seconds)

    return DriveCycleResult(
        trace_id=trace.id,
        inputs=input_matrix(batch, params, gear, fuel_flow),
        outputs=outputs,
        flagged=flagged,
    )
