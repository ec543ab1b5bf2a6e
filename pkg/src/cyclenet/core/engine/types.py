import math
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class FuelSpec:
    """Hydrocarbon fuel CxHy

    Attributes:
        carbon:     Carbon atoms per fuel molecule.
        hydrogen:   Hydrogen atoms per fuel molecule.
        name:       Label used in logs.
    """

    carbon: float = 8.0
    hydrogen: float = 18.0
    name: str = "iso-octane"

    def __post_init__(self) -> None:
        if self.carbon <= 0.0 or self.hydrogen <= 0.0:
            raise ValueError(f"fuel needs carbon and hydrogen, got C{self.carbon}H{self.hydrogen}")

    @property
    def oxygen_demand(self) -> float:
        """Moles of O2 per mole of fuel for complete combustion"""
        return self.carbon + self.hydrogen / 4.0


ISO_OCTANE = FuelSpec()


@dataclass(frozen=True)
class EngineGeometry:
    """Slider-crank cylinder geometry

    Attributes:
        bore:               Cylinder bore (m).
        stroke:             Piston stroke (m).
        conrod_length:      Connecting rod length (m).
        compression_ratio:  Maximum over minimum cylinder volume.
        n_cylinders:        Number of identical cylinders.
    """

    bore: float = 0.086
    stroke: float = 0.086
    conrod_length: float = 0.145
    compression_ratio: float = 10.0
    n_cylinders: int = 4

    def __post_init__(self) -> None:
        if self.bore <= 0.0 or self.stroke <= 0.0:
            raise ValueError("bore and stroke must be positive")
        if self.compression_ratio <= 1.0:
            raise ValueError(f"compression ratio must be > 1, got {self.compression_ratio}")
        if self.n_cylinders < 1:
            raise ValueError(f"need at least one cylinder, got {self.n_cylinders}")
        if self.conrod_length <= self.stroke / 2.0:
            raise ValueError("connecting rod must be longer than the crank radius")

    @property
    def piston_area(self) -> float:
        return math.pi / 4.0 * self.bore**2

    @property
    def displaced_volume(self) -> float:
        """Swept volume of one cylinder (m³)"""
        return self.piston_area * self.stroke

    @property
    def displacement(self) -> float:
        """Swept volume of the engine (m³)"""
        return self.n_cylinders * self.displaced_volume

    @property
    def clearance_volume(self) -> float:
        return self.displaced_volume / (self.compression_ratio - 1.0)

    @property
    def rod_ratio(self) -> float:
        """R = 2 * conrod / stroke"""
        return 2.0 * self.conrod_length / self.stroke


@dataclass(frozen=True)
class WorkingFluid:
    """Ideal-gas properties of the cylinder charge

    Attributes:
        gamma_unburned: Ratio of specific heats of the fresh charge.
        gamma_burned:   Ratio of specific heats of the combustion products.
        gas_constant:   Specific gas constant shared by both zones (J/(kg K)).
        fuel_lhv:       Lower heating value of the fuel (J/kg).
        stoich_afr:     Stoichiometric air-fuel mass ratio.
        fuel:           Fuel molecule used by the chemistry.
    """

    gamma_unburned: float = 1.35
    gamma_burned: float = 1.25
    gas_constant: float = 287.0
    fuel_lhv: float = 44.0e6
    stoich_afr: float = 15.03
    fuel: FuelSpec = ISO_OCTANE

    def __post_init__(self) -> None:
        for name in ("gamma_unburned", "gamma_burned"):
            value = getattr(self, name)
            if not 1.0 < value <= 1.7:
                raise ValueError(f"{name} must be in (1, 1.7], got {value}")
        if self.gamma_burned > self.gamma_unburned:
            raise ValueError("gamma_burned must not exceed gamma_unburned")
        for name in ("gas_constant", "fuel_lhv", "stoich_afr"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CombustionSpec:
    """Wiebe heat-release profile

    Attributes:
        spark_deg:      Start of combustion (CAD, 0 = firing TDC, negative = before TDC).
        duration_deg:   Combustion duration (CAD).
        wiebe_a:        Efficiency parameter, 6.908 burns 99.9 % over the duration.
        wiebe_m:        Shape parameter.
    """

    spark_deg: float = -25.0
    duration_deg: float = 50.0
    wiebe_a: float = 6.908
    wiebe_m: float = 2.0

    def __post_init__(self) -> None:
        if not -60.0 <= self.spark_deg <= 20.0:
            raise ValueError(f"spark_deg must be in [-60, 20], got {self.spark_deg}")
        if not 0.0 < self.duration_deg <= 120.0:
            raise ValueError(f"duration_deg must be in (0, 120], got {self.duration_deg}")
        if self.wiebe_a <= 0.0 or self.wiebe_m < 0.0:
            raise ValueError("wiebe_a must be > 0 and wiebe_m >= 0")

    @property
    def end_deg(self) -> float:
        return self.spark_deg + self.duration_deg


@dataclass(frozen=True)
class CycleSettings:
    """Numerical and closure settings of one engine-cycle evaluation

    Attributes:
        dtheta:                 Nominal crank step (CAD).
        theta_ivc:              Intake valve closing, start of the closed cycle (CAD).
        theta_evo:              Exhaust valve opening, end of the closed cycle (CAD).
        woschni_c:              Wall heat-transfer constant. 0 gives adiabatic walls, the
                                default loses about 15% of the heat release at
                                mid-grid load.
        residual_temp:          Temperature of the trapped residual gas (K).
        humidity_gamma:         Ratio of specific heats of water vapour.
        ambient_pressure:       Pressure the volumetric factor refers to (Pa).
        freeze_temp:            Burned-gas temperature where CO freezes (K).
        kinetics_cutoff_temp:   Below this burned-gas temperature, once CO froze,
                                NO kinetics are no longer integrated (K).
        no_substeps:            Implicit Zeldovich sub-steps per crank step.
    """

    dtheta: float = 0.5
    theta_ivc: float = -160.0
    theta_evo: float = 140.0
    woschni_c: float = 10.0
    residual_temp: float = 900.0
    humidity_gamma: float = 1.33
    ambient_pressure: float = 101325.0
    freeze_temp: float = 1740.0
    kinetics_cutoff_temp: float = 1500.0
    no_substeps: int = 8

    def __post_init__(self) -> None:
        if not 0.0 < self.dtheta <= 1.0:
            raise ValueError(f"dtheta must be in (0, 1], got {self.dtheta}")
        if self.theta_ivc >= self.theta_evo:
            raise ValueError("theta_ivc must precede theta_evo")
        if self.woschni_c < 0.0:
            raise ValueError("woschni_c must be non-negative")
        if self.no_substeps < 1:
            raise ValueError("no_substeps must be >= 1")


@dataclass(frozen=True)
class OperatingPoint:
    """Control inputs of one engine-cycle evaluation

    `fuel_per_cycle` and `intake_air_mass` are per engine cycle, summed over
    all cylinders.
    """

    rpm: float
    fuel_per_cycle: float
    afr: float
    inlet_pressure: float
    intake_air_mass: float
    ambient_temp: float = 298.0
    humidity: float = 0.01
    egr_fraction: float = 0.0
    valve_timing_deg: float = 0.0
    wall_temp: float = 400.0

    def __post_init__(self) -> None:
        for name in ("rpm", "afr", "inlet_pressure", "ambient_temp", "wall_temp"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.fuel_per_cycle < 0.0:
            raise ValueError("fuel_per_cycle must be non-negative")
        if self.intake_air_mass <= 0.0:
            raise ValueError("intake_air_mass must be positive")
        if not 0.0 <= self.humidity <= 1.0:
            raise ValueError(f"humidity must be in [0, 1], got {self.humidity}")
        if not 0.0 <= self.egr_fraction <= 0.5:
            raise ValueError(f"egr_fraction must be in [0, 0.5], got {self.egr_fraction}")

    def equivalence_ratio(self, fluid: WorkingFluid) -> float:
        return fluid.stoich_afr / self.afr


OPERATING_FIELDS = tuple(f.name for f in fields(OperatingPoint))


@dataclass
class OperatingBatch:
    """Column-wise batch of operating points

    Every attribute is a 1-D float array of the same length. The engine cycle
    is vectorised over this batch.
    """

    rpm: np.ndarray
    fuel_per_cycle: np.ndarray
    afr: np.ndarray
    inlet_pressure: np.ndarray
    intake_air_mass: np.ndarray
    ambient_temp: np.ndarray
    humidity: np.ndarray
    egr_fraction: np.ndarray
    valve_timing_deg: np.ndarray
    wall_temp: np.ndarray

    def __post_init__(self) -> None:
        sizes = set()
        for name in OPERATING_FIELDS:
            value = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            setattr(self, name, value)
            sizes.add(value.shape)
        if len(sizes) != 1:
            raise ValueError(f"operating batch columns differ in shape: {sizes}")

    def __len__(self) -> int:
        return int(self.rpm.shape[0])

    @classmethod
    def from_points(cls, points: Sequence[OperatingPoint]) -> "OperatingBatch":
        columns: Dict[str, List[float]] = {name: [] for name in OPERATING_FIELDS}
        for point in points:
            for name in OPERATING_FIELDS:
                columns[name].append(getattr(point, name))
        return cls(**{k: np.asarray(v, dtype=float) for k, v in columns.items()})

    def subset(self, index: np.ndarray) -> "OperatingBatch":
        return OperatingBatch(**{k: getattr(self, k)[index] for k in OPERATING_FIELDS})

    def point(self, index: int) -> OperatingPoint:
        return OperatingPoint(**{k: float(getattr(self, k)[index]) for k in OPERATING_FIELDS})

    def equivalence_ratio(self, fluid: WorkingFluid) -> np.ndarray:
        return fluid.stoich_afr / self.afr


@dataclass(frozen=True)
class CylinderState:
    """Closed-cycle state at one crank angle

    Attributes:
        theta:                      Crank angle (CAD).
        pressure:                   Cylinder pressure (Pa).
        temp_unburned:              Unburned-zone temperature (K).
        temp_burned:                Burned-zone temperature (K), equal to the
                                    unburned one while nothing has burned.
        burn_fraction:              Wiebe mass fraction burned.
        cumulative_heat_loss:       Wall heat loss since IVC (J).
        cumulative_heat_release:    Fuel heat released since IVC (J).
        indicated_work:             Integral of P dV since IVC (J).
    """

    theta: float
    pressure: float
    temp_unburned: float
    temp_burned: float
    burn_fraction: float = 0.0
    cumulative_heat_loss: float = 0.0
    cumulative_heat_release: float = 0.0
    indicated_work: float = 0.0

    def __post_init__(self) -> None:
        if self.pressure <= 0.0:
            raise ValueError("pressure must be positive")
        if self.burn_fraction > 0.0 and self.temp_burned < self.temp_unburned:
            raise ValueError("burned zone colder than unburned zone")


@dataclass(frozen=True)
class CycleOutputs:
    """Results of one engine-cycle evaluation

    The five regression targets are exhaust_temp, exhaust_pressure, no_ppm,
    co_ppm and torque. The remaining fields support energy bookkeeping.
    """

    exhaust_temp: float
    exhaust_pressure: float
    no_ppm: float
    co_ppm: float
    torque: float
    peak_pressure: float
    peak_temp: float
    indicated_work: float = 0.0
    heat_release: float = 0.0
    heat_loss: float = 0.0


@dataclass
class CycleBatchOutputs:
    """Column-wise `CycleOutputs` plus the per-sample non-physical flag"""

    exhaust_temp: np.ndarray
    exhaust_pressure: np.ndarray
    no_ppm: np.ndarray
    co_ppm: np.ndarray
    torque: np.ndarray
    peak_pressure: np.ndarray
    peak_temp: np.ndarray
    indicated_work: np.ndarray
    heat_release: np.ndarray
    heat_loss: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    flagged_theta: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.torque.shape[0])

    def outputs(self, index: int) -> CycleOutputs:
        names = [f.name for f in fields(CycleOutputs)]
        return CycleOutputs(**{k: float(getattr(self, k)[index]) for k in names})

