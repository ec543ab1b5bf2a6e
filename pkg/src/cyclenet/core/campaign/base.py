import itertools
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from cyclenet.core.drive.simulate import (
    GRID_PARAMETERS,
    DriveCycleResult,
    EngineConfig,
    GridPoint,
    simulate_drive_cycle,
)
from cyclenet.core.drive.trace import DriveCycleTrace
from cyclenet.core.drive.vehicle import VehicleConfig
from cyclenet.core.emissions.thermo import load_thermo_table
from cyclenet.core.engine.types import WorkingFluid


@dataclass(frozen=True)
class CaseSpec:
    """One (trace, grid point) evaluation of a campaign

    Attributes:
        case_id:        Position of the case in the campaign output.
        trace_id:       Trace to drive.
        point:          Values of the six varied parameters.
        fuel_scale:     Multiplier on the trace fuel flow.
        rpm_multiplier: Multiplier on the engine speed after the gear map.
    """

    case_id: int
    trace_id: str
    point: GridPoint = field(default_factory=GridPoint)
    fuel_scale: float = 1.0
    rpm_multiplier: float = 1.0


@dataclass(frozen=True)
class CampaignSpec:
    """Traces crossed with a factorial grid of engine parameters

    Without explicit `cases`, every trace is crossed with the full factorial
    of `grid`, traces outermost and grid points in lexicographic order of
    GRID_PARAMETERS. Parameters missing from `grid` keep their GridPoint
    default.

    Attributes:
        traces:         Drive traces, their ids must be unique.
        grid:           Level values per varied parameter.
        seed:           Seed the traces were generated with, kept for the manifest.
        output_path:    CSV receiving the rows.
        cases:          Explicit case list replacing the factorial enumeration.
    """

    traces: Tuple[DriveCycleTrace, ...]
    grid: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    seed: int = 0
    output_path: Path = Path("campaign.csv")
    engine: EngineConfig = field(default_factory=EngineConfig)
    fluid: WorkingFluid = field(default_factory=WorkingFluid)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    cases: Optional[Tuple[CaseSpec, ...]] = None

    def __post_init__(self) -> None:
        ids = [t.id for t in self.traces]
        if len(set(ids)) != len(ids):
            raise ValueError("trace ids must be unique")
        for name, values in self.grid.items():
            if name not in GRID_PARAMETERS:
                raise ValueError(f"unknown grid parameter '{name}'")
            if len(values) == 0:
                raise ValueError(f"grid parameter '{name}' has no levels")
        if self.cases is not None:
            unknown = {c.trace_id for c in self.cases} - set(ids)
            if unknown:
                raise ValueError(f"cases refer to unknown traces {sorted(unknown)}")

    def trace(self, trace_id: str) -> DriveCycleTrace:
        for t in self.traces:
            if t.id == trace_id:
                return t
        raise KeyError(trace_id)

    def grid_points(self) -> List[GridPoint]:
        """Full factorial of the grid levels"""
        levels = [tuple(self.grid.get(name, (getattr(GridPoint(), name),))) for name in GRID_PARAMETERS]
        return [GridPoint(*values) for values in itertools.product(*levels)]

    def enumerate_cases(self) -> List[CaseSpec]:
        if self.cases is not None:
            return list(self.cases)
        points = self.grid_points()
        return [
            CaseSpec(case_id=i, trace_id=trace.id, point=point)
            for i, (trace, point) in enumerate(itertools.product(self.traces, points))
        ]

    def jobs(self) -> List["CaseJob"]:
        return [
            CaseJob(case, self.trace(case.trace_id), self.engine, self.fluid, self.vehicle)
            for case in self.enumerate_cases()
        ]

    def with_cases(self, cases: Sequence[CaseSpec]) -> "CampaignSpec":
        return replace(self, cases=tuple(cases))


@dataclass(frozen=True)
class CaseJob:
    """Everything a worker process needs to evaluate one case"""

    case: CaseSpec
    trace: DriveCycleTrace
    engine: EngineConfig
    fluid: WorkingFluid
    vehicle: VehicleConfig


@dataclass
class CaseResult:
    case: CaseSpec
    result: DriveCycleResult
    seconds: float


def run_case(job: CaseJob) -> CaseResult:
    """Evaluate one case, timed with a monotonic clock"""
    start = time.perf_counter()
    result = simulate_drive_cycle(
        job.engine,
        job.fluid,
        job.vehicle,
        job.trace,
        job.case.point,
        fuel_scale=job.case.fuel_scale,
        rpm_multiplier=job.case.rpm_multiplier,
        table=load_thermo_table(),
    )
    return CaseResult(job.case, result, time.perf_counter() - start)


class ICaseRunner:
    """Evaluate independent campaign cases"""

    def run(self, jobs: Sequence[CaseJob], callback: Callable[[CaseResult], None]) -> None:
        """Evaluate every job and hand each result to `callback`

        Results may arrive in any order, but `callback` is always called from
        the thread that called `run`, one result at a time. Returns once every
        job has been reported. The first failing job aborts the run and its
        exception propagates.

        Args:
            jobs:       Cases to evaluate.
            callback:   Called as `callback(case_result)` for every job.
        """
        raise NotImplementedError
