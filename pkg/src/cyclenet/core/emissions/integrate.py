import logging
from typing import Optional, Tuple, Union

import numpy as np

from cyclenet.core.emissions.equilibrium import SpeciesSet, equilibrium_composition
from cyclenet.core.emissions.thermo import ThermoTable, load_thermo_table
from cyclenet.core.emissions.zeldovich import (
    KineticTerms,
    ZeldovichRates,
    advance_no,
    kinetic_terms,
)
from cyclenet.core.engine.types import (
    CycleSettings,
    OperatingBatch,
    OperatingPoint,
    WorkingFluid,
)

logger = logging.getLogger(__name__)

CHEMISTRY_TEMP = (600.0, 4000.0)
CHEMISTRY_PRESSURE = (1.0e4, 3.0e7)


class _WarmEquilibrium:
    def __init__(self, phi: np.ndarray, fluid: WorkingFluid, table: ThermoTable):
        """Equilibrium along a trajectory, warm-started from the previous crank angle

        A sample restarts cold when its previous state was solved in closed
        form, since complete-combustion compositions hold exact zeros.
        """
        self.phi = phi
        self.fluid = fluid
        self.table = table
        self.previous = np.full((phi.size, 10), np.nan)
        self.previous_hot = np.zeros(phi.size, dtype=bool)
        self.max_iterations = 0

    def solve(self, idx: np.ndarray, temp: np.ndarray, pressure: np.ndarray) -> np.ndarray:
        x = np.empty((idx.size, 10))
        warm = self.previous_hot[idx]
        for group, use_previous in ((warm, True), (~warm, False)):
            if not group.any():
                continue
            initial = SpeciesSet(self.previous[idx[group]]) if use_previous else None
            eq = equilibrium_composition(
                temp[group],
                pressure[group],
                self.phi[idx[group]],
                fuel=self.fluid.fuel,
                initial=initial,
                table=self.table,
            )
            x[group] = eq.mole_fractions
            self.max_iterations = max(self.max_iterations, eq.iterations)
        self.previous[idx] = x
        self.previous_hot[idx] = temp >= 1000.0
        return x


def _as_batch(op_point: Union[OperatingPoint, OperatingBatch]) -> OperatingBatch:
    if isinstance(op_point, OperatingPoint):
        return OperatingBatch.from_points([op_point])
    return op_point


def integrate_emissions(
    pressure_history: np.ndarray,
    burned_temp_history: np.ndarray,
    op_point: Union[OperatingPoint, OperatingBatch],
    theta_grid: Optional[np.ndarray] = None,
    fluid: Optional[WorkingFluid] = None,
    settings: Optional[CycleSettings] = None,
    rates: Optional[ZeldovichRates] = None,
    table: Optional[ThermoTable] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exhaust NO and CO along a burned-zone trajectory

    NO follows the Zeldovich kinetics from the spark onwards. CO is the
    equilibrium value where the burned gas first cools below the freeze
    temperature, at the pressure interpolated to that temperature. A burned
    zone that never reaches the freeze temperature keeps the equilibrium CO of
    its hottest state, one still above it at exhaust valve opening keeps the
    CO of that last state.

    Args:
        pressure_history:       Pressure (Pa), shape (n_nodes,) or (n_nodes, n_samples).
        burned_temp_history:    Burned-zone temperature (K), same shape.
        op_point:               Operating point(s) of the samples.
        theta_grid:             Crank angles of the nodes. Defaults to a uniform
                                `settings.dtheta` grid ending at EVO.
        fluid:                  Working fluid, gives the equivalence ratio and fuel.
        settings:               Freeze and cut-off temperatures, sub-steps.
        rates:                  Zeldovich constants.
        table:                  Thermochemistry table.

    Returns:
        (no_ppm, co_ppm), scalars for 1-D histories, arrays otherwise.
    """
    fluid = fluid or WorkingFluid()
    settings = settings or CycleSettings()
    table = table or load_thermo_table()
    batch = _as_batch(op_point)

    single = np.ndim(pressure_history) == 1
    p_hist = np.asarray(pressure_history, dtype=float).reshape(len(pressure_history), -1)
    t_hist = np.asarray(burned_temp_history, dtype=float).reshape(p_hist.shape)
    n_nodes, n = t_hist.shape
    if len(batch) != n:
        raise ValueError(f"{len(batch)} operating points for {n} histories")
    if theta_grid is None:
        theta_grid = settings.theta_evo - settings.dtheta * np.arange(n_nodes)[::-1]

    no = np.zeros(n)
    co = np.zeros(n)
    fired = batch.fuel_per_cycle > 0.0
    if not fired.any() or n_nodes == 0:
        return _result(no, co, single)

    phi = batch.equivalence_ratio(fluid)
    temp = np.clip(t_hist, *CHEMISTRY_TEMP)
    pressure = np.clip(p_hist, *CHEMISTRY_PRESSURE)
    t_freeze = settings.freeze_temp
    solver = _WarmEquilibrium(phi, fluid, table)

    growth = np.zeros(n)
    ratio = np.zeros(n)
    no_eq = np.zeros(n)
    frozen = np.zeros(n, dtype=bool)
    done = ~fired
    t_peak = np.full(n, -np.inf)
    co_peak = np.zeros(n)
    co_last = np.zeros(n)

    for k in range(n_nodes):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        t_k, p_k = temp[k, idx], pressure[k, idx]
        x = solver.solve(idx, t_k, p_k)
        eq = SpeciesSet(x)

        terms = kinetic_terms(eq, t_k, p_k, rates, table)
        if k > 0:
            dt = (theta_grid[k] - theta_grid[k - 1]) / (6.0 * batch.rpm[idx])
            start = KineticTerms(growth[idx], ratio[idx], no_eq[idx])
            no[idx] = advance_no(no[idx], start, terms, dt, settings.no_substeps)
        growth[idx], ratio[idx], no_eq[idx] = terms.growth, terms.ratio, terms.no_eq

        # CO
        x_co = eq["CO"]
        co_last[idx] = x_co
        hotter = t_hist[k, idx] > t_peak[idx]
        co_peak[idx] = np.where(hotter, x_co, co_peak[idx])
        t_peak[idx] = np.maximum(t_peak[idx], t_hist[k, idx])

        if k > 0:
            t_prev = t_hist[k - 1, idx]
            crossing = ~frozen[idx] & (t_prev >= t_freeze) & (t_hist[k, idx] < t_freeze)
            if crossing.any():
                cross = idx[crossing]
                w = (t_prev[crossing] - t_freeze) / (t_prev[crossing] - t_hist[k, cross])
                p_freeze = p_hist[k - 1, cross] + w * (p_hist[k, cross] - p_hist[k - 1, cross])
                p_freeze = np.clip(p_freeze, *CHEMISTRY_PRESSURE)
                eq_freeze = equilibrium_composition(
                    np.full(cross.size, t_freeze), p_freeze, phi[cross], fluid.fuel, table=table
                )
                co[cross] = eq_freeze["CO"]
                frozen[cross] = True

        done[idx] = frozen[idx] & (t_hist[k, idx] < settings.kinetics_cutoff_temp)

    never_hot = fired & ~frozen & (t_peak < t_freeze)
    still_hot = fired & ~frozen & ~never_hot
    co[never_hot] = co_peak[never_hot]
    co[still_hot] = co_last[still_hot]
    if still_hot.any():
        logger.debug("%d samples still above the CO freeze temperature at EVO", int(still_hot.sum()))

    no[~fired] = 0.0
    co[~fired] = 0.0
    return _result(no, co, single)


def _result(no: np.ndarray, co: np.ndarray, single: bool):
    no_ppm, co_ppm = no * 1e6, co * 1e6
    if single:
        return float(no_ppm[0]), float(co_ppm[0])
    return no_ppm, co_ppm
