"""
Closed-cycle integration of the crank-angle energy equation

    dP/dθ = (γ - 1)/V (dQ_in/dθ - dQ_loss/dθ) - γ P/V dV/dθ

from intake valve closing to exhaust valve opening, by explicit 4th-order
Runge-Kutta on a piecewise-uniform crank grid. The unburned and burned zones
share the cylinder pressure. Every function works on a batch of operating
points sharing one geometry and one combustion spec.

```python
outputs = simulate_engine_cycle(EngineGeometry(), WorkingFluid(), CombustionSpec(), op)
print(outputs.torque, outputs.no_ppm)
```
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from cyclenet.core.emissions.integrate import integrate_emissions
from cyclenet.core.emissions.thermo import ThermoTable
from cyclenet.core.emissions.zeldovich import ZeldovichRates
from cyclenet.core.engine.combustion import _burn_rate_inside, burn_fraction, heat_loss_rate
from cyclenet.core.engine.kinematics import cylinder_volume, volume_derivative
from cyclenet.core.engine.types import (
    CombustionSpec,
    CycleBatchOutputs,
    CycleOutputs,
    CycleSettings,
    CylinderState,
    EngineGeometry,
    OperatingBatch,
    OperatingPoint,
    WorkingFluid,
)
from cyclenet.core.errors import NonPhysicalState

logger = logging.getLogger(__name__)

# Row indices of the integrated state vector
P, TU, QIN, QLOSS, WORK = range(5)
N_STATE = 5

# Below this burn fraction the burned zone is too small to carry a temperature
MIN_BURNED_FRACTION = 1e-6


@dataclass(frozen=True)
class CycleInputs:
    """Everything `step_pressure` needs besides the state"""

    geom: EngineGeometry
    fluid: WorkingFluid
    spec: CombustionSpec
    op_point: OperatingPoint
    settings: CycleSettings = CycleSettings()


@dataclass
class CycleContext:
    """Per-batch constants of the right-hand side"""

    geom: EngineGeometry
    fluid: WorkingFluid
    spec: CombustionSpec
    settings: CycleSettings
    rpm: np.ndarray
    wall_temp: np.ndarray
    mass: np.ndarray
    fuel_mass: np.ndarray
    gamma_unburned: np.ndarray
    fired: np.ndarray
    initial_temp: np.ndarray
    initial_pressure: np.ndarray


# Setup -----------------------------------------------------------------------
def trapped_temperature(settings: CycleSettings, batch: OperatingBatch) -> np.ndarray:
    """Charge temperature at IVC, fresh charge mixed with hot residual by mass"""
    egr = batch.egr_fraction
    return (1.0 - egr) * batch.ambient_temp + egr * settings.residual_temp


def trapped_mass(
    geom: EngineGeometry, fluid: WorkingFluid, settings: CycleSettings, batch: OperatingBatch
) -> np.ndarray:
    """Mass trapped in one cylinder at IVC (kg)"""
    v_ivc = cylinder_volume(geom, settings.theta_ivc)
    return batch.inlet_pressure * v_ivc / (fluid.gas_constant * trapped_temperature(settings, batch))


def build_context(
    geom: EngineGeometry,
    fluid: WorkingFluid,
    spec: CombustionSpec,
    settings: CycleSettings,
    batch: OperatingBatch,
) -> CycleContext:
    h = batch.humidity
    gamma_u = (1.0 - h) * fluid.gamma_unburned + h * settings.humidity_gamma
    fuel_mass = batch.fuel_per_cycle / geom.n_cylinders
    return CycleContext(
        geom=geom,
        fluid=fluid,
        spec=spec,
        settings=settings,
        rpm=batch.rpm,
        wall_temp=batch.wall_temp,
        mass=trapped_mass(geom, fluid, settings, batch),
        fuel_mass=fuel_mass,
        gamma_unburned=gamma_u,
        fired=fuel_mass > 0.0,
        initial_temp=trapped_temperature(settings, batch),
        initial_pressure=batch.inlet_pressure.copy(),
    )


def crank_grid(settings: CycleSettings, spec: Optional[CombustionSpec] = None) -> np.ndarray:
    """Integration nodes from IVC to EVO

    Uniform pieces of at most `dtheta`, with nodes forced at the spark and at the
    end of combustion so the Wiebe profile is smooth inside every step.
    """
    breaks = {settings.theta_ivc, settings.theta_evo}
    if spec is not None:
        for theta in (spec.spark_deg, spec.end_deg):
            if settings.theta_ivc < theta < settings.theta_evo:
                breaks.add(theta)
    breaks_sorted = sorted(breaks)

    pieces = []
    for a, b in zip(breaks_sorted[:-1], breaks_sorted[1:]):
        n = max(1, int(math.ceil((b - a) / settings.dtheta - 1e-9)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append(np.array([settings.theta_evo]))
    return np.concatenate(pieces)


# Right-hand side -------------------------------------------------------------
def _is_burning(spec: CombustionSpec, theta: float, dtheta: float) -> bool:
    mid = theta + 0.5 * dtheta
    return spec.spark_deg < mid < spec.end_deg


def mixture_gamma(ctx: CycleContext, theta: float) -> np.ndarray:
    xb = burn_fraction(ctx.spec, theta) * ctx.fired
    return (1.0 - xb) * ctx.gamma_unburned + xb * ctx.fluid.gamma_burned


def mean_temperature(ctx: CycleContext, pressure: np.ndarray, volume) -> np.ndarray:
    return pressure * volume / (ctx.mass * ctx.fluid.gas_constant)


def cycle_rhs(theta: float, y: np.ndarray, ctx: CycleContext, burning: bool) -> np.ndarray:
    """Derivatives of (P, T_unburned, Q_in, Q_loss, W) per crank degree

    Args:
        theta:      Crank angle (CAD).
        y:          State, shape (5, n_samples).
        ctx:        Batch constants.
        burning:    Whether the current step lies inside the combustion window.
    """
    v = cylinder_volume(ctx.geom, theta)
    dv = volume_derivative(ctx.geom, theta)
    pressure, temp_u = y[P], y[TU]

    gamma_u = ctx.gamma_unburned
    gamma = mixture_gamma(ctx, theta)

    if burning:
        dq_in = ctx.fuel_mass * ctx.fluid.fuel_lhv * _burn_rate_inside(ctx.spec, theta)
    else:
        dq_in = np.zeros_like(pressure)

    temp = mean_temperature(ctx, pressure, v)
    dq_loss = heat_loss_rate(
        ctx.geom, pressure, temp, v, ctx.rpm, ctx.wall_temp, ctx.settings.woschni_c
    )

    dp = (gamma - 1.0) / v * (dq_in - dq_loss) - gamma * pressure / v * dv
    cp_u = gamma_u * ctx.fluid.gas_constant / (gamma_u - 1.0)
    dtu = temp_u * (gamma_u - 1.0) / gamma_u * dp / pressure - dq_loss / (ctx.mass * cp_u)

    return np.stack([dp, dtu, dq_in, dq_loss, pressure * dv])


def rk4_step(theta: float, y: np.ndarray, dtheta: float, ctx: CycleContext) -> np.ndarray:
    """One classical Runge-Kutta step"""
    burning = _is_burning(ctx.spec, theta, dtheta)
    half = 0.5 * dtheta
    k1 = cycle_rhs(theta, y, ctx, burning)
    k2 = cycle_rhs(theta + half, y + half * k1, ctx, burning)
    k3 = cycle_rhs(theta + half, y + half * k2, ctx, burning)
    k4 = cycle_rhs(theta + dtheta, y + dtheta * k3, ctx, burning)
    return y + dtheta / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def burned_temperature(
    ctx: CycleContext, theta: float, pressure: np.ndarray, temp_u: np.ndarray
) -> np.ndarray:
    """Burned-zone temperature from the ideal-gas law and the zone masses

    Equal to the unburned temperature while nothing has burned, and never below it.
    """
    xb = burn_fraction(ctx.spec, theta) * ctx.fired
    v = cylinder_volume(ctx.geom, theta)
    total = pressure * v / ctx.fluid.gas_constant
    with np.errstate(divide="ignore", invalid="ignore"):
        temp_b = (total - (1.0 - xb) * ctx.mass * temp_u) / (xb * ctx.mass)
    temp_b = np.where(xb > MIN_BURNED_FRACTION, temp_b, temp_u)
    return np.maximum(temp_b, temp_u)


def _non_physical(ctx: CycleContext, theta: float, y: np.ndarray) -> Tuple[np.ndarray, str]:
    v = cylinder_volume(ctx.geom, theta)
    bad_p = ~np.isfinite(y[P]) | (y[P] <= 0.0)
    bad_tu = ~np.isfinite(y[TU]) | (y[TU] <= 0.0)
    bad_t = mean_temperature(ctx, y[P], v) <= 0.0
    bad = bad_p | bad_tu | bad_t
    detail = ""
    if bad.any():
        detail = "pressure <= 0" if bad_p.any() else "temperature <= 0"
    return bad, detail


# Step ------------------------------------------------------------------------
def step_pressure(state: CylinderState, inputs: CycleInputs, dtheta: float) -> CylinderState:
    """Advance a single cylinder state by one RK4 step

    Args:
        state:  State at `state.theta`.
        inputs: Geometry, fluid, combustion and operating point.
        dtheta: Step in CAD, within (0, 1].

    Returns:
        State at `state.theta + dtheta`.

    Raises:
        NonPhysicalState: Pressure or temperature left the physical domain.
    """
    if not 0.0 < dtheta <= 1.0:
        raise ValueError(f"dtheta must be in (0, 1], got {dtheta}")
    if state.theta + dtheta > inputs.settings.theta_evo + 1e-9:
        raise ValueError("step would pass exhaust valve opening")

    batch = OperatingBatch.from_points([inputs.op_point])
    ctx = build_context(inputs.geom, inputs.fluid, inputs.spec, inputs.settings, batch)
    y = np.array(
        [
            [state.pressure],
            [state.temp_unburned],
            [state.cumulative_heat_release],
            [state.cumulative_heat_loss],
            [state.indicated_work],
        ]
    )
    theta = state.theta + dtheta
    y = rk4_step(state.theta, y, dtheta, ctx)

    bad, detail = _non_physical(ctx, theta, y)
    if bad[0]:
        raise NonPhysicalState(theta, detail)

    temp_b = burned_temperature(ctx, theta, y[P], y[TU])
    return CylinderState(
        theta=theta,
        pressure=float(y[P, 0]),
        temp_unburned=float(y[TU, 0]),
        temp_burned=float(temp_b[0]),
        burn_fraction=float(burn_fraction(inputs.spec, theta) * ctx.fired[0]),
        cumulative_heat_loss=float(y[QLOSS, 0]),
        cumulative_heat_release=float(y[QIN, 0]),
        indicated_work=float(y[WORK, 0]),
    )


def initial_state(inputs: CycleInputs) -> CylinderState:
    """Trapped state at IVC"""
    batch = OperatingBatch.from_points([inputs.op_point])
    temp = float(trapped_temperature(inputs.settings, batch)[0])
    return CylinderState(
        theta=inputs.settings.theta_ivc,
        pressure=inputs.op_point.inlet_pressure,
        temp_unburned=temp,
        temp_burned=temp,
    )


# Peak ------------------------------------------------------------------------
def hermite_max(
    p0: np.ndarray, p1: np.ndarray, m0: np.ndarray, m1: np.ndarray, h: np.ndarray
) -> np.ndarray:
    """Maximum over one interval of the cubic Hermite interpolant

    Args:
        p0, p1: Values at both ends.
        m0, m1: Derivatives at both ends, per unit of the abscissa.
        h:      Interval length.
    """
    a = 2.0 * (p0 - p1) + h * (m0 + m1)
    b = 3.0 * (p1 - p0) - h * (2.0 * m0 + m1)
    c = h * m0

    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(4.0 * b * b - 12.0 * a * c, 0.0))
        r1 = (-2.0 * b + disc) / (6.0 * a)
        r2 = (-2.0 * b - disc) / (6.0 * a)
        r_lin = -c / (2.0 * b)
    quadratic = np.abs(a) > 1e-12 * (np.abs(b) + np.abs(c) + 1e-300)
    r1 = np.where(quadratic, r1, r_lin)
    r2 = np.where(quadratic, r2, r_lin)

    best = np.maximum(p0, p1)
    for s in (r1, r2):
        s = np.clip(np.nan_to_num(s, nan=0.0, posinf=0.0, neginf=0.0), 0.0, 1.0)
        value = ((a * s + b) * s + c) * s + p0
        best = np.maximum(best, value)
    return best


# Cycle -----------------------------------------------------------------------
def simulate_engine_cycles(
    geom: EngineGeometry,
    fluid: WorkingFluid,
    spec: CombustionSpec,
    batch: OperatingBatch,
    settings: Optional[CycleSettings] = None,
    rates: Optional[ZeldovichRates] = None,
    table: Optional[ThermoTable] = None,
    raise_non_physical: bool = False,
) -> CycleBatchOutputs:
    """Integrate one closed cycle for every operating point of a batch

    Non-physical samples are flagged, frozen at their last valid state and
    skipped by the emissions. Their outputs are meaningless.

    Args:
        geom:               Cylinder geometry.
        fluid:              Working fluid.
        spec:               Wiebe heat-release profile.
        batch:              Operating points.
        settings:           Crank window, step and closure constants.
        rates:              Zeldovich Arrhenius constants.
        table:              Thermochemistry table, loaded from the package data if omitted.
        raise_non_physical: Raise NonPhysicalState on the first offending sample
                            instead of flagging it.
    """
    settings = settings or CycleSettings()
    ctx = build_context(geom, fluid, spec, settings, batch)
    grid = crank_grid(settings, spec)
    n = len(batch)

    y = np.zeros((N_STATE, n))
    y[P] = ctx.initial_pressure
    y[TU] = ctx.initial_temp

    p_hist = np.empty((grid.size, n))
    tu_hist = np.empty((grid.size, n))
    p_hist[0], tu_hist[0] = y[P], y[TU]
    peak_pressure = y[P].copy()

    flagged = np.zeros(n, dtype=bool)
    flagged_theta = np.full(n, np.nan)

    for i in range(grid.size - 1):
        theta, h = grid[i], grid[i + 1] - grid[i]
        burning = _is_burning(spec, theta, h)

        with np.errstate(all="ignore"):
            k1 = cycle_rhs(theta, y, ctx, burning)
            y_new = rk4_step(theta, y, h, ctx)

        bad, detail = _non_physical(ctx, grid[i + 1], y_new)
        fresh = bad & ~flagged
        if fresh.any():
            if raise_non_physical:
                raise NonPhysicalState(float(grid[i + 1]), detail)
            flagged_theta[fresh] = grid[i + 1]
            flagged |= fresh
        y_new[:, flagged] = y[:, flagged]

        with np.errstate(all="ignore"):
            k_end = cycle_rhs(grid[i + 1], y_new, ctx, burning)
        peak = hermite_max(y[P], y_new[P], k1[P], k_end[P], h)
        peak_pressure = np.where(flagged, peak_pressure, np.maximum(peak_pressure, peak))

        y = y_new
        p_hist[i + 1], tu_hist[i + 1] = y[P], y[TU]

    tb_hist = np.empty_like(p_hist)
    for i, theta in enumerate(grid):
        tb_hist[i] = burned_temperature(ctx, theta, p_hist[i], tu_hist[i])

    theta_evo = settings.theta_evo
    v_evo = cylinder_volume(geom, theta_evo)
    v_ivc = cylinder_volume(geom, settings.theta_ivc)
    gamma_evo = mixture_gamma(ctx, theta_evo)
    tail = y[P] * v_evo / (gamma_evo - 1.0) * (1.0 - (v_evo / v_ivc) ** (gamma_evo - 1.0))
    work = y[WORK] + tail

    no_ppm = np.zeros(n)
    co_ppm = np.zeros(n)
    emitting = ctx.fired & ~flagged
    if emitting.any():
        start = int(np.searchsorted(grid, spec.spark_deg - 1e-9))
        idx = np.nonzero(emitting)[0]
        no_ppm[idx], co_ppm[idx] = integrate_emissions(
            p_hist[start:, idx],
            tb_hist[start:, idx],
            batch.subset(idx),
            theta_grid=grid[start:],
            fluid=fluid,
            settings=settings,
            rates=rates,
            table=table,
        )

    if flagged.any():
        logger.debug("%d of %d samples left the physical domain", int(flagged.sum()), n)

    return CycleBatchOutputs(
        exhaust_temp=tb_hist[-1],
        exhaust_pressure=p_hist[-1].copy(),
        no_ppm=no_ppm,
        co_ppm=co_ppm,
        torque=work * geom.n_cylinders / (4.0 * math.pi),
        peak_pressure=peak_pressure,
        peak_temp=tb_hist.max(axis=0),
        indicated_work=work,
        heat_release=y[QIN].copy(),
        heat_loss=y[QLOSS].copy(),
        flagged=flagged,
        flagged_theta=flagged_theta,
    )


def simulate_engine_cycle(
    geom: EngineGeometry,
    fluid: WorkingFluid,
    spec: CombustionSpec,
    op_point: OperatingPoint,
    settings: Optional[CycleSettings] = None,
    rates: Optional[ZeldovichRates] = None,
    table: Optional[ThermoTable] = None,
) -> CycleOutputs:
    """Integrate one closed cycle for a single operating point

    Raises:
        NonPhysicalState: With the crank angle where the state became non-physical.
    """
    result = simulate_engine_cycles(
        geom,
        fluid,
        spec,
        OperatingBatch.from_points([op_point]),
        settings=settings,
        rates=rates,
        table=table,
        raise_non_physical=True,
    )
    return result.outputs(0)
