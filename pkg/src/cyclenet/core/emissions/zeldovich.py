"""
Thermal NO by the extended Zeldovich mechanism

    N2 + O  = NO + N     (1)
    N  + O2 = NO + O     (2)
    N  + OH = NO + H     (3)

With N in steady state and O, OH, N2, O2 at equilibrium the net rate is

    d[NO]/dt = 2 R1 (1 - α²) / (1 + α R1/(R2 + R3)),   α = [NO]/[NO]e

where Ri is the one-way equilibrium rate of reaction i. Each sub-step is a
backward-Euler update whose implicit equation is a quadratic in α, solved in
closed form.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from cyclenet.core.emissions.equilibrium import SpeciesSet, nitrogen_atom_fraction
from cyclenet.core.emissions.thermo import R_UNIVERSAL, ThermoTable

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ZeldovichRates:
    """Forward rate constants k = A T^b exp(-E/T), in cm³/(mol s)"""

    a1: float = 1.8e14
    b1: float = 0.0
    e1: float = 38370.0
    a2: float = 1.8e10
    b2: float = 1.0
    e2: float = 4680.0
    a3: float = 7.1e13
    b3: float = 0.0
    e3: float = 450.0

    def forward(self, temp: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        t = np.asarray(temp, dtype=float)
        k1 = self.a1 * t**self.b1 * np.exp(-self.e1 / t)
        k2 = self.a2 * t**self.b2 * np.exp(-self.e2 / t)
        k3 = self.a3 * t**self.b3 * np.exp(-self.e3 / t)
        return k1, k2, k3


@dataclass(frozen=True)
class EmissionState:
    """Kinetically tracked pollutant mole fractions

    Attributes:
        no_molefrac:    NO mole fraction.
        co_molefrac:    CO mole fraction, fixed once frozen.
        frozen:         CO has frozen.
    """

    no_molefrac: ArrayLike = 0.0
    co_molefrac: ArrayLike = 0.0
    frozen: ArrayLike = False

    def __post_init__(self) -> None:
        for name in ("no_molefrac", "co_molefrac"):
            value = np.asarray(getattr(self, name))
            if np.any(value < 0.0) or np.any(value > 1.0):
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class KineticTerms:
    """Coefficients of the NO rate at one state

    Attributes:
        growth:     2 R1 / c_total, initial NO growth rate in mole fraction per second.
        ratio:      R1 / (R2 + R3).
        no_eq:      Equilibrium NO mole fraction.
    """

    growth: np.ndarray
    ratio: np.ndarray
    no_eq: np.ndarray


def kinetic_terms(
    eq: SpeciesSet,
    temp: ArrayLike,
    pressure: ArrayLike,
    rates: Optional[ZeldovichRates] = None,
    table: Optional[ThermoTable] = None,
) -> KineticTerms:
    rates = rates or ZeldovichRates()
    temp = np.asarray(temp, dtype=float)
    c_total = np.asarray(pressure, dtype=float) / (R_UNIVERSAL * temp) * 1e-6  # mol/cm³

    x_n = nitrogen_atom_fraction(eq, temp, pressure, table)
    k1, k2, k3 = rates.forward(temp)
    r1 = k1 * eq["O"] * eq["N2"] * c_total**2
    r23 = (k2 * eq["O2"] + k3 * eq["OH"]) * x_n * c_total**2

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r23 > 0.0, r1 / r23, 0.0)
    return KineticTerms(growth=2.0 * r1 / c_total, ratio=ratio, no_eq=np.asarray(eq["NO"]))


def implicit_update(
    x_old: np.ndarray, growth: np.ndarray, ratio: np.ndarray, no_eq: np.ndarray, dt: ArrayLike
) -> np.ndarray:
    """One backward-Euler step of the NO mole fraction

    Solves (α x_e - x_old)(1 + α K) = D (1 - α²) with D = growth * dt for its
    positive root. The result always lies between x_old and x_e.
    """
    d = growth * dt
    a = no_eq * ratio + d
    b = no_eq - x_old * ratio
    c = x_old + d
    disc = np.sqrt(b * b + 4.0 * a * c)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(b >= 0.0, 2.0 * c / (b + disc), (disc - b) / (2.0 * a))
    x_new = alpha * no_eq

    still = (d <= 0.0) | (no_eq <= 0.0) | (x_old == no_eq) | ~np.isfinite(x_new)
    x_new = np.where(still, x_old, x_new)
    return np.clip(x_new, np.minimum(x_old, no_eq), np.maximum(x_old, no_eq))


def _interpolate(start: np.ndarray, end: np.ndarray, s: float, geometric: bool) -> np.ndarray:
    if not geometric:
        return (1.0 - s) * start + s * end
    both = (start > 0.0) & (end > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = np.exp((1.0 - s) * np.log(start) + s * np.log(end))
    return np.where(both, geo, (1.0 - s) * start + s * end)


def advance_no(
    x_old: np.ndarray,
    start: KineticTerms,
    end: KineticTerms,
    dt: ArrayLike,
    substeps: int = 4,
) -> np.ndarray:
    """Integrate NO across one interval whose end states are known

    Rate coefficients vary geometrically and the equilibrium NO linearly
    between the two end states.
    """
    x = np.asarray(x_old, dtype=float)
    h = np.asarray(dt, dtype=float) / substeps
    for i in range(1, substeps + 1):
        s = i / substeps
        growth = _interpolate(start.growth, end.growth, s, geometric=True)
        ratio = _interpolate(start.ratio, end.ratio, s, geometric=True)
        no_eq = _interpolate(start.no_eq, end.no_eq, s, geometric=False)
        x = implicit_update(x, growth, ratio, no_eq, h)
    return x


def zeldovich_no_step(
    state: EmissionState,
    eq: SpeciesSet,
    temp: ArrayLike,
    pressure: ArrayLike,
    dt: ArrayLike,
    rates: Optional[ZeldovichRates] = None,
    table: Optional[ThermoTable] = None,
    substeps: int = 4,
) -> EmissionState:
    """Advance NO over `dt` seconds at a fixed burned-gas state

    Args:
        state:      Current pollutant state.
        eq:         Converged equilibrium at (temp, pressure).
        temp:       Burned-gas temperature (K).
        pressure:   Pressure (Pa).
        dt:         Time step (s), > 0.
        rates:      Arrhenius constants.
        table:      Thermochemistry table.
        substeps:   Implicit sub-steps.
    """
    if np.any(np.asarray(dt) <= 0.0):
        raise ValueError("dt must be positive")
    terms = kinetic_terms(eq, temp, pressure, rates, table)
    no = advance_no(np.asarray(state.no_molefrac, dtype=float), terms, terms, dt, substeps)
    if np.ndim(no) == 0:
        no = float(no)
    return EmissionState(no_molefrac=no, co_molefrac=state.co_molefrac, frozen=state.frozen)
