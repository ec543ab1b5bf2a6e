"""
Equilibrium composition of the burned gas

Ten species, solved for the logarithms of their mole fractions by damped
Newton iteration on

    - six equilibrium relations, linear in the log mole fractions,
    - the mole-fraction sum,
    - three element ratios (C, H and N relative to O) fixed by the reactants.

Every function is vectorised over temperature, pressure and equivalence ratio.

```python
eq = equilibrium_composition(2500.0, 5.0e6, 1.0)
print(eq["NO"], eq["CO"])
```
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from cyclenet.core.emissions.thermo import (
    ELEMENT_MATRIX,
    P_REF,
    SPECIES,
    ThermoTable,
    load_thermo_table,
    species_index,
)
from cyclenet.core.engine.types import ISO_OCTANE, FuelSpec
from cyclenet.core.errors import NoConvergence

logger = logging.getLogger(__name__)

N_SPECIES = len(SPECIES)
I_CO2, I_H2O, I_N2, I_O2, I_CO, I_H2, I_OH, I_H, I_O, I_NO = range(N_SPECIES)

# Moles of N2 per mole of O2 in air
N2_PER_O2 = 3.76

# Below this temperature products are taken as complete combustion
COMPLETE_COMBUSTION_TEMP = 1000.0

MAX_LOG_STEP = 5.0
MAX_HALVINGS = 40
FLOOR = 1e-300


def _reaction_matrix() -> np.ndarray:
    nu = np.zeros((6, N_SPECIES))
    rows = [
        {"H2": -1, "H": 2},
        {"O2": -1, "O": 2},
        {"H2": -1, "O2": -1, "OH": 2},
        {"N2": -1, "O2": -1, "NO": 2},
        {"H2": -2, "O2": -1, "H2O": 2},
        {"CO": -2, "O2": -1, "CO2": 2},
    ]
    for j, row in enumerate(rows):
        for name, coeff in row.items():
            nu[j, species_index(name)] = coeff
    return nu


# H2 = 2H, O2 = 2O, H2 + O2 = 2OH, N2 + O2 = 2NO, 2H2 + O2 = 2H2O, 2CO + O2 = 2CO2
REACTIONS = _reaction_matrix()
DELTA_N = REACTIONS.sum(axis=1)


@dataclass(frozen=True)
class SpeciesSet:
    """Mole fractions over SPECIES, last axis ordered like SPECIES

    Attributes:
        mole_fractions: Shape (..., 10).
        iterations:     Newton iterations spent, 0 for closed-form compositions.
    """

    mole_fractions: np.ndarray
    iterations: int = 0

    def __post_init__(self) -> None:
        x = np.asarray(self.mole_fractions, dtype=float)
        if x.shape[-1:] != (N_SPECIES,):
            raise ValueError(f"expected {N_SPECIES} mole fractions, got shape {x.shape}")
        object.__setattr__(self, "mole_fractions", x)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.mole_fractions[..., species_index(name)]

    def take(self, index) -> "SpeciesSet":
        return SpeciesSet(self.mole_fractions[index], self.iterations)

    def element_totals(self) -> np.ndarray:
        """Moles of C, H, O, N per mole of mixture"""
        return self.mole_fractions @ ELEMENT_MATRIX


# Reactants -------------------------------------------------------------------
def reactant_elements(phi, fuel: FuelSpec = ISO_OCTANE) -> np.ndarray:
    """Atoms of C, H, O, N per mole of fuel in a fuel-air mixture

    Returns:
        Array of shape phi.shape + (4,).
    """
    phi = np.asarray(phi, dtype=float)
    o2 = fuel.oxygen_demand / phi
    return np.stack(
        [
            np.full_like(phi, fuel.carbon),
            np.full_like(phi, fuel.hydrogen),
            2.0 * o2,
            2.0 * N2_PER_O2 * o2,
        ],
        axis=-1,
    )


def _shift_log_k(table: ThermoTable, temp: np.ndarray) -> np.ndarray:
    """ln K of CO + H2O = CO2 + H2"""
    g = table.gibbs_rt(temp, ("CO2", "H2", "CO", "H2O"))
    return -(g[..., 0] + g[..., 1] - g[..., 2] - g[..., 3])


def complete_combustion(
    phi,
    temp=1000.0,
    fuel: FuelSpec = ISO_OCTANE,
    table: Optional[ThermoTable] = None,
) -> SpeciesSet:
    """Major-species composition without dissociation

    Lean mixtures give CO2, H2O, N2 and excess O2. Rich mixtures share the
    missing oxygen between CO and H2 through the water-gas shift equilibrium
    at `temp`.
    """
    table = table or load_thermo_table()
    phi, temp = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(temp, dtype=float))
    a, b = fuel.carbon, fuel.hydrogen
    o2 = fuel.oxygen_demand / phi
    n2 = N2_PER_O2 * o2

    moles = np.zeros(phi.shape + (N_SPECIES,))
    moles[..., I_N2] = n2

    lean = phi <= 1.0
    moles[..., I_CO2] = np.where(lean, a, 0.0)
    moles[..., I_H2O] = np.where(lean, b / 2.0, 0.0)
    moles[..., I_O2] = np.where(lean, o2 - fuel.oxygen_demand, 0.0)

    # Rich: z moles of CO, solving K z (u + z) = (a - z)(v - z)
    k = np.exp(_shift_log_k(table, temp))
    u = 2.0 * o2 - 2.0 * a
    v = b / 2.0 - u
    qb = k * u + a + v
    disc = np.sqrt(np.maximum(qb * qb + 4.0 * (k - 1.0) * a * v, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(qb + disc > 0.0, 2.0 * a * v / (qb + disc), 0.0)
    z = np.clip(z, np.maximum(0.0, -u), np.minimum(a, np.maximum(v, 0.0)))

    rich = ~lean
    moles[..., I_CO] = np.where(rich, z, 0.0)
    moles[..., I_CO2] = np.where(rich, a - z, moles[..., I_CO2])
    moles[..., I_H2O] = np.where(rich, u + z, moles[..., I_H2O])
    moles[..., I_H2] = np.where(rich, v - z, 0.0)

    x = moles / moles.sum(axis=-1, keepdims=True)
    return SpeciesSet(x)


# Newton system ---------------------------------------------------------------
def _ratio_rows(phi: np.ndarray, fuel: FuelSpec) -> np.ndarray:
    """Element-ratio rows (n, 3, 10): sum_j (A_je - r_e A_jO) x_j = 0 for e in C, H, N"""
    b = reactant_elements(phi, fuel)
    ratios = b[:, [0, 1, 3]] / b[:, 2:3]
    a_other = ELEMENT_MATRIX[:, [0, 1, 3]].T
    a_oxygen = ELEMENT_MATRIX[:, 2]
    return a_other[None, :, :] - ratios[:, :, None] * a_oxygen[None, None, :]


def reaction_rhs(table: ThermoTable, temp: np.ndarray, pressure: np.ndarray) -> np.ndarray:
    """ln K_j - Δn_j ln(P/P°) of the six relations, shape (n, 6)"""
    g = table.gibbs_rt(temp)
    log_k = -(g @ REACTIONS.T)
    return log_k - DELTA_N[None, :] * np.log(pressure / P_REF)[:, None]


def _residual(y: np.ndarray, rhs: np.ndarray, rows: np.ndarray) -> np.ndarray:
    x = np.exp(y)
    f = np.empty_like(y)
    f[:, :6] = y @ REACTIONS.T - rhs
    f[:, 6] = x.sum(axis=1) - 1.0
    f[:, 7:] = np.einsum("nej,nj->ne", rows, x)
    return f


def _jacobian(y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    x = np.exp(y)
    jac = np.empty((y.shape[0], N_SPECIES, N_SPECIES))
    jac[:, :6, :] = REACTIONS[None, :, :]
    jac[:, 6, :] = x
    jac[:, 7:, :] = rows * x[:, None, :]
    return jac


def initial_log_fractions(
    phi: np.ndarray,
    temp: np.ndarray,
    rhs: np.ndarray,
    fuel: FuelSpec,
    table: ThermoTable,
) -> np.ndarray:
    """Starting point: complete combustion, minor species from the equilibrium relations"""
    x = complete_combustion(phi, temp, fuel, table).mole_fractions
    y = np.log(np.maximum(x, FLOOR))
    lean = phi <= 1.0

    y_o2 = np.log(np.maximum(x[:, I_O2], 1e-4))
    y_h2 = np.log(np.maximum(x[:, I_H2], 1e-4))
    y_co = np.log(np.maximum(x[:, I_CO], 1e-4))

    # 2 H2O - 2 H2 - O2 = rhs5 and 2 CO2 - 2 CO - O2 = rhs6
    y[:, I_O2] = np.where(lean, y_o2, 2.0 * y[:, I_H2O] - 2.0 * y_h2 - rhs[:, 4])
    y[:, I_H2] = np.where(lean, 0.5 * (2.0 * y[:, I_H2O] - y[:, I_O2] - rhs[:, 4]), y_h2)
    y[:, I_CO] = np.where(lean, 0.5 * (2.0 * y[:, I_CO2] - y[:, I_O2] - rhs[:, 5]), y_co)

    y[:, I_H] = 0.5 * (rhs[:, 0] + y[:, I_H2])
    y[:, I_O] = 0.5 * (rhs[:, 1] + y[:, I_O2])
    y[:, I_OH] = 0.5 * (rhs[:, 2] + y[:, I_H2] + y[:, I_O2])
    y[:, I_NO] = 0.5 * (rhs[:, 3] + y[:, I_N2] + y[:, I_O2])

    y = np.minimum(y, 0.0)
    return y - np.log(np.exp(y).sum(axis=1, keepdims=True))


def solve_log_fractions(
    y0: np.ndarray,
    rhs: np.ndarray,
    rows: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> Tuple[np.ndarray, int]:
    """Damped Newton iteration on the log mole fractions

    Args:
        y0:         Starting log mole fractions, shape (n, 10).
        rhs:        Right-hand sides of the equilibrium relations, shape (n, 6).
        rows:       Element-ratio rows, shape (n, 3, 10).
        tol:        Convergence threshold on the max-norm of the residual.
        max_iter:   Iteration limit.

    Returns:
        Converged log mole fractions and the number of iterations used.

    Raises:
        NoConvergence: A sample is still above `tol` after `max_iter` iterations.
    """
    y = y0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        f = _residual(y, rhs, rows)
    norm = np.abs(f).max(axis=1)
    active = norm >= tol
    iteration = 0

    while active.any():
        if iteration >= max_iter:
            raise NoConvergence(iteration, float(norm[active].max()))
        iteration += 1
        idx = np.nonzero(active)[0]
        ys, rs, ws = y[idx], rhs[idx], rows[idx]

        jac = _jacobian(ys, ws)
        dy = np.linalg.solve(jac, -f[idx][..., None])[..., 0]
        scale = np.maximum(1.0, np.abs(dy).max(axis=1) / MAX_LOG_STEP)
        dy /= scale[:, None]

        # Halve the step while the residual grows
        lam = np.ones(idx.size)
        for _ in range(MAX_HALVINGS):
            y_try = ys + lam[:, None] * dy
            with np.errstate(over="ignore", invalid="ignore"):
                f_try = _residual(y_try, rs, ws)
            n_try = np.abs(f_try).max(axis=1)
            n_try = np.where(np.isfinite(n_try), n_try, np.inf)
            worse = n_try > norm[idx]
            if not worse.any():
                break
            lam = np.where(worse, 0.5 * lam, lam)

        y[idx], f[idx], norm[idx] = y_try, f_try, n_try
        active = norm >= tol

    return y, iteration


# Public ----------------------------------------------------------------------
def _validate(temp: np.ndarray, pressure: np.ndarray, phi: np.ndarray) -> None:
    if np.any(temp < 600.0) or np.any(temp > 4000.0):
        raise ValueError("equilibrium temperature must be in [600, 4000] K")
    if np.any(pressure < 1.0e4) or np.any(pressure > 3.0e7):
        raise ValueError("equilibrium pressure must be in [1e4, 3e7] Pa")
    if np.any(phi <= 0.0) or np.any(phi > 2.0):
        raise ValueError("equivalence ratio must be in (0, 2]")


def equilibrium_composition(
    temp,
    pressure,
    phi,
    fuel: FuelSpec = ISO_OCTANE,
    initial: Optional[SpeciesSet] = None,
    table: Optional[ThermoTable] = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> SpeciesSet:
    """Equilibrium mole fractions of the combustion products

    Below 1000 K the complete-combustion composition is returned without
    iterating.

    Args:
        temp:       Temperature (K), in [600, 4000].
        pressure:   Pressure (Pa), in [1e4, 3e7].
        phi:        Equivalence ratio, in (0, 2].
        fuel:       Fuel molecule.
        initial:    Previous solution to start from, same batch shape.
        table:      Thermochemistry table.
        tol:        Max residual at convergence.
        max_iter:   Newton iteration limit.

    Raises:
        NoConvergence: The Newton iteration did not converge.
    """
    table = table or load_thermo_table()
    scalar = all(np.ndim(v) == 0 for v in (temp, pressure, phi))
    temp, pressure, phi = (
        np.atleast_1d(v).astype(float) for v in np.broadcast_arrays(temp, pressure, phi)
    )
    _validate(temp, pressure, phi)

    x = complete_combustion(phi, temp, fuel, table).mole_fractions
    iterations = 0
    hot = temp >= COMPLETE_COMBUSTION_TEMP
    if hot.any():
        idx = np.nonzero(hot)[0]
        rhs = reaction_rhs(table, temp[idx], pressure[idx])
        rows = _ratio_rows(phi[idx], fuel)
        if initial is not None:
            start = np.atleast_2d(initial.mole_fractions)[idx]
            y0 = np.log(np.maximum(start, FLOOR))
        else:
            y0 = initial_log_fractions(phi[idx], temp[idx], rhs, fuel, table)
        y, iterations = solve_log_fractions(y0, rhs, rows, tol=tol, max_iter=max_iter)
        x[idx] = np.exp(y)

    if scalar:
        x = x[0]
    return SpeciesSet(x, iterations)


def nitrogen_atom_fraction(
    eq: SpeciesSet, temp, pressure, table: Optional[ThermoTable] = None
) -> np.ndarray:
    """Mole fraction of atomic N in equilibrium with the N2 of `eq` (N2 = 2N)"""
    table = table or load_thermo_table()
    g = table.gibbs_rt(temp, ("N", "N2"))
    log_k = -(2.0 * g[..., 0] - g[..., 1])
    with np.errstate(divide="ignore"):
        y_n2 = np.log(eq["N2"])
    return np.exp(0.5 * (log_k - np.log(np.asarray(pressure) / P_REF) + y_n2))
