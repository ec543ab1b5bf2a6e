"""
Reference equilibrium by Gibbs energy minimisation with element potentials

At the minimum of G subject to the element balances, every species obeys

    ln x_j = sum_k A_jk π_k - g_j/RT - ln(P/P°)

so the unknowns reduce to the four element potentials π and the total moles
ln N. The resulting five equations are handed to `scipy.optimize.root`. This
formulation shares nothing with the Newton system of `equilibrium` besides the
thermochemistry table, which makes it usable as a cross-check.
"""

from typing import Optional

import numpy as np
from scipy import optimize

from cyclenet.core.emissions.equilibrium import (
    complete_combustion,
    initial_log_fractions,
    reaction_rhs,
)
from cyclenet.core.emissions.thermo import ELEMENT_MATRIX, P_REF, ThermoTable, load_thermo_table
from cyclenet.core.engine.types import ISO_OCTANE, FuelSpec
from cyclenet.core.errors import NoConvergence


def element_potential_composition(
    temp: float,
    pressure: float,
    phi: float,
    fuel: FuelSpec = ISO_OCTANE,
    table: Optional[ThermoTable] = None,
) -> np.ndarray:
    """Equilibrium mole fractions of a single state, shape (10,)

    Raises:
        NoConvergence: The root finder failed.
    """
    table = table or load_thermo_table()
    g = table.gibbs_rt(temp)
    log_p = np.log(pressure / P_REF)

    # Element totals per mole of complete-combustion products
    x_cc = complete_combustion(phi, temp, fuel, table).mole_fractions
    b = x_cc @ ELEMENT_MATRIX

    # Potentials fitted to a rough composition
    phi_arr = np.array([phi], dtype=float)
    rhs = reaction_rhs(table, np.array([temp]), np.array([pressure]))
    y0 = initial_log_fractions(phi_arr, np.array([temp]), rhs, fuel, table)[0]
    pi0, *_ = np.linalg.lstsq(ELEMENT_MATRIX, y0 + g + log_p, rcond=None)
    u0 = np.concatenate([pi0, [0.0]])

    def _fractions(u: np.ndarray) -> np.ndarray:
        return np.exp(np.minimum(ELEMENT_MATRIX @ u[:4] - g - log_p, 50.0))

    def _equations(u: np.ndarray) -> np.ndarray:
        x = _fractions(u)
        total = np.exp(u[4])
        return np.concatenate([total * (x @ ELEMENT_MATRIX) / b - 1.0, [x.sum() - 1.0]])

    def _jacobian(u: np.ndarray) -> np.ndarray:
        x = _fractions(u)
        total = np.exp(u[4])
        jac = np.zeros((5, 5))
        weighted = ELEMENT_MATRIX * x[:, None]
        jac[:4, :4] = total * (ELEMENT_MATRIX.T @ weighted) / b[:, None]
        jac[:4, 4] = total * (x @ ELEMENT_MATRIX) / b
        jac[4, :4] = x @ ELEMENT_MATRIX
        return jac

    result = optimize.root(
        _equations, u0, jac=_jacobian, method="hybr", options={"xtol": 1e-14, "maxfev": 2000}
    )
    residual = float(np.abs(_equations(result.x)).max())
    if not result.success and residual > 1e-10:
        raise NoConvergence(int(result.nfev), residual)
    return _fractions(result.x)
