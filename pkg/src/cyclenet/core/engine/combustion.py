"""Heat release and wall heat transfer closures"""

from typing import Union

import numpy as np

from cyclenet.core.engine.kinematics import mean_piston_speed, surface_area
from cyclenet.core.engine.types import CombustionSpec, EngineGeometry

ArrayLike = Union[float, np.ndarray]


# Wiebe -----------------------------------------------------------------------
def burn_fraction(spec: CombustionSpec, theta: ArrayLike) -> ArrayLike:
    """Cumulative mass fraction burned

    0 before the spark, 1 - exp(-a z^(m+1)) with z = (θ - spark)/duration
    during combustion, held at its end value afterwards.
    """
    z = np.clip((np.asarray(theta, dtype=float) - spec.spark_deg) / spec.duration_deg, 0.0, 1.0)
    return 1.0 - np.exp(-spec.wiebe_a * z ** (spec.wiebe_m + 1.0))


def burn_rate(spec: CombustionSpec, theta: ArrayLike) -> ArrayLike:
    """dx_b/dθ (per CAD), zero outside [spark, spark + duration]"""
    theta = np.asarray(theta, dtype=float)
    z = (theta - spec.spark_deg) / spec.duration_deg
    inside = (z >= 0.0) & (z <= 1.0)
    zc = np.clip(z, 0.0, 1.0)
    a, m = spec.wiebe_a, spec.wiebe_m
    rate = a * (m + 1.0) / spec.duration_deg * zc**m * np.exp(-a * zc ** (m + 1.0))
    return np.where(inside, rate, 0.0)


def _burn_rate_inside(spec: CombustionSpec, theta: ArrayLike) -> ArrayLike:
    # Rate formula without the window test, for steps known to lie inside it
    zc = np.clip((theta - spec.spark_deg) / spec.duration_deg, 0.0, 1.0)
    a, m = spec.wiebe_a, spec.wiebe_m
    return a * (m + 1.0) / spec.duration_deg * zc**m * np.exp(-a * zc ** (m + 1.0))


# Woschni ---------------------------------------------------------------------
def heat_transfer_coefficient(
    geom: EngineGeometry,
    pressure: ArrayLike,
    temp: ArrayLike,
    rpm: ArrayLike,
    woschni_c: float,
) -> ArrayLike:
    """Convective coefficient h = C b^-0.2 P^0.8 T^-0.55 w^0.8 (W/(m² K))

    P in kPa, w is the mean piston speed.
    """
    w = mean_piston_speed(geom, rpm)
    p_kpa = np.maximum(pressure, 0.0) / 1000.0
    t = np.maximum(temp, 1.0)
    return woschni_c * geom.bore**-0.2 * p_kpa**0.8 * t**-0.55 * w**0.8


def heat_loss_rate(
    geom: EngineGeometry,
    pressure: ArrayLike,
    temp: ArrayLike,
    volume: ArrayLike,
    rpm: ArrayLike,
    wall_temp: ArrayLike,
    woschni_c: float,
) -> ArrayLike:
    """Wall heat loss per crank degree (J/CAD)

    Args:
        geom:       Cylinder geometry.
        pressure:   Cylinder pressure (Pa).
        temp:       Mean charge temperature (K).
        volume:     Cylinder volume (m³), sets the exposed liner area.
        rpm:        Engine speed, one degree lasts 1/(6 rpm) seconds.
        wall_temp:  Wall temperature (K).
        woschni_c:  Correlation constant, 0 disables the loss.
    """
    if woschni_c == 0.0:
        return np.zeros(np.broadcast(pressure, temp, rpm).shape)
    h = heat_transfer_coefficient(geom, pressure, temp, rpm, woschni_c)
    return h * surface_area(geom, volume) * (temp - wall_temp) / (6.0 * rpm)
