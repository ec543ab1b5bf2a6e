"""Slider-crank kinematics

Crank angles are in degrees, 0 is firing TDC. Derivatives are per degree.
"""

import math
from typing import Union

import numpy as np

from cyclenet.core.engine.types import EngineGeometry

ArrayLike = Union[float, np.ndarray]


def cylinder_volume(geom: EngineGeometry, theta: ArrayLike) -> ArrayLike:
    """Instantaneous volume of one cylinder

    V = Vc [1 + (CR - 1)/2 (R + 1 - cos θ - sqrt(R² - sin² θ))]

    Grouped as (1 - cos θ) + (R - sqrt(R² - sin² θ)) so both terms vanish
    exactly at TDC.
    """
    th = np.deg2rad(theta)
    r = geom.rod_ratio
    sin = np.sin(th)
    stroke_term = (1.0 - np.cos(th)) + (r - np.sqrt(r * r - sin * sin))
    return geom.clearance_volume * (1.0 + 0.5 * (geom.compression_ratio - 1.0) * stroke_term)


def volume_derivative(geom: EngineGeometry, theta: ArrayLike) -> ArrayLike:
    """dV/dθ of one cylinder (m³ per CAD)"""
    th = np.deg2rad(theta)
    r = geom.rod_ratio
    sin = np.sin(th)
    cos = np.cos(th)
    dv_drad = (
        geom.clearance_volume
        * 0.5
        * (geom.compression_ratio - 1.0)
        * sin
        * (1.0 + cos / np.sqrt(r * r - sin * sin))
    )
    return dv_drad * (math.pi / 180.0)


def surface_area(geom: EngineGeometry, volume: ArrayLike) -> ArrayLike:
    """Heat-transfer area: cylinder head, piston crown and exposed liner"""
    return 2.0 * geom.piston_area + 4.0 * volume / geom.bore


def mean_piston_speed(geom: EngineGeometry, rpm: ArrayLike) -> ArrayLike:
    return 2.0 * geom.stroke * rpm / 60.0
