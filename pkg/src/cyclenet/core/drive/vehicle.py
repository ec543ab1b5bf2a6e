import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class VehicleConfig:
    """Five-speed gear map of a mid-size passenger car

    Attributes:
        gear_ratios:    Gearbox ratios, first to fifth.
        final_drive:    Differential ratio.
        wheel_radius:   Rolling radius (m).
        idle_rpm:       Lowest engine speed.
        upshift_speeds: Vehicle speeds (m/s) where gears 2 to 5 engage.
    """

    gear_ratios: Tuple[float, ...] = (3.55, 1.95, 1.30, 0.97, 0.78)
    final_drive: float = 4.1
    wheel_radius: float = 0.31
    idle_rpm: float = 800.0
    upshift_speeds: Tuple[float, ...] = (4.5, 9.0, 14.0, 19.5)

    def __post_init__(self) -> None:
        ratios = np.asarray(self.gear_ratios, dtype=float)
        speeds = np.asarray(self.upshift_speeds, dtype=float)
        if ratios.size != 5 or speeds.size != 4:
            raise ValueError("need 5 gear ratios and 4 upshift speeds")
        if np.any(np.diff(ratios) >= 0.0) or ratios[-1] <= 0.0:
            raise ValueError("gear ratios must be positive and strictly decreasing")
        if np.any(np.diff(speeds) <= 0.0) or speeds[0] <= 0.0:
            raise ValueError("upshift speeds must be positive and strictly increasing")
        if self.final_drive <= 0.0 or self.wheel_radius <= 0.0 or self.idle_rpm <= 0.0:
            raise ValueError("final_drive, wheel_radius and idle_rpm must be positive")


def select_gear(vehicle: VehicleConfig, speed: ArrayLike) -> ArrayLike:
    """Zero-based gear index, the next gear engages exactly at its threshold"""
    return np.searchsorted(np.asarray(vehicle.upshift_speeds), speed, side="right")


def gear_ratio(vehicle: VehicleConfig, speed: ArrayLike) -> ArrayLike:
    return np.asarray(vehicle.gear_ratios)[select_gear(vehicle, speed)]


def rpm_from_speed(vehicle: VehicleConfig, speed: ArrayLike) -> ArrayLike:
    """Engine speed from vehicle speed through the gear map, clamped at idle

    Args:
        vehicle:    Gear map.
        speed:      Vehicle speed (m/s), >= 0.
    """
    speed = np.asarray(speed, dtype=float)
    if np.any(speed < 0.0):
        raise ValueError("vehicle speed must be non-negative")
    wheel_rpm = speed / (2.0 * math.pi * vehicle.wheel_radius) * 60.0
    rpm = wheel_rpm * gear_ratio(vehicle, speed) * vehicle.final_drive
    rpm = np.maximum(vehicle.idle_rpm, rpm)
    return float(rpm) if rpm.ndim == 0 else rpm
