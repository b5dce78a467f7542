"""
Physical scene shared by every experiment: targets, link budget, antenna gain
and thermal noise. Config-boundary units (dBm, dBi) are converted here once;
everything downstream is linear SI.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

from .errors import DomainError

SPEED_OF_LIGHT = constants.speed_of_light
BOLTZMANN = constants.Boltzmann
REFERENCE_TEMPERATURE_K = 290.0


def db_to_linear(value_db: float) -> float:
    """Converts a power ratio in dB to linear"""
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    """Converts a linear power ratio to dB; zero maps to -inf"""
    with np.errstate(divide='ignore'):
        return float(10.0 * np.log10(value))


def dbm_to_watts(value_dbm: float) -> float:
    return db_to_linear(value_dbm - 30.0)


def watts_to_dbm(value_w: float) -> float:
    return linear_to_db(value_w) + 30.0


@dataclass(frozen=True)
class Target:
    """
    A point target.

    Args:
        range_m: Distance to the radar
        radial_velocity_mps: Positive when receding
        rcs_m2: Radar cross section
        phase_rad: Reflection phase of the complex gain
    """
    range_m: float
    radial_velocity_mps: float = 0.0
    rcs_m2: float = 1.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.range_m > 0:
            raise DomainError(f"target range must be positive, got {self.range_m}")
        if self.rcs_m2 < 0:
            raise DomainError(f"target RCS must be non-negative, got {self.rcs_m2}")

    @property
    def delay_s(self) -> float:
        """Round-trip delay tau = 2R/c"""
        return 2.0 * self.range_m / SPEED_OF_LIGHT

    @property
    def doppler(self) -> float:
        """Dimensionless Doppler nu = 2v/c"""
        return 2.0 * self.radial_velocity_mps / SPEED_OF_LIGHT


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, combined antenna gain and wavelength, all linear"""
    tx_power_w: float
    combined_gain: float
    wavelength_m: float

    def __post_init__(self):
        if not self.tx_power_w > 0:
            raise DomainError(f"transmit power must be positive, got {self.tx_power_w} W")
        if self.combined_gain < 1:
            raise DomainError(f"combined antenna gain must be >= 1, got {self.combined_gain}")
        if not self.wavelength_m > 0:
            raise DomainError("wavelength must be positive")

    @classmethod
    def from_config(cls, tx_power_dbm: float, combined_gain_dbi: float, carrier_hz: float) -> 'LinkBudget':
        """Builds a budget from dBm/dBi values and a carrier frequency"""
        if not carrier_hz > 0:
            raise DomainError("carrier frequency must be positive")
        return cls(
            tx_power_w=dbm_to_watts(tx_power_dbm),
            combined_gain=db_to_linear(combined_gain_dbi),
            wavelength_m=SPEED_OF_LIGHT / carrier_hz,
        )

    def scaled(self, tx_power_w: float) -> 'LinkBudget':
        return LinkBudget(tx_power_w, self.combined_gain, self.wavelength_m)


@dataclass(frozen=True)
class NoiseConfig:
    """Complex-sample noise variance and the seed of its generator"""
    variance_w: float = 0.0
    rng_seed: Optional[int] = 0

    def __post_init__(self):
        if self.variance_w < 0:
            raise DomainError(f"noise variance must be non-negative, got {self.variance_w}")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


def target_power_gain(link: LinkBudget, target: Target) -> float:
    """
    Radar-equation power gain of a target echo.

    Returns:
        P * G * sigma * lambda^2 / ((4 pi)^3 d^4)
    """
    d = target.range_m
    if not d > 0:
        raise DomainError("target range must be positive")
    return (link.tx_power_w * link.combined_gain * target.rcs_m2 * link.wavelength_m ** 2
            / ((4.0 * np.pi) ** 3 * d ** 4))


def interferer_power_gain(link: LinkBudget, distance_m: float) -> float:
    """
    One-way Friis power gain of a direct interferer at distance r.

    Returns:
        P * G * lambda^2 / ((4 pi)^2 r^2)
    """
    if not distance_m > 0:
        raise DomainError(f"interferer distance must be positive, got {distance_m}")
    return link.tx_power_w * link.combined_gain * link.wavelength_m ** 2 / ((4.0 * np.pi) ** 2 * distance_m ** 2)


def fov_antenna_gain(elevation_beamwidth_rad: float, azimuth_beamwidth_rad: float) -> float:
    """Rectangular-FOV antenna gain 4 pi / (phi theta)"""
    for name, width in (("elevation", elevation_beamwidth_rad), ("azimuth", azimuth_beamwidth_rad)):
        if not 0 < width <= 2 * np.pi:
            raise DomainError(f"{name} beamwidth must lie in (0, 2pi], got {width}")
    return 4.0 * np.pi / (elevation_beamwidth_rad * azimuth_beamwidth_rad)


def thermal_noise_power(bandwidth_hz: float, noise_figure_db: float = 10.0) -> float:
    """Receiver noise power k T0 B F"""
    if not bandwidth_hz > 0:
        raise DomainError("noise bandwidth must be positive")
    return BOLTZMANN * REFERENCE_TEMPERATURE_K * bandwidth_hz * db_to_linear(noise_figure_db)
