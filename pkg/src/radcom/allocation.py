"""Vehicle count and orthogonal time-frequency tiling for OFDM RadCom."""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..enums import OfdmScheme
from ..errors import CapacityError, DomainError, SingularFisherError
from .ofdm import AccuracySpec, SteppedOfdmConfig, crb

logger = logging.getLogger(__name__)

ADC_BANDWIDTH_HZ = 50e6
MAX_FRAMES = 20
MAX_SYMBOLS = 512


@dataclass(frozen=True)
class ResourceBudget:
    """Time-frequency block shared by all vehicles"""
    total_bandwidth_hz: float = 1e9
    total_time_s: float = 30e-3

    def __post_init__(self):
        if not (self.total_bandwidth_hz > 0 and self.total_time_s > 0):
            raise DomainError("budget bandwidth and time must be positive")

    def scaled(self, bandwidth: float = 1.0, time: float = 1.0) -> 'ResourceBudget':
        return ResourceBudget(self.total_bandwidth_hz * bandwidth, self.total_time_s * time)


@dataclass(frozen=True)
class VehicleCount:
    """
    Best configuration found for one scheme.

    binding names the constraint that is tight (or, when count is 0, the one
    that could not be met by any searched configuration).
    """
    scheme: OfdmScheme
    count: int
    config: Optional[SteppedOfdmConfig] = None
    std_range_m: float = float('nan')
    std_velocity_mps: float = float('nan')
    binding: str = ''


def carrier_count(config: SteppedOfdmConfig, budget: ResourceBudget) -> int:
    """Number of N*df wide carriers in the budget"""
    return int(np.floor(budget.total_bandwidth_hz / config.frame_bandwidth_hz + 1e-9))


def slot_count(config: SteppedOfdmConfig, budget: ResourceBudget) -> int:
    """Number of L-symbol slots in the budget"""
    return int(np.floor(budget.total_time_s / config.frame_s + 1e-9))


def tiled_count(config: SteppedOfdmConfig, budget: ResourceBudget) -> int:
    """
    Vehicles fitting when every vehicle hops over M contiguous carriers in M
    consecutive slots.

    The carriers split into C // M groups; within a group vehicles start one
    slot apart, so a group holds S - M + 1 of them.
    """
    groups = carrier_count(config, budget) // config.num_frames
    slots = slot_count(config, budget)
    if groups == 0 or slots < config.num_frames:
        return 0
    return groups * (slots - config.num_frames + 1)


def _bounds(config: SteppedOfdmConfig, spec: AccuracySpec) -> Tuple[float, float]:
    try:
        return crb(config, spec.subcarrier_snr_db)
    except SingularFisherError:
        return float('inf'), float('inf')


def _binding(std_range: float, std_velocity: float, spec: AccuracySpec) -> str:
    r = std_range / spec.max_range_std_m
    v = std_velocity / spec.max_velocity_std_mps
    if r > 1 and v > 1:
        return 'range+velocity'
    return 'range' if r >= v else 'velocity'


def _scheme_template(scheme: OfdmScheme, template: SteppedOfdmConfig, budget: ResourceBudget,
                     adc_bandwidth_hz: float) -> SteppedOfdmConfig:
    if scheme is OfdmScheme.WIDEBAND:
        width = budget.total_bandwidth_hz
    else:
        width = adc_bandwidth_hz
    n = int(np.floor(width / template.subcarrier_spacing_hz + 1e-9))
    if n < 1:
        raise DomainError(f"{scheme.value}: band of {width:.4g} Hz holds no subcarrier")
    return replace(template, num_subcarriers=n, num_frames=1, symbols_per_frame=1,
                   total_bandwidth_hz=None, total_time_s=None)


def max_vehicles(scheme: OfdmScheme, template: SteppedOfdmConfig, budget: ResourceBudget,
                 spec: AccuracySpec, adc_bandwidth_hz: float = ADC_BANDWIDTH_HZ,
                 max_frames: int = MAX_FRAMES, max_symbols: int = MAX_SYMBOLS) -> VehicleCount:
    """
    Largest number of vehicles that each meet the accuracy spec.

    For every hop count M the scheme allows, the smallest L whose CRB meets
    the accuracy target gives that M's best count; the best M wins. Stepped searches
    M in 1..max_frames with N*df at the ADC bandwidth, narrowband fixes M = 1,
    and wideband fixes M = 1 with N*df spanning the whole budget.

    Returns:
        The count and configuration; count 0 with the failing constraint if no
        searched configuration is accurate enough
    """
    base = _scheme_template(scheme, template, budget, adc_bandwidth_hz)
    frames = range(1, max_frames + 1) if scheme is OfdmScheme.STEPPED else range(1, 2)
    best = VehicleCount(scheme, 0)
    closest: Optional[Tuple[float, float]] = None

    for m in frames:
        if m * base.frame_bandwidth_hz > budget.total_bandwidth_hz * (1 + 1e-12):
            break
        for l in range(1, max_symbols + 1):
            config = replace(base, num_frames=m, symbols_per_frame=l)
            if config.duration_s > budget.total_time_s:
                break
            std_r, std_v = _bounds(config, spec)
            if not spec.satisfied_by(std_r, std_v):
                closest = (std_r, std_v)
                continue
            count = tiled_count(config, budget)
            logger.debug("%s M=%d: L=%d meets the accuracy target, %d vehicles", scheme.value, m, l, count)
            if count > best.count:
                best = VehicleCount(scheme, count, config, std_r, std_v, _binding(std_r, std_v, spec))
            break

    if best.count == 0:
        std_r, std_v = closest if closest is not None else (float('inf'), float('inf'))
        binding = _binding(std_r, std_v, spec)
        logger.info("%s: no configuration meets %.3g m / %.3g m/s at %.1f dB (binding: %s)",
                    scheme.value, spec.max_range_std_m, spec.max_velocity_std_mps,
                    spec.subcarrier_snr_db, binding)
        return VehicleCount(scheme, 0, None, std_r, std_v, binding)
    return best


@dataclass(frozen=True)
class Tile:
    """One frame of one vehicle: a slot of L symbols on one carrier"""
    slot: int
    carrier: int
    start_s: float
    stop_s: float
    low_hz: float
    high_hz: float


@dataclass
class Allocation:
    config: SteppedOfdmConfig
    budget: ResourceBudget
    tiles: Dict[int, List[Tile]] = field(default_factory=dict)

    def resource_elements(self) -> Dict[Tuple[int, int], int]:
        """(slot, carrier) -> vehicle; raises if two vehicles share one"""
        owner: Dict[Tuple[int, int], int] = {}
        for vehicle, tiles in self.tiles.items():
            for tile in tiles:
                key = (tile.slot, tile.carrier)
                if key in owner:
                    raise CapacityError(f"vehicles {owner[key]} and {vehicle} share slot {key[0]} carrier {key[1]}")
                owner[key] = vehicle
        return owner


def allocate(n_vehicles: int, config: SteppedOfdmConfig, budget: ResourceBudget) -> Allocation:
    """
    Orthogonal tiling of the budget.

    Vehicle v sits in carrier group v mod G and starts at slot v // G. Its m-th
    frame goes out in slot start + m on carrier group * M + hop_order[m], so
    every vehicle keeps the contiguous band and the hop order its accuracy was
    checked with, and vehicles sharing a group never meet in one slot.

    Raises:
        CapacityError: more vehicles than the budget tiles
    """
    if n_vehicles < 0:
        raise DomainError("vehicle count must be non-negative")
    capacity = tiled_count(config, budget)
    if n_vehicles > capacity:
        raise CapacityError(f"{n_vehicles} vehicles requested, the budget tiles {capacity}")
    groups = max(carrier_count(config, budget) // config.num_frames, 1)
    hops = config.hop_order()
    allocation = Allocation(config, budget)
    for v in range(n_vehicles):
        start, group = divmod(v, groups)
        tiles = []
        for m in range(config.num_frames):
            slot = start + m
            carrier = group * config.num_frames + int(hops[m])
            low = config.base_carrier_hz + carrier * config.frame_bandwidth_hz
            tiles.append(Tile(slot, carrier, slot * config.frame_s, (slot + 1) * config.frame_s,
                              low, low + config.frame_bandwidth_hz))
        allocation.tiles[v] = tiles
    return allocation
