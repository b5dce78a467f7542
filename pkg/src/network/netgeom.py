"""
Network interference on a multi-lane highway.

Interfering vehicles in each lane form a 1-D Poisson point process of
intensity 1/Delta. A radar at longitudinal offset x in a lane l lanes away is
at distance r = sqrt((l R)^2 + x^2) and interferes only once it is inside both
fields of view, i.e. for x >= l R / tan(theta/2). Averaging the Friis sum over
the process gives

    E{I(l)} = P G lambda^2 / (4 pi)^2 * f / Delta * theta / (2 l R)    (l != 0)
    E{I(0)} = P G lambda^2 / (4 pi)^2 * f / Delta^2                    (own lane, cutoff at Delta)
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from ..enums import TravelDirection
from ..errors import DomainError
from ..radar.fmcw import ChirpConfig
from ..radar.interference import interference_probability
from ..scenario import (LinkBudget, Target, target_power_gain, thermal_noise_power)

logger = logging.getLogger(__name__)

MC_CHUNK_POINTS = 2_000_000


@dataclass(frozen=True)
class HighwayScenario:
    """
    Args:
        num_lanes: Lanes on the highway, indexed 0 .. L-1
        lane_spacing_m: Lateral distance R between adjacent lanes
        mean_spacing_m: Mean vehicle spacing Delta within a lane
        fov_forward_rad: Azimuth FOV of forward-looking radars
        fov_backward_rad: Azimuth FOV of rear-looking radars
        radar: Waveform shared by all radars
        link: Link budget shared by all radars
        target: The victim's target
        victim_lane: Lane of the victim vehicle
        same_direction_lanes: Lanes 0 .. n-1 travel with the victim, the rest oncoming
        victim_facing_backward: The victim radar looks rearwards
        noise_figure_db: Receiver noise figure
    """
    num_lanes: int
    lane_spacing_m: float
    mean_spacing_m: float
    fov_forward_rad: float
    fov_backward_rad: float
    radar: ChirpConfig
    link: LinkBudget
    target: Target
    victim_lane: int = 0
    same_direction_lanes: Optional[int] = None
    victim_facing_backward: bool = True
    noise_figure_db: float = 10.0

    def __post_init__(self):
        if self.num_lanes < 1:
            raise DomainError("a highway needs at least one lane")
        if not self.mean_spacing_m > 0:
            raise DomainError("mean vehicle spacing must be positive")
        if not self.lane_spacing_m > 0:
            raise DomainError("lane spacing must be positive")
        for fov in (self.fov_forward_rad, self.fov_backward_rad):
            if not 0 < fov < np.pi:
                raise DomainError("fields of view must lie in (0, pi)")
        if not 0 <= self.victim_lane < self.num_lanes:
            raise DomainError("victim lane outside the highway")
        if self.same_direction_lanes is None:
            object.__setattr__(self, 'same_direction_lanes', max(1, self.num_lanes // 2))

    @property
    def theta_p(self) -> float:
        return min(self.fov_forward_rad, self.fov_backward_rad)

    @property
    def interference_probability(self) -> float:
        return interference_probability(self.radar.duty_cycle, self.radar.slope,
                                        self.radar.tau_max_s, self.radar.bandwidth_hz)

    @property
    def friis_constant(self) -> float:
        """P G lambda^2 / (4 pi)^2"""
        return (self.link.tx_power_w * self.link.combined_gain * self.link.wavelength_m ** 2
                / (4.0 * np.pi) ** 2)

    def direction(self, lane: int) -> TravelDirection:
        return TravelDirection.SAME if lane < self.same_direction_lanes else TravelDirection.ONCOMING

    def lane_fov(self, lane: int) -> float:
        """
        Effective azimuth aperture between the victim radar and the radars facing
        it from a lane. Same-direction vehicles face the victim with the radar
        opposite to the victim's; oncoming vehicles with the same-facing one.
        """
        victim = self.fov_backward_rad if self.victim_facing_backward else self.fov_forward_rad
        victim_opposite = self.fov_forward_rad if self.victim_facing_backward else self.fov_backward_rad
        facing = victim_opposite if self.direction(lane) is TravelDirection.SAME else victim
        return min(victim, facing)

    def with_spacing(self, mean_spacing_m: float) -> 'HighwayScenario':
        return replace(self, mean_spacing_m=mean_spacing_m)


def sample_ppp_lane(mean_spacing_m: float, extent_m: float, rng: np.random.Generator) -> np.ndarray:
    """Positions of a 1-D PPP of intensity 1/Delta on [0, extent)"""
    if not extent_m > 0:
        raise DomainError("extent must be positive")
    if not mean_spacing_m > 0:
        raise DomainError("mean spacing must be positive")
    count = rng.poisson(extent_m / mean_spacing_m)
    return np.sort(rng.uniform(0.0, extent_m, size=count))


def expected_lane_interference(scn: HighwayScenario, lane_offset: int, theta_rad: Optional[float] = None) -> float:
    """
    Closed-form mean interference power from the lane lane_offset lanes away.

    Args:
        lane_offset: Signed lane index relative to the victim; 0 is the own lane
        theta_rad: Effective FOV; defaults to theta_p
    """
    theta = scn.theta_p if theta_rad is None else theta_rad
    f = scn.interference_probability
    delta = scn.mean_spacing_m
    l = abs(int(lane_offset))
    if l == 0:
        return scn.friis_constant * f / delta ** 2
    return scn.friis_constant * f / delta * theta / (2.0 * l * scn.lane_spacing_m)


def truncation_extent(scn: HighwayScenario, lane_offset: int, tolerance: float = 1e-3,
                      theta_rad: Optional[float] = None) -> float:
    """Road extent X beyond which the neglected tail is a `tolerance` fraction of the mean"""
    theta = scn.theta_p if theta_rad is None else theta_rad
    l = abs(int(lane_offset))
    if l == 0:
        return scn.mean_spacing_m / tolerance
    return l * scn.lane_spacing_m / np.tan(tolerance * theta / 2.0)


def monte_carlo_aggregate(scn: HighwayScenario, lane_offset: int, trials: int, rng: np.random.Generator,
                          tolerance: float = 1e-3, theta_rad: Optional[float] = None) -> float:
    """
    Empirical mean of the per-realization Friis sum over PPP draws.

    Interferers start at the FOV cutoff l R / tan(theta/2), or at Delta in the
    own lane, and the road is truncated at truncation_extent.
    """
    if trials < 1:
        raise DomainError("at least one trial is required")
    theta = scn.theta_p if theta_rad is None else theta_rad
    l = abs(int(lane_offset))
    a = l * scn.lane_spacing_m
    start = scn.mean_spacing_m if l == 0 else a / np.tan(theta / 2.0)
    stop = truncation_extent(scn, l, tolerance, theta)
    extent = stop - start
    mean_count = extent / scn.mean_spacing_m
    chunk = max(1, int(MC_CHUNK_POINTS // max(mean_count, 1.0)))

    total = 0.0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        counts = rng.poisson(mean_count, size=n)
        x = start + rng.uniform(0.0, extent, size=int(counts.sum()))
        total += float(np.sum(1.0 / (a * a + x * x)))
        done += n
    mean = scn.friis_constant * scn.interference_probability * total / trials
    logger.debug("MC lane %d: %d trials, extent %.0f m, mean %.3e W", l, trials, extent, mean)
    return mean


@dataclass
class SinrCurve:
    """Per-spacing power budget, all in watts except the SINR ratio"""
    delta_m: np.ndarray
    signal_w: np.ndarray
    noise_w: np.ndarray
    interference_w: np.ndarray
    passing_w: np.ndarray
    oncoming_w: np.ndarray

    @property
    def sinr(self) -> np.ndarray:
        return self.signal_w / (self.noise_w + self.interference_w)

    @property
    def snr(self) -> np.ndarray:
        return self.signal_w / self.noise_w


def lane_contributions(scn: HighwayScenario) -> List[float]:
    """Expected interference from every lane, indexed by lane number"""
    return [expected_lane_interference(scn, lane - scn.victim_lane, scn.lane_fov(lane))
            for lane in range(scn.num_lanes)]


def sinr_curve(scn: HighwayScenario, delta_grid: Sequence[float]) -> SinrCurve:
    """Signal, noise and lane-summed interference against mean vehicle spacing"""
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.size == 0:
        raise DomainError("spacing grid is empty")
    signal = np.full(deltas.shape, target_power_gain(scn.link, scn.target))
    noise = np.full(deltas.shape, thermal_noise_power(scn.radar.interest_bandwidth_hz, scn.noise_figure_db))
    passing = np.zeros_like(deltas)
    oncoming = np.zeros_like(deltas)
    for i, delta in enumerate(deltas):
        scenario = scn.with_spacing(float(delta))
        for lane, power in enumerate(lane_contributions(scenario)):
            if scenario.direction(lane) is TravelDirection.SAME:
                passing[i] += power
            else:
                oncoming[i] += power
    return SinrCurve(deltas, signal, noise, passing + oncoming, passing, oncoming)


def detectable_range(scn: HighwayScenario, sinr_threshold_db: float, rcs_m2: Optional[float] = None,
                     max_range_m: Optional[float] = None) -> float:
    """
    Largest target distance whose SINR stays above the threshold.

    Returns 0 if even the closest target (1 m) is below it and max_range_m if
    the whole radar range is above it.
    """
    interference = sum(lane_contributions(scn))
    noise = thermal_noise_power(scn.radar.interest_bandwidth_hz, scn.noise_figure_db)
    rcs = scn.target.rcs_m2 if rcs_m2 is None else rcs_m2
    limit = scn.radar.max_range_m if max_range_m is None else max_range_m
    threshold = 10.0 ** (sinr_threshold_db / 10.0)

    def margin(d: float) -> float:
        target = replace(scn.target, range_m=d, rcs_m2=rcs)
        return np.log(target_power_gain(scn.link, target) / (noise + interference) / threshold)

    if margin(1.0) < 0:
        return 0.0
    if margin(limit) >= 0:
        return limit
    return float(optimize.brentq(margin, 1.0, limit))
