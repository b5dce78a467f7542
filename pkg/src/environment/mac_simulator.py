"""
Coordinated radar transmission over a CSMA control channel.

One radar frame T_f holds floor(1/u') burst slots of (K+1)T each, where the
extra chirp duration is left for the control exchange. Within a burst slot
the chirp start can be shifted by multiples of tau_max + 2*sync_bound: radars
whose starts differ by at least that much see each other's beat outside
[-B_s, 0]. Slot index s maps to burst s // offsets_per_chirp and offset
s % offsets_per_chirp. The radar band B is split into equal sub-bands.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import simpy

from ..agents.rcu import RcuState
from ..agents.vehicle import Vehicle, csma_broadcast, init_vehicle
from ..enums import EventKind
from ..errors import DomainError
from ..position import Position
from ..radar.fmcw import ChirpConfig
from ..radar.interference import InterfererSpec, in_band_fraction
from ..scenario import SPEED_OF_LIGHT
from ..seeding import Stream, derive_rng
from .control_channel import ControlChannel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameConfig:
    """
    Time-frequency resource grid shared by all radars.

    Args:
        frame_s: Frame duration T_f
        chirp_s: Chirp duration T
        chirps_per_frame: K chirps in one burst
        carrier_hz: Lowest radar frequency
        bandwidth_hz: Total radar band B, split into num_bands sub-bands
        interest_bandwidth_hz: ADC bandwidth B_s
        comm_bandwidth_hz: Control channel bandwidth B_c, placed above the radar band
        num_bands: Number of radar sub-bands
        sync_error_bound_s: Bound b of the uniform start-time error
        propagation_guard_s: Extra offset spacing for inter-radar propagation delay
    """
    frame_s: float
    chirp_s: float
    chirps_per_frame: int
    carrier_hz: float
    bandwidth_hz: float
    interest_bandwidth_hz: float
    comm_bandwidth_hz: float = 10e6
    num_bands: int = 1
    sync_error_bound_s: float = 1e-6
    propagation_guard_s: float = 0.0

    def __post_init__(self):
        if not (self.frame_s > 0 and self.chirp_s > 0 and self.chirps_per_frame >= 1):
            raise DomainError("frame, chirp duration and chirps per frame must be positive")
        if self.num_bands < 1:
            raise DomainError("at least one radar band is required")
        if self.comm_bandwidth_hz <= 0:
            raise DomainError("control channel bandwidth must be positive")
        if self.sync_error_bound_s < 0 or self.propagation_guard_s < 0:
            raise DomainError("sync bound and propagation guard must be non-negative")
        if self.modified_duty_cycle > 1 + 1e-9:
            raise DomainError(f"(K+1)T exceeds the frame: u'={self.modified_duty_cycle:.3f}")
        self.radar_config()

    @property
    def modified_duty_cycle(self) -> float:
        return (self.chirps_per_frame + 1) * self.chirp_s / self.frame_s

    @property
    def burst_slots(self) -> int:
        return int(np.floor(1.0 / self.modified_duty_cycle + 1e-9))

    @property
    def slot_duration_s(self) -> float:
        return (self.chirps_per_frame + 1) * self.chirp_s

    @property
    def band_width_hz(self) -> float:
        return self.bandwidth_hz / self.num_bands

    @property
    def tau_max_s(self) -> float:
        return self.interest_bandwidth_hz * self.chirp_s / self.band_width_hz

    @property
    def offset_spacing_s(self) -> float:
        return self.tau_max_s + 2 * self.sync_error_bound_s + self.propagation_guard_s

    @property
    def offsets_per_chirp(self) -> int:
        return max(1, int(np.floor(self.chirp_s / self.offset_spacing_s + 1e-9)))

    @property
    def num_slots(self) -> int:
        return self.burst_slots * self.offsets_per_chirp

    @property
    def capacity(self) -> int:
        return self.num_slots * self.num_bands

    @property
    def radar_bands(self) -> List[Tuple[float, float]]:
        edges = self.carrier_hz + self.band_width_hz * np.arange(self.num_bands + 1)
        return [(float(lo), float(hi)) for lo, hi in zip(edges[:-1], edges[1:])]

    @property
    def comm_band(self) -> Tuple[float, float]:
        top = self.carrier_hz + self.bandwidth_hz
        return (top, top + self.comm_bandwidth_hz)

    def burst_of(self, slot: int) -> int:
        return slot // self.offsets_per_chirp

    def slot_start(self, slot: int) -> float:
        """Nominal chirp-burst start of a slot, relative to the frame start"""
        if not 0 <= slot < self.num_slots:
            raise DomainError(f"slot {slot} outside 0..{self.num_slots - 1}")
        burst, offset = divmod(slot, self.offsets_per_chirp)
        return burst * self.slot_duration_s + offset * self.offset_spacing_s

    def radar_config(self, band: int = 0) -> ChirpConfig:
        """Waveform of a radar occupying one sub-band"""
        lo, _ = self.radar_bands[band]
        return ChirpConfig(carrier_hz=lo, bandwidth_hz=self.band_width_hz, chirp_s=self.chirp_s,
                           num_chirps=self.chirps_per_frame,
                           interest_bandwidth_hz=self.interest_bandwidth_hz,
                           duty_cycle=self.chirps_per_frame * self.chirp_s / self.frame_s,
                           frame_s=self.frame_s)


@dataclass(frozen=True)
class MacSettings:
    """
    Control-channel and placement parameters of a MAC run.

    Lanes below num_lanes // 2 travel towards +x, the others towards -x. A
    vehicle's first RCU faces its travel direction and a second one faces
    backwards. all_in_view skips the mutual field-of-view test.
    """
    radio_range_m: float = 400.0
    airtime_s: float = 100e-6
    cca_delay_s: float = 4e-6
    staleness_frames: int = 5
    rcus_per_vehicle: int = 1
    all_in_view: bool = False
    fov_rad: float = np.deg2rad(120.0)
    road_length_m: float = 200.0
    num_lanes: int = 4
    lane_spacing_m: float = 3.5

    def lane_of(self, position: Position) -> int:
        lane = int(round(position.y / self.lane_spacing_m))
        return min(max(lane, 0), self.num_lanes - 1)

    def facing_of(self, position: Position) -> float:
        """Travel direction of the lane a position lies in"""
        return 0.0 if self.lane_of(position) < self.num_lanes // 2 else float(np.pi)


@dataclass(frozen=True)
class TraceEvent:
    time: float
    node: int
    kind: EventKind
    payload: Any

    def line(self) -> str:
        return f"{self.time:.10e}\t{self.node}\t{self.kind.value}\t{self.payload}"


@dataclass
class MacRunResult:
    """Per-frame interference trajectories; entry k is measured after frame k"""
    frame_s: float
    f_coordinated: np.ndarray
    f_uncoordinated: np.ndarray
    trace: List[TraceEvent] = field(default_factory=list)
    persistent_conflicts: int = 0
    channel_stats: dict = field(default_factory=dict)

    @property
    def times_s(self) -> np.ndarray:
        return self.frame_s * np.arange(1, len(self.f_coordinated) + 1)


def apply_sync_error(states: Sequence[RcuState], frame: FrameConfig, rng: np.random.Generator,
                     bound_s: Optional[float] = None, errors: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Sets each RCU's start time to its slot start plus a uniform error in [-b, b].

    Args:
        states: RCUs to update in place
        frame: Resource grid
        rng: Source of the errors, ignored when errors is given
        bound_s: Overrides frame.sync_error_bound_s
        errors: Pre-drawn errors, one per state

    Returns:
        The start times
    """
    bound = frame.sync_error_bound_s if bound_s is None else bound_s
    if bound < 0:
        raise DomainError("sync error bound must be non-negative")
    if errors is None:
        errors = rng.uniform(-bound, bound, size=len(states)) if bound > 0 else np.zeros(len(states))
    for state, err in zip(states, errors):
        state.start_time = frame.slot_start(state.slot) + float(err)
    return np.array([s.start_time for s in states])


def chirp_collision(dt: float, frame: FrameConfig) -> bool:
    """True if a start-time difference puts one radar's beat inside the other's band"""
    a = np.mod(dt, frame.chirp_s)
    b = np.mod(-dt, frame.chirp_s)
    return bool(min(a, b) <= frame.tau_max_s)


def count_overlaps(states: Sequence[RcuState], frame: FrameConfig) -> int:
    """Same-band RCU pairs of different vehicles whose bursts overlap and whose chirps collide"""
    count = 0
    for i, v in enumerate(states):
        for w in states[i + 1:]:
            if v.vehicle_id == w.vehicle_id or v.band != w.band:
                continue
            if _burst_overlap(v.start_time, w.start_time, frame) > 0 and chirp_collision(w.start_time - v.start_time, frame):
                count += 1
    return count


def _burst_overlap(start_v: float, start_i: float, frame: FrameConfig) -> float:
    """Fraction of the victim burst during which the interferer bursts, frames repeating"""
    burst = frame.chirps_per_frame * frame.chirp_s
    total = 0.0
    for shift in (-frame.frame_s, 0.0, frame.frame_s):
        lo = max(start_v, start_i + shift)
        hi = min(start_v + burst, start_i + shift + burst)
        total += max(0.0, hi - lo)
    return min(1.0, total / burst)


def _mutually_visible(v: RcuState, w: RcuState) -> bool:
    return v.position.sees(w.position, v.facing_rad, v.fov_rad) and w.position.sees(v.position, w.facing_rad, w.fov_rad)


def pair_interference(victim: RcuState, intf: RcuState, frame: FrameConfig, all_in_view: bool = False) -> float:
    """Fraction of the victim's samples corrupted in-band by one interferer"""
    if victim.band != intf.band:
        return 0.0
    if not all_in_view and not _mutually_visible(victim, intf):
        return 0.0
    overlap = _burst_overlap(victim.start_time, intf.start_time, frame)
    if overlap == 0.0:
        return 0.0
    radar = frame.radar_config(victim.band)
    delay = victim.position.distance_to(intf.position) / SPEED_OF_LIGHT
    # equal slopes: the beat is constant, so it is out of band unless the lag is within tau_max
    if np.mod(delay + intf.start_time - victim.start_time, frame.chirp_s) > frame.tau_max_s * (1 + 1e-9):
        return 0.0
    spec = InterfererSpec.matching(radar, duty_cycle=1.0, frame_s=None, oneway_delay_s=delay,
                                   start_offset_s=float(np.mod(intf.start_time - victim.start_time, frame.chirp_s)))
    return overlap * in_band_fraction(radar, spec)


def measure_interference(states: Sequence[RcuState], frame: FrameConfig, all_in_view: bool = False) -> float:
    """
    Empirical interference probability: per victim the mean corrupted fraction
    over all other radars, then averaged over victims.
    """
    if len(states) < 2:
        return 0.0
    per_victim = []
    for v in states:
        others = [pair_interference(v, w, frame, all_in_view) for w in states if w is not v]
        per_victim.append(np.mean(others))
    return float(np.mean(per_victim))


class MacSimulator:
    """
    Runs the coordination protocol next to a fixed uncoordinated baseline.

    Both share the initial random assignment and the per-frame sync errors,
    so the trajectories form a paired comparison.
    """
    def __init__(self, frame: FrameConfig, num_vehicles: int, settings: MacSettings = MacSettings(),
                 master_seed: int = 0, positions: Optional[Sequence[Position]] = None):
        if num_vehicles < 1:
            raise DomainError("at least one vehicle is required")
        self.frame = frame
        self.settings = settings
        self.master_seed = master_seed
        self.trace: List[TraceEvent] = []

        if positions is None:
            positions = self._place(num_vehicles)
        if len(positions) != num_vehicles:
            raise DomainError("one position per vehicle is required")
        init_rng = derive_rng(master_seed, Stream.MAC_INIT, 0)
        self.vehicles = [Vehicle(i, p) for i, p in enumerate(positions)]
        for v in self.vehicles:
            forward = settings.facing_of(v.position)
            init_vehicle(v, settings.rcus_per_vehicle, frame.num_slots, frame.num_bands, init_rng,
                         facings=[forward, forward + np.pi], fov_rad=settings.fov_rad)
        self.baseline = [RcuState(r.rcu_id, r.vehicle_id, r.slot, r.band, r.position, r.facing_rad, r.fov_rad)
                         for r in self.rcus]

    @property
    def rcus(self) -> List[RcuState]:
        return [r for v in self.vehicles for r in v.rcus]

    def _place(self, n: int) -> List[Position]:
        rng = derive_rng(self.master_seed, Stream.MAC_INIT, 1)
        s = self.settings
        xs = rng.uniform(0.0, s.road_length_m, size=n)
        lanes = rng.integers(0, s.num_lanes, size=n)
        return [Position(x, lane * s.lane_spacing_m) for x, lane in zip(xs, lanes)]

    def record(self, time: float, node: int, kind: EventKind, payload: Any):
        event = TraceEvent(float(time), int(node), kind, payload)
        self.trace.append(event)
        logger.debug("trace %s", event.line())

    def _deliver(self, receiver: Vehicle, packet, now: float):
        receiver.handle_packet(packet, now, self.frame.num_slots, self.frame.num_bands, record=self.record)

    def _broadcast_window(self, vehicle: Vehicle, frame_idx: int) -> Tuple[float, float]:
        """The burst slot preceding the vehicle's first radar burst"""
        burst = min(self.frame.burst_of(r.slot) for r in vehicle.rcus)
        window_slot = (burst - 1) % self.frame.burst_slots
        start = frame_idx * self.frame.frame_s + window_slot * self.frame.slot_duration_s
        return start, start + self.frame.slot_duration_s

    def _vehicle_process(self, env, vehicle: Vehicle, channel, frames: int):
        rng = derive_rng(self.master_seed, Stream.MAC_ACCESS, vehicle.vehicle_id)
        for k in range(frames):
            start, end = self._broadcast_window(vehicle, k)
            jitter = max(0.0, end - start - channel.airtime_s)
            at = start + float(rng.uniform(0.0, jitter))
            if at > env.now:
                yield env.timeout(at - env.now)
            vehicle.db.expire(env.now - self.settings.staleness_frames * self.frame.frame_s)
            yield from csma_broadcast(vehicle, env, channel, end, rng, record=self.record)

    def run(self, frames: int) -> MacRunResult:
        if frames < 1:
            raise DomainError("frames must be at least 1")
        env = simpy.Environment()
        channel = ControlChannel(env, self.vehicles, self.settings.radio_range_m, self.settings.airtime_s,
                                 self.settings.cca_delay_s, on_deliver=self._deliver, record=self.record)
        for v in self.vehicles:
            env.process(self._vehicle_process(env, v, channel, frames))

        f_coord = np.zeros(frames)
        f_unc = np.zeros(frames)
        for k in range(frames):
            env.run(until=(k + 1) * self.frame.frame_s)
            errors = self._sync_errors(k)
            rcus = self.rcus
            apply_sync_error(rcus, self.frame, None, errors=errors)
            apply_sync_error(self.baseline, self.frame, None, errors=errors)
            f_coord[k] = measure_interference(rcus, self.frame, self.settings.all_in_view)
            f_unc[k] = measure_interference(self.baseline, self.frame, self.settings.all_in_view)
            logger.debug("frame %d: f_coordinated=%.4f f_uncoordinated=%.4f", k, f_coord[k], f_unc[k])

        conflicts = sum(v.persistent_conflict for v in self.vehicles)
        return MacRunResult(self.frame.frame_s, f_coord, f_unc, list(self.trace), conflicts, channel.stats())

    def _sync_errors(self, frame_idx: int) -> np.ndarray:
        bound = self.frame.sync_error_bound_s
        n = len(self.baseline)
        if bound == 0:
            return np.zeros(n)
        return derive_rng(self.master_seed, Stream.MAC_SYNC, frame_idx).uniform(-bound, bound, size=n)


def run(num_radars: int, frames: int, frame: FrameConfig, master_seed: int = 0,
        settings: MacSettings = MacSettings()) -> MacRunResult:
    """Simulates num_radars single-RCU vehicles for a number of frames"""
    settings = replace(settings, rcus_per_vehicle=1)
    return MacSimulator(frame, num_radars, settings, master_seed).run(frames)
