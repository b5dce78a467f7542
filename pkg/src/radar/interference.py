"""
Single-link interference between two FMCW radars.

The interferer's chirp reaches the victim after the one-way delay tau_int and
is dechirped by the victim's own ramp. Each fast-time sample carries the phase
difference of the two quadratic phases; it survives the victim's low-pass
(indicator 1) only if the instantaneous beat frequency lies in the victim's
band of interest [-B_s, 0], where target beats -alpha*tau also live.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from ..enums import CoherenceClass
from ..errors import DimensionMismatchError, DomainError
from ..scenario import SPEED_OF_LIGHT, NoiseConfig, Target
from ..seeding import Stream, derive_rng
from .fmcw import BeatMatrix, ChirpConfig, _taper, synthesize_beat
from .phase_noise import PhaseNoiseConfig, PhaseNoiseProcess

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterfererSpec:
    """
    Waveform and link of one interfering radar as seen by the victim.

    Args:
        bandwidth_hz: Sweep bandwidth B~
        chirp_s: Chirp duration T~
        oneway_delay_s: Propagation delay tau_int
        power_gain: |gamma_int|^2
        carrier_hz: Start frequency; None means the victim's carrier
        start_offset_s: Transmit-time misalignment t0; None draws it uniformly per CPI
        duty_cycle: Fraction of the interferer frame spent chirping
        frame_s: Interferer frame duration; only used when duty_cycle < 1
        phase_noise: Oscillator phase noise of the interferer
    """
    bandwidth_hz: float
    chirp_s: float
    oneway_delay_s: float = 0.0
    power_gain: float = 1.0
    carrier_hz: Optional[float] = None
    start_offset_s: Optional[float] = None
    duty_cycle: float = 1.0
    frame_s: Optional[float] = None
    phase_noise: Optional[PhaseNoiseConfig] = None

    def __post_init__(self):
        if not (self.bandwidth_hz > 0 and self.chirp_s > 0):
            raise DomainError("interferer bandwidth and chirp duration must be positive")
        if self.oneway_delay_s < 0:
            raise DomainError("one-way delay must be non-negative")
        if self.power_gain < 0:
            raise DomainError("interferer power gain must be non-negative")
        if not 0 < self.duty_cycle <= 1:
            raise DomainError("interferer duty cycle must lie in (0, 1]")
        if self.duty_cycle < 1 and not (self.frame_s and self.frame_s >= self.chirp_s):
            raise DomainError("an interferer with duty cycle < 1 needs a frame of at least one chirp")

    @property
    def slope(self) -> float:
        return self.bandwidth_hz / self.chirp_s

    @property
    def offset_period_s(self) -> float:
        """Period over which a random start offset is drawn"""
        return self.frame_s if self.duty_cycle < 1 else self.chirp_s

    @classmethod
    def matching(cls, victim: ChirpConfig, **overrides) -> 'InterfererSpec':
        """An interferer with the victim's waveform"""
        fields = dict(bandwidth_hz=victim.bandwidth_hz, chirp_s=victim.chirp_s,
                      carrier_hz=victim.carrier_hz, duty_cycle=victim.duty_cycle,
                      frame_s=victim.frame_s)
        fields.update(overrides)
        return cls(**fields)

    @classmethod
    def at_distance(cls, victim: ChirpConfig, distance_m: float, power_gain: float,
                    slope_ratio: float = 1.0, **overrides) -> 'InterfererSpec':
        """Victim-like interferer at a given distance with slope alpha~ = ratio * alpha"""
        fields = dict(bandwidth_hz=victim.bandwidth_hz * slope_ratio, chirp_s=victim.chirp_s,
                      oneway_delay_s=distance_m / SPEED_OF_LIGHT, power_gain=power_gain,
                      carrier_hz=victim.carrier_hz)
        fields.update(overrides)
        return cls(**fields)


@dataclass
class InterferenceSamples:
    """Dechirped interference of one CPI and its in-band indicator"""
    samples: np.ndarray
    indicator: np.ndarray
    start_offset_s: float

    @property
    def in_band_fraction(self) -> float:
        return float(self.indicator.mean())


def _interferer_time(victim: ChirpConfig, intf: InterfererSpec, t_abs: np.ndarray,
                     t0: float) -> Tuple[np.ndarray, np.ndarray]:
    """Interferer-local chirp time s and activity mask at the victim's sampling instants"""
    rel = t_abs - intf.oneway_delay_s - t0
    if intf.duty_cycle < 1:
        rho = np.mod(rel, intf.frame_s)
        chirps = max(1, int(np.floor(intf.duty_cycle * intf.frame_s / intf.chirp_s + 1e-9)))
        active = rho < chirps * intf.chirp_s
        return np.mod(rho, intf.chirp_s), active
    return np.mod(rel, intf.chirp_s), np.ones_like(rel, dtype=bool)


def dechirped_interference(victim: ChirpConfig, intf: InterfererSpec,
                           rng: Optional[np.random.Generator] = None,
                           victim_phase_noise: Optional[PhaseNoiseProcess] = None,
                           interferer_phase_noise: Optional[PhaseNoiseProcess] = None
                           ) -> InterferenceSamples:
    """
    Evaluates gamma_int * x_int[k, n] on the victim's sample grid.

    Args:
        victim: Victim waveform
        intf: Interferer
        rng: Draws t0 when intf.start_offset_s is None; defaults to the START_OFFSET stream of seed 0
        victim_phase_noise: Victim oscillator trajectory on absolute time
        interferer_phase_noise: Interferer trajectory; generated from intf.phase_noise if omitted

    Returns:
        Complex samples (K x (N - n_max)) and the boolean indicator grid
    """
    if intf.start_offset_s is None:
        generator = rng if rng is not None else derive_rng(0, Stream.START_OFFSET)
        t0 = float(generator.uniform(0.0, intf.offset_period_s))
    else:
        t0 = float(intf.start_offset_s)

    t_fast = victim.fast_time()[None, :]
    t_abs = np.arange(victim.num_chirps)[:, None] * victim.chirp_s + t_fast
    s, active = _interferer_time(victim, intf, t_abs, t0)

    fc_i = victim.carrier_hz if intf.carrier_hz is None else intf.carrier_hz
    beat_hz = (fc_i - victim.carrier_hz) + intf.slope * s - victim.slope * t_fast
    indicator = active & (beat_hz >= -victim.interest_bandwidth_hz) & (beat_hz <= 0.0)

    # cycles, reduced mod 1 term by term to keep the large carrier products exact enough
    cycles = (np.mod(fc_i * s, 1.0) + np.mod(0.5 * intf.slope * s ** 2, 1.0)
              - np.mod(victim.carrier_hz * t_fast, 1.0) - np.mod(0.5 * victim.slope * t_fast ** 2, 1.0))
    phase = 2.0 * np.pi * cycles

    if intf.phase_noise is not None and interferer_phase_noise is None:
        start = -intf.oneway_delay_s - t0 - victim.chirp_s
        interferer_phase_noise = PhaseNoiseProcess.generate(
            intf.phase_noise, start, float(t_abs.max()), 1.0 / victim.sample_period_s,
            intf.phase_noise.generator(Stream.PHASE_NOISE_INTERFERER))
    if interferer_phase_noise is not None:
        phase = phase + interferer_phase_noise.at(t_abs - intf.oneway_delay_s - t0)
    if victim_phase_noise is not None:
        phase = phase - victim_phase_noise.at(t_abs)

    samples = np.sqrt(intf.power_gain) * indicator * np.exp(1j * phase)
    return InterferenceSamples(samples, indicator, t0)


def in_band_fraction(victim: ChirpConfig, intf: InterfererSpec) -> float:
    """Fraction of one victim chirp's samples hit in-band by a fixed-offset interferer"""
    single = victim.with_chirps(1)
    return dechirped_interference(single, intf).in_band_fraction


def expected_in_band_fraction(victim: ChirpConfig, intf: InterfererSpec, trials: int,
                              rng: np.random.Generator) -> float:
    """
    Mean indicator over t0 uniform on the interferer's offset period.

    Offsets are stratified (one jittered draw per equal sub-interval) so the
    estimate converges much faster than plain sampling.
    """
    if trials < 1:
        raise DomainError("at least one trial is required")
    period = intf.offset_period_s
    offsets = (np.arange(trials) + rng.uniform(size=trials)) * period / trials
    total = 0.0
    for t0 in offsets:
        total += dechirped_interference(victim, replace(intf, start_offset_s=float(t0))).in_band_fraction
    return total / trials


def inject(beat: BeatMatrix, *interference) -> BeatMatrix:
    """Adds one or more interference sample grids to a CPI"""
    total = beat.samples.copy()
    for item in interference:
        samples = item.samples if isinstance(item, (InterferenceSamples, BeatMatrix)) else np.asarray(item)
        if samples.shape != total.shape:
            raise DimensionMismatchError(f"interference shape {samples.shape} != beat shape {total.shape}")
        total = total + samples
    return BeatMatrix(total, beat.config)


def classify_coherence(victim: ChirpConfig, intf: InterfererSpec,
                       relative_tolerance: float = 1e-4,
                       spread_threshold_bins: float = 10.0) -> CoherenceClass:
    """
    Ghost target, local smearing or raised floor.

    The spread of the dechirped interference in range bins is the beat
    frequency excursion over one chirp, min(|alpha~ - alpha| T, B_s), times the
    fast-time observation length T.
    """
    def mismatch(a: float, b: float) -> float:
        return abs(a - b) / abs(b)

    same_waveform = (mismatch(intf.slope, victim.slope) < relative_tolerance
                     and mismatch(intf.chirp_s, victim.chirp_s) < relative_tolerance
                     and mismatch(intf.bandwidth_hz, victim.bandwidth_hz) < relative_tolerance)
    has_phase_noise = intf.phase_noise is not None and intf.phase_noise.enabled
    if same_waveform and not has_phase_noise:
        return CoherenceClass.COHERENT

    excursion = min(abs(intf.slope - victim.slope) * victim.chirp_s, victim.interest_bandwidth_hz)
    if excursion * victim.chirp_s > spread_threshold_bins:
        return CoherenceClass.INCOHERENT
    return CoherenceClass.PARTIALLY_COHERENT


def interference_probability(duty_cycle: float, slope: float, tau_max_s: float, bandwidth_hz: float) -> float:
    """Expected interference probability f = u alpha tau_max / B, clamped to [0, 1]"""
    if not 0 <= duty_cycle <= 1:
        raise DomainError("duty cycle must lie in [0, 1]")
    if not (slope > 0 and tau_max_s > 0 and bandwidth_hz > 0):
        raise DomainError("slope, tau_max and bandwidth must be positive")
    return float(np.clip(duty_cycle * slope * tau_max_s / bandwidth_hz, 0.0, 1.0))


@dataclass(frozen=True)
class RegimeAsymptotics:
    """Probability and duration of interference in one slope regime"""
    regime: str
    probability: float
    duration_s: float
    simultaneous: float = 1.0


def regime_asymptotics(duty_cycle: float, victim: ChirpConfig, interferer_slope: float) -> Dict[str, RegimeAsymptotics]:
    """
    Limiting behaviour for equal, much smaller and much larger interferer slopes.

    The 'slower' and 'faster' entries are evaluated with the given interferer
    slope; 'equal' ignores it.
    """
    alpha, tau_max, bandwidth = victim.slope, victim.tau_max_s, victim.bandwidth_hz
    a_i = interferer_slope
    equal = RegimeAsymptotics('equal', duty_cycle * victim.interest_bandwidth_hz / bandwidth, victim.chirp_s)
    slower = RegimeAsymptotics('slower', duty_cycle,
                               a_i * tau_max / (alpha - a_i) if a_i < alpha else float('inf'))
    faster = RegimeAsymptotics('faster', duty_cycle,
                               alpha * tau_max / (a_i - alpha) if a_i > alpha else float('inf'),
                               simultaneous=a_i / alpha)
    return {'equal': equal, 'slower': slower, 'faster': faster}


def sir_bound(gamma2: float, gamma_int2: float, processing_gain: float,
              interference_gain: float, probability: float) -> float:
    """
    Rule-of-thumb SIR lower bound |gamma|^2 Gp^2 / (f |gamma_int|^2 Gp G_I).

    Args:
        interference_gain: G_I, 1 for incoherent and Gp for coherent interference
    """
    if not 1 <= interference_gain <= processing_gain:
        raise DomainError(f"G_I must lie in [1, Gp={processing_gain}], got {interference_gain}")
    if not 0 < probability <= 1:
        raise DomainError(f"interference probability must lie in (0, 1], got {probability}")
    return gamma2 * processing_gain ** 2 / (probability * gamma_int2 * processing_gain * interference_gain)


def sir_bound_factored(rcs_m2: float, interferer_distance_m: float, target_distance_m: float,
                       config: ChirpConfig, interference_gain: float) -> float:
    """
    The same bound split into a geometry factor and an optimizable waveform factor:
    sigma r^2 / (4 pi d^4) * Gp B / (u alpha tau_max G_I).
    """
    gp = config.processing_gain
    if not 1 <= interference_gain <= gp:
        raise DomainError(f"G_I must lie in [1, Gp={gp}], got {interference_gain}")
    geometry = rcs_m2 * interferer_distance_m ** 2 / (4 * np.pi * target_distance_m ** 4)
    waveform = gp * config.bandwidth_hz / (config.duty_cycle * config.slope * config.tau_max_s * interference_gain)
    return geometry * waveform


@dataclass
class RangeProfiles:
    """Averaged fast-time power spectra of the target and interference components"""
    range_axis_m: np.ndarray
    target_clean: np.ndarray
    interference_clean: np.ndarray
    target_phase_noise: np.ndarray
    interference_phase_noise: np.ndarray


def range_profile(samples: np.ndarray, config: ChirpConfig, window: str = 'hann',
                  zero_pad: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """
    Chirp-averaged fast-time power spectrum on the delay grid [0, tau_max).

    Returns:
        (range axis in metres, power per bin)
    """
    n_len = samples.shape[-1]
    n_fft = zero_pad * n_len
    tapered = np.atleast_2d(samples) * _taper(window, n_len)[None, :]
    spectrum = fft.ifft(tapered, n=n_fft, axis=1) * n_fft
    power = np.mean(np.abs(spectrum) ** 2, axis=0)
    delay = np.arange(n_fft) / (n_fft * config.sample_period_s * config.slope)
    return SPEED_OF_LIGHT * delay / 2.0, power


def averaged_range_profile(victim: ChirpConfig, target: Target, target_gain: float,
                           intf: InterfererSpec,
                           victim_phase_noise: Optional[PhaseNoiseConfig] = None,
                           realizations: int = 1, master_seed: int = 0,
                           window: str = 'hann', zero_pad: int = 4) -> RangeProfiles:
    """
    Range spectra of signal and interference power, averaged over chirps and
    over independent phase-noise realizations of both oscillators.

    The interferer start offset is held fixed (a random one is drawn once from
    the master seed) so only phase noise varies between realizations.
    """
    if realizations < 1:
        raise DomainError("at least one phase-noise realization is required")
    if intf.start_offset_s is None:
        t0 = float(derive_rng(master_seed, Stream.START_OFFSET).uniform(0.0, intf.offset_period_s))
        intf = replace(intf, start_offset_s=t0)

    clean_intf = replace(intf, phase_noise=None)
    target_beat = synthesize_beat(victim, [(target, target_gain)], NoiseConfig())
    axis, target_clean = range_profile(target_beat.samples, victim, window, zero_pad)
    _, intf_clean = range_profile(dechirped_interference(victim, clean_intf).samples, victim, window, zero_pad)

    if victim_phase_noise is None and intf.phase_noise is None:
        return RangeProfiles(axis, target_clean, intf_clean, target_clean.copy(), intf_clean.copy())

    rate = 1.0 / victim.sample_period_s
    t_stop = victim.num_chirps * victim.chirp_s
    t_start = -max(target.delay_s, intf.oneway_delay_s + intf.start_offset_s) - victim.chirp_s
    target_acc = np.zeros_like(target_clean)
    intf_acc = np.zeros_like(intf_clean)
    for r in range(realizations):
        v_proc = None
        if victim_phase_noise is not None:
            v_proc = PhaseNoiseProcess.generate(victim_phase_noise, t_start, t_stop, rate,
                                                derive_rng(master_seed, Stream.PHASE_NOISE_VICTIM, r))
        i_proc = None
        if intf.phase_noise is not None:
            i_proc = PhaseNoiseProcess.generate(intf.phase_noise, t_start, t_stop, rate,
                                                derive_rng(master_seed, Stream.PHASE_NOISE_INTERFERER, r))
        tb = synthesize_beat(victim, [(target, target_gain)], NoiseConfig(), phase_noise=v_proc)
        ib = dechirped_interference(victim, clean_intf, victim_phase_noise=v_proc,
                                    interferer_phase_noise=i_proc)
        target_acc += range_profile(tb.samples, victim, window, zero_pad)[1]
        intf_acc += range_profile(ib.samples, victim, window, zero_pad)[1]
    logger.debug("averaged %d phase-noise realizations", realizations)
    return RangeProfiles(axis, target_clean, intf_clean, target_acc / realizations, intf_acc / realizations)


def peak_width_3db(profile: np.ndarray, axis: np.ndarray, peak_index: Optional[int] = None) -> float:
    """
    Width of a peak between its two half-power crossings, linearly interpolated.

    Args:
        profile: Power values
        axis: Abscissa of each value (uniform spacing)
        peak_index: Peak to measure; defaults to the global maximum
    """
    idx = int(np.argmax(profile)) if peak_index is None else int(peak_index)
    half = profile[idx] / 2.0
    step = axis[1] - axis[0]

    def crossing(direction: int) -> float:
        i = idx
        while 0 <= i + direction < profile.size and profile[i + direction] > half:
            i += direction
        j = i + direction
        if not 0 <= j < profile.size:
            return float(i)
        frac = (profile[i] - half) / (profile[i] - profile[j])
        return i + direction * frac

    return (crossing(+1) - crossing(-1)) * step


def noise_floor_median(profile: np.ndarray) -> float:
    return float(np.median(profile))


def target_masked(profiles_target: np.ndarray, profiles_interference: np.ndarray, axis: np.ndarray,
                  target_range_m: float, margin_db: float = 10.0) -> bool:
    """
    True if the interference at the target's range bin comes within margin_db
    of the target peak.
    """
    idx = int(np.argmin(np.abs(axis - target_range_m)))
    lo, hi = max(0, idx - 2), min(axis.size, idx + 3)
    peak = float(profiles_target[lo:hi].max())
    interference = float(profiles_interference[idx])
    if interference == 0:
        return False
    return 10.0 * np.log10(peak / interference) < margin_db


def skirt_power_ratio(profile: np.ndarray, peak_index: Optional[int] = None, inner_bins: int = 8,
                      outer_bins: int = 16) -> float:
    """
    Mean power in the bins inner_bins..outer_bins away from a peak on either
    side, relative to the peak. Phase noise lifts this skirt long before it
    widens the 3 dB mainlobe.
    """
    if not 0 < inner_bins <= outer_bins:
        raise DomainError("need 0 < inner_bins <= outer_bins")
    idx = int(np.argmax(profile)) if peak_index is None else int(peak_index)
    offsets = np.arange(inner_bins, outer_bins + 1)
    cells = np.concatenate([idx - offsets, idx + offsets])
    cells = cells[(cells >= 0) & (cells < profile.size)]
    if cells.size == 0 or profile[idx] == 0:
        return 0.0
    return float(profile[cells].mean() / profile[idx])
