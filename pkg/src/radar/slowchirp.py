"""
Quasi-orthogonal slow chirps.

One millisecond-scale chirp shared by many radars, each offset in start time
by a channel delay. The dechirped single-sweep echo

    y(t) = g * exp(j2pi f* t) * exp(j phi0) * exp(j2pi nu alpha t^2) + w(t),  f* = fc nu - alpha tau

keeps the quadratic Doppler term that fast chirps drop, so range and velocity
separate within one sweep. Velocity comes from the shape of that quadratic
term: the ratio of the outer-half to inner-half sweep integrals is free of the
unknown gain and of phi0 and is inverted through a lookup table. phi0 then
pins the estimate to the nearest root where the implied gain is real positive.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft, integrate, optimize

from ..errors import AmbiguousVelocityError, DomainError, SpanTooWideError
from ..scenario import SPEED_OF_LIGHT, NoiseConfig, Target
from .fmcw import complex_noise, parabolic_offset

logger = logging.getLogger(__name__)

KMH = 1.0 / 3.6


@dataclass(frozen=True)
class SlowChirpConfig:
    """
    Args:
        carrier_hz: Start frequency
        bandwidth_hz: Sweep bandwidth B
        chirp_s: Sweep duration T (milliseconds)
        channel_count: Number of start-time channels N
        channel_index: This radar's channel, offset index * T / N
        max_range_m: Design envelope used for the default sample rate
        max_speed_mps: Design envelope used for the default sample rate
        sample_rate_hz: Complex sample rate; defaults to 2.5 x the largest |f*| of the envelope
    """
    carrier_hz: float = 77e9
    bandwidth_hz: float = 1e9
    chirp_s: float = 10e-3
    channel_count: int = 1
    channel_index: int = 0
    max_range_m: float = 150.0
    max_speed_mps: float = 50.0
    sample_rate_hz: Optional[float] = None

    def __post_init__(self):
        if not (self.carrier_hz > 0 and self.bandwidth_hz > 0 and self.chirp_s > 0):
            raise DomainError("carrier, bandwidth and duration must be positive")
        if self.channel_count < 1 or not 0 <= self.channel_index < self.channel_count:
            raise DomainError("channel index must lie in [0, channel_count)")
        if self.sample_rate_hz is None:
            object.__setattr__(self, 'sample_rate_hz', 2.5 * self.max_beat_hz)
        if not self.sample_rate_hz > 0:
            raise DomainError("sample rate must be positive")

    @property
    def slope(self) -> float:
        return self.bandwidth_hz / self.chirp_s

    @property
    def max_beat_hz(self) -> float:
        """Largest |f*| within the design envelope"""
        return (self.slope * 2 * self.max_range_m / SPEED_OF_LIGHT
                + self.carrier_hz * 2 * self.max_speed_mps / SPEED_OF_LIGHT)

    @property
    def channel_offset_s(self) -> float:
        return self.channel_index * self.chirp_s / self.channel_count

    @property
    def num_samples(self) -> int:
        return int(round(self.chirp_s * self.sample_rate_hz))

    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) / self.sample_rate_hz

    @property
    def mid_time_s(self) -> float:
        return (self.num_samples - 1) / (2.0 * self.sample_rate_hz)

    @property
    def bin_hz(self) -> float:
        return 1.0 / self.chirp_s


def coupling(delta_tau_s: float, bandwidth_hz: float, chirp_s: float) -> Tuple[float, float]:
    """
    Power leakage between a chirp and a copy delayed by delta_tau.

    Returns:
        (exact, bound): the quadrature value |1/T int exp(j[phi(t) - phi(t - dtau)]) dt|^2
        and the bound 1 / (pi B dtau)^2
    """
    if delta_tau_s < 0 or delta_tau_s >= chirp_s:
        raise DomainError("delay offset must lie in [0, T)")
    if delta_tau_s == 0:
        return 1.0, 1.0
    # the phase difference is linear in t; integrate over u = t/T on [0, 1]
    omega = 2.0 * np.pi * bandwidth_hz * delta_tau_s
    re, _ = integrate.quad(lambda u: 1.0, 0.0, 1.0, weight='cos', wvar=omega)
    im, _ = integrate.quad(lambda u: 1.0, 0.0, 1.0, weight='sin', wvar=omega)
    bound = 1.0 / (np.pi * bandwidth_hz * delta_tau_s) ** 2
    return float(re * re + im * im), float(bound)


def max_channels(chirp_s: float, bandwidth_hz: float, rcs_m2: float, interferer_distance_m: float) -> int:
    """Number of quasi-orthogonal start offsets, floor(T B sqrt(sigma) / r)"""
    if not (chirp_s > 0 and bandwidth_hz > 0 and rcs_m2 >= 0 and interferer_distance_m > 0):
        raise DomainError("max_channels needs positive T, B, r and non-negative RCS")
    return int(np.floor(chirp_s * bandwidth_hz * np.sqrt(rcs_m2) / interferer_distance_m))


def phi0_forward(tau_s: float, cfg: SlowChirpConfig) -> float:
    """Absolute phase pi alpha tau (tau - 2 fc / alpha)"""
    return np.pi * cfg.slope * tau_s * (tau_s - 2.0 * cfg.carrier_hz / cfg.slope)


def phi0_from_beat(nu: float, f_star: float, cfg: SlowChirpConfig) -> float:
    """The same phase written through (nu, f*): pi (fc nu - f*)/alpha (fc (nu - 2) - f*)"""
    fc = cfg.carrier_hz
    return np.pi * (fc * nu - f_star) / cfg.slope * (fc * (nu - 2.0) - f_star)


@dataclass
class SlowChirpSignal:
    times: np.ndarray
    samples: np.ndarray
    sample_rate_hz: float


def dechirp_slow(target: Target, cfg: SlowChirpConfig, power_gain: float = 1.0,
                 noise: NoiseConfig = NoiseConfig(), rng: Optional[np.random.Generator] = None) -> SlowChirpSignal:
    """Synthesizes the dechirped single-sweep echo of one target"""
    tau = target.delay_s
    if target.range_m > cfg.max_range_m:
        raise DomainError(f"target at {target.range_m} m is beyond the design range {cfg.max_range_m} m")
    nu = target.doppler
    t = cfg.times()
    f_star = cfg.carrier_hz * nu - cfg.slope * tau
    cycles = f_star * t + nu * cfg.slope * t ** 2
    y = np.sqrt(power_gain) * np.exp(1j * (2.0 * np.pi * cycles + phi0_forward(tau, cfg)))
    generator = rng if rng is not None else noise.generator()
    y = y + complex_noise(generator, noise.variance_w, y.shape)
    return SlowChirpSignal(t, y, cfg.sample_rate_hz)


def dtft(signal: SlowChirpSignal, freq_hz: float, mask: Optional[np.ndarray] = None) -> complex:
    """(1/fs) sum y(t) exp(-j2pi f t), optionally over a subset of samples"""
    kernel = signal.samples * np.exp(-2j * np.pi * freq_hz * signal.times)
    if mask is not None:
        kernel = kernel[mask]
    return complex(kernel.sum() / signal.sample_rate_hz)


def spectrum_peak(signal: SlowChirpSignal, zero_pad: int = 8) -> Tuple[float, complex]:
    """
    Location of max |Y(f)| (parabolic-refined) and Y there.

    Y is normalized so a static unit-gain target gives exp(j phi0) * T.
    """
    n = signal.samples.size
    if n == 0:
        raise DomainError("empty time series")
    n_fft = zero_pad * n
    mag = np.abs(fft.fft(signal.samples, n=n_fft))
    k = int(np.argmax(mag))
    delta = parabolic_offset(mag[(k - 1) % n_fft], mag[k], mag[(k + 1) % n_fft])
    freq = fft.fftfreq(n_fft, d=1.0 / signal.sample_rate_hz)[k] + delta * signal.sample_rate_hz / n_fft
    return float(freq), dtft(signal, freq)


def sweep_centre_frequency(signal: SlowChirpSignal, f_peak: float, half_width_hz: float,
                           zero_pad: int = 16, iterations: int = 4) -> float:
    """
    Mid-sweep instantaneous frequency f* + 2 nu alpha t_mid.

    |Y(f)| is symmetric about this frequency, so the power centroid of a window
    re-centred on it converges there.
    """
    n_fft = zero_pad * signal.samples.size
    power = np.abs(fft.fft(signal.samples, n=n_fft)) ** 2
    freqs = fft.fftfreq(n_fft, d=1.0 / signal.sample_rate_hz)
    centre = f_peak
    for _ in range(iterations):
        sel = np.abs(freqs - centre) <= half_width_hz
        if not np.any(sel):
            break
        centre = float(np.sum(freqs[sel] * power[sel]) / np.sum(power[sel]))
    return centre


def sweep_integral(nu: float, cfg: SlowChirpConfig) -> complex:
    """I(nu) = int_0^T exp(j2pi nu alpha t^2) dt by adaptive quadrature"""
    c = 2.0 * np.pi * nu * cfg.slope
    tol = 1e-10 * cfg.chirp_s
    re, _ = integrate.quad(lambda t: np.cos(c * t * t), 0.0, cfg.chirp_s, epsabs=tol, limit=400)
    im, _ = integrate.quad(lambda t: np.sin(c * t * t), 0.0, cfg.chirp_s, epsabs=tol, limit=400)
    return complex(re, im)


def _split_masks(cfg: SlowChirpConfig) -> Tuple[np.ndarray, np.ndarray]:
    s = cfg.times() - cfg.mid_time_s
    inner = np.abs(s) < cfg.chirp_s / 4.0
    return ~inner, inner


def split_ratio_model(nu: float, cfg: SlowChirpConfig) -> complex:
    """Outer-half over inner-half sweep integral of the quadratic Doppler term"""
    s = cfg.times() - cfg.mid_time_s
    term = np.exp(2j * np.pi * nu * cfg.slope * s ** 2)
    outer, inner = _split_masks(cfg)
    return complex(term[outer].sum() / term[inner].sum())


def split_ratio_measured(signal: SlowChirpSignal, centre_hz: float, cfg: SlowChirpConfig) -> complex:
    outer, inner = _split_masks(cfg)
    return dtft(signal, centre_hz, outer) / dtft(signal, centre_hz, inner)


def _circle_centre(points: np.ndarray) -> complex:
    """Algebraic least-squares circle fit; returns the centre"""
    x, y = points.real, points.imag
    a = np.column_stack([x, y, np.ones_like(x)])
    b = x ** 2 + y ** 2
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return complex(sol[0] / 2.0, sol[1] / 2.0)


@dataclass
class VelocityLUT:
    """
    Tabulated ratio trace against velocity.

    angle is the unwrapped angle of (ratio - origin) and is strictly monotone
    over the table. model holds exp(j phi0(nu)) I(nu) for the f* the table
    was built with.
    """
    velocities_mps: np.ndarray
    ratio: np.ndarray
    angle: np.ndarray
    origin: complex
    model: np.ndarray
    f_star_hz: float
    cfg: SlowChirpConfig

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.velocities_mps[0]), float(self.velocities_mps[-1])

    @property
    def step_mps(self) -> float:
        return float(self.velocities_mps[1] - self.velocities_mps[0])

    @property
    def phase_angle(self) -> np.ndarray:
        """Wrapped angle of exp(j phi0(nu)) I(nu) per grid velocity; phi0(0) at v = 0"""
        return np.angle(self.model)

    @property
    def sweep_magnitude(self) -> np.ndarray:
        """|I(nu)|, which falls as the quadratic term decoheres"""
        return np.abs(self.model)

    def contains_angle(self, angle: float) -> bool:
        lo, hi = sorted((self.angle[0], self.angle[-1]))
        return lo <= angle <= hi

    def lookup(self, angle: float) -> float:
        """Inverse lookup of velocity from an unwrapped angle inside the table"""
        if self.angle[-1] >= self.angle[0]:
            return float(np.interp(angle, self.angle, self.velocities_mps))
        return float(np.interp(angle, self.angle[::-1], self.velocities_mps[::-1]))


def _monotone_extent(angle: np.ndarray, centre: int) -> Tuple[int, int]:
    """Largest index range around centre over which angle is strictly monotone"""
    diffs = np.diff(angle)
    sign = np.sign(diffs[min(centre, diffs.size - 1)])
    hi = centre
    while hi < diffs.size and np.sign(diffs[hi]) == sign and diffs[hi] != 0:
        hi += 1
    lo = centre
    while lo > 0 and np.sign(diffs[lo - 1]) == sign and diffs[lo - 1] != 0:
        lo -= 1
    return lo, hi


def build_velocity_lut(cfg: SlowChirpConfig, f_star_hz: float, v_span_mps: float,
                       v_step_mps: float = 0.25 * KMH, recenter: bool = False) -> VelocityLUT:
    """
    Tabulates the split-ratio angle over [-v_span, v_span].

    Args:
        recenter: Measure angles about a least-squares circle centre of the trace
            instead of the origin, which makes the radius meet the trace more
            perpendicularly

    Raises:
        SpanTooWideError: angle is not strictly monotone over the span; carries the
            largest symmetric span that is
    """
    if not (v_span_mps > 0 and v_step_mps > 0):
        raise DomainError("velocity span and step must be positive")
    count = int(np.floor(v_span_mps / v_step_mps + 1e-9))
    velocities = np.arange(-count, count + 1) * v_step_mps
    nus = 2.0 * velocities / SPEED_OF_LIGHT
    ratio = np.array([split_ratio_model(nu, cfg) for nu in nus])
    origin = _circle_centre(ratio) if recenter else 0j
    angle = np.unwrap(np.angle(ratio - origin))

    lo, hi = _monotone_extent(angle, count)
    if lo > 0 or hi < angle.size - 1:
        max_span = min(abs(velocities[lo]), abs(velocities[hi]))
        raise SpanTooWideError(
            f"angle is not one-to-one beyond +/-{max_span:.2f} m/s (requested {v_span_mps:.2f} m/s)", max_span)

    model = np.array([np.exp(1j * phi0_from_beat(nu, f_star_hz, cfg)) * sweep_integral(nu, cfg) for nu in nus])
    logger.debug("velocity LUT: %d entries over +/-%.2f m/s", velocities.size, v_span_mps)
    return VelocityLUT(velocities, ratio, angle, origin, model, f_star_hz, cfg)


def default_lut(cfg: SlowChirpConfig, f_star_hz: float = 0.0) -> VelocityLUT:
    """LUT over the design speed, shrunk to the one-to-one span if that is narrower"""
    try:
        return build_velocity_lut(cfg, f_star_hz, cfg.max_speed_mps)
    except SpanTooWideError as err:
        logger.info("design speed %.1f m/s exceeds the unambiguous span, using +/-%.1f m/s",
                    cfg.max_speed_mps, err.max_span)
        return build_velocity_lut(cfg, f_star_hz, err.max_span)


def unambiguous_span(cfg: SlowChirpConfig, v_limit_mps: float = 200.0, v_step_mps: float = 0.25 * KMH,
                     recenter: bool = False) -> float:
    """Largest symmetric velocity span with a one-to-one LUT angle"""
    try:
        build_velocity_lut(cfg, 0.0, v_limit_mps, v_step_mps, recenter)
        return v_limit_mps
    except SpanTooWideError as err:
        return err.max_span


@dataclass(frozen=True)
class SlowChirpEstimate:
    range_m: float
    velocity_mps: float
    f_star_hz: float
    ratio_residual: float
    gamma: complex
    offset_hz: float = 0.0

    @property
    def consistent(self) -> bool:
        return self.ratio_residual < RATIO_TOLERANCE


RATIO_TOLERANCE = 0.05


def _wrapped(x: float) -> float:
    return float(np.angle(np.exp(1j * x)))


def _align_phi0(signal: SlowChirpSignal, cfg: SlowChirpConfig, centre_hz: float, nu0: float,
                iterations: int = 4) -> float:
    """Moves nu to the nearest root of angle(Y(f*)) - phi0 - angle(I) = 0 (mod 2pi)"""
    t_mid2 = 2.0 * cfg.mid_time_s * cfg.slope

    def misfit(nu: float) -> float:
        f_star = centre_hz - nu * t_mid2
        y_star = dtft(signal, f_star)
        i_d = complex(np.exp(2j * np.pi * nu * cfg.slope * signal.times ** 2).sum() / signal.sample_rate_hz)
        return _wrapped(np.angle(y_star) - phi0_from_beat(nu, f_star, cfg) - np.angle(i_d))

    nu = nu0
    # phi0 dominates the slope of the misfit
    h = 1e-3 * np.pi / (2 * np.pi * cfg.carrier_hz ** 2 / cfg.slope)
    for _ in range(iterations):
        value = misfit(nu)
        slope = (_wrapped(misfit(nu + h) - value)) / h
        if slope == 0:
            break
        nu = nu - value / slope
    return nu


def estimate_range_velocity(signal: SlowChirpSignal, cfg: SlowChirpConfig,
                            lut: Optional[VelocityLUT] = None, offset_hz: float = 0.0) -> SlowChirpEstimate:
    """
    Joint range and velocity from one sweep of a single dominant target.

    Raises:
        AmbiguousVelocityError: the measured ratio angle falls outside the LUT
    """
    if lut is None:
        lut = default_lut(cfg)
    f_peak, _ = spectrum_peak(signal)
    v_max = max(abs(v) for v in lut.span)
    half_width = 3.0 * cfg.bin_hz + 2.0 * (2 * v_max / SPEED_OF_LIGHT) * cfg.slope * cfg.chirp_s
    centre = sweep_centre_frequency(signal, f_peak, half_width)

    measured = split_ratio_measured(signal, centre, cfg)
    raw = float(np.angle(measured - lut.origin))
    candidates = [raw + 2 * np.pi * k for k in range(-3, 4) if lut.contains_angle(raw + 2 * np.pi * k)]
    if len(candidates) != 1:
        raise AmbiguousVelocityError(
            f"ratio angle {raw:.3f} rad matches {len(candidates)} LUT branches",
            {'angle': raw, 'lut_angle_range': (float(lut.angle[0]), float(lut.angle[-1])), 'offset_hz': offset_hz})
    angle = candidates[0]

    v_coarse = lut.lookup(angle)
    target_phasor = np.exp(1j * raw)

    def angle_error(v: float) -> float:
        rho = split_ratio_model(2.0 * v / SPEED_OF_LIGHT, cfg) - lut.origin
        return float(np.angle(rho * np.conj(target_phasor)))

    step = lut.step_mps
    lo, hi = v_coarse - step, v_coarse + step
    if angle_error(lo) * angle_error(hi) < 0:
        v_hat = optimize.brentq(angle_error, lo, hi, xtol=1e-9)
    else:
        v_hat = v_coarse
    nu_hat = 2.0 * v_hat / SPEED_OF_LIGHT
    residual = abs(measured - split_ratio_model(nu_hat, cfg)) / abs(split_ratio_model(nu_hat, cfg))

    nu_hat = _align_phi0(signal, cfg, centre, nu_hat)
    f_star = centre - 2.0 * nu_hat * cfg.slope * cfg.mid_time_s
    i_d = complex(np.exp(2j * np.pi * nu_hat * cfg.slope * signal.times ** 2).sum() / signal.sample_rate_hz)
    gamma = dtft(signal, f_star) / (np.exp(1j * phi0_from_beat(nu_hat, f_star, cfg)) * i_d)
    range_m = SPEED_OF_LIGHT * (cfg.carrier_hz * nu_hat - f_star) / (2.0 * cfg.slope)
    return SlowChirpEstimate(range_m, SPEED_OF_LIGHT * nu_hat / 2.0, f_star, float(residual), gamma, offset_hz)


def demodulate_doppler(signal: SlowChirpSignal, cfg: SlowChirpConfig, offset_hz: float) -> SlowChirpSignal:
    """Removes the Doppler tone and quadratic term of nu_o = offset / fc"""
    nu_o = offset_hz / cfg.carrier_hz
    t = signal.times
    mixer = np.exp(-2j * np.pi * (offset_hz * t + nu_o * cfg.slope * t ** 2))
    return SlowChirpSignal(t, signal.samples * mixer, signal.sample_rate_hz)


def offset_for_velocity(cfg: SlowChirpConfig, velocity_mps: float) -> float:
    """Digital Doppler offset (Hz) that centres a velocity channel on velocity_mps"""
    return cfg.carrier_hz * 2.0 * velocity_mps / SPEED_OF_LIGHT


@dataclass
class ChannelSearch:
    """Per-channel outcomes of a Doppler-offset search and the selected estimate"""
    estimates: List[Optional[SlowChirpEstimate]]
    selected: SlowChirpEstimate
    offsets_hz: List[float] = field(default_factory=list)


def doppler_offset_channels(signal: SlowChirpSignal, cfg: SlowChirpConfig, offsets_hz: Sequence[float],
                            lut: Optional[VelocityLUT] = None) -> ChannelSearch:
    """
    Runs the estimator on several digitally Doppler-shifted copies.

    The consistent channel with the smallest ratio residual is selected.

    Raises:
        AmbiguousVelocityError: no channel produced a consistent estimate
    """
    offsets = [float(o) for o in offsets_hz]
    if len(set(offsets)) != len(offsets):
        raise DomainError("Doppler offsets must be distinct")
    if lut is None:
        lut = default_lut(cfg)

    estimates: List[Optional[SlowChirpEstimate]] = []
    failures = {}
    for offset in offsets:
        shifted = demodulate_doppler(signal, cfg, offset) if offset else signal
        try:
            est = estimate_range_velocity(shifted, cfg, lut, offset)
        except AmbiguousVelocityError as err:
            failures[offset] = err.diagnostics
            estimates.append(None)
            continue
        v_back = est.velocity_mps + SPEED_OF_LIGHT * offset / (2.0 * cfg.carrier_hz)
        f_back = est.f_star_hz + offset
        estimates.append(SlowChirpEstimate(est.range_m, v_back, f_back, est.ratio_residual, est.gamma, offset))

    passing = [e for e in estimates if e is not None and e.consistent]
    if not passing:
        residuals = {e.offset_hz: e.ratio_residual for e in estimates if e is not None}
        raise AmbiguousVelocityError("no velocity channel produced a consistent estimate",
                                     {'failures': failures, 'residuals': residuals})
    selected = min(passing, key=lambda e: e.ratio_residual)
    return ChannelSearch(estimates, selected, offsets)


def random_channel_protocol(num_radars: int, num_channels: int, rounds: int,
                            rng: np.random.Generator) -> np.ndarray:
    """
    Random channel selection with redraw on conflict.

    Every radar starts on a uniformly drawn channel; radars sharing a channel
    redraw before the next round.

    Returns:
        Conflicting pair count per round, shape (rounds,)
    """
    if num_channels < 1 or num_radars < 0 or rounds < 1:
        raise DomainError("need at least one channel and one round")
    channels = rng.integers(0, num_channels, size=num_radars)
    conflicts = np.zeros(rounds, dtype=int)
    for r in range(rounds):
        _, inverse, counts = np.unique(channels, return_inverse=True, return_counts=True)
        conflicts[r] = int(np.sum(counts * (counts - 1) // 2))
        clashing = counts[inverse] > 1
        if clashing.any():
            channels[clashing] = rng.integers(0, num_channels, size=int(clashing.sum()))
    return conflicts


def expected_conflict_pairs(num_radars: int, num_channels: int) -> float:
    """Birthday-problem expectation C(k, 2) / N of clashing pairs after one uniform draw"""
    return num_radars * (num_radars - 1) / 2.0 / num_channels
