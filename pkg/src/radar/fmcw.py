"""
FMCW chirp-sequence radar: waveform parameters, beat-signal synthesis,
2-D range-Doppler processing and range-Doppler coupling correction.

Beat samples follow the post-dechirp model directly

    y[k, n] = gamma * exp(j2pi(-alpha*tau + fc*nu) n Ts) * exp(j2pi fc nu k T) + w[k, n]

for fast-time indices n = n_max .. N-1, i.e. only the part of each chirp where
every echo up to tau_max has arrived.
"""
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import fft, signal

from ..errors import DimensionMismatchError, DomainError, OutOfRangeError
from ..scenario import SPEED_OF_LIGHT, NoiseConfig, Target

logger = logging.getLogger(__name__)

BEAT_MAGIC = b'BEATMTX1'
BEAT_HEADER = struct.Struct('<8sQQQ')

# floor(x + eps) keeps T/Ts = 1000.0000000001 from losing a sample
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class ChirpConfig:
    """
    Waveform and sampling parameters of one FMCW radar.

    Args:
        carrier_hz: Start frequency f_c of every chirp
        bandwidth_hz: Sweep bandwidth B
        chirp_s: Chirp duration T
        num_chirps: Chirps per CPI, K
        interest_bandwidth_hz: Low-pass (ADC) bandwidth B_s
        sample_period_s: Complex sampling period; defaults to 1/B_s
        duty_cycle: Fraction u of the frame the radar transmits
        frame_s: Frame duration T_f; defaults to K*T/u
    """
    carrier_hz: float
    bandwidth_hz: float
    chirp_s: float
    num_chirps: int
    interest_bandwidth_hz: float
    sample_period_s: Optional[float] = None
    duty_cycle: float = 1.0
    frame_s: Optional[float] = None

    def __post_init__(self):
        if self.sample_period_s is None:
            object.__setattr__(self, 'sample_period_s', 1.0 / self.interest_bandwidth_hz)
        if self.frame_s is None and self.duty_cycle > 0:
            object.__setattr__(self, 'frame_s', self.num_chirps * self.chirp_s / self.duty_cycle)
        self._validate()

    def _validate(self):
        if not (self.carrier_hz > 0 and self.bandwidth_hz > 0 and self.chirp_s > 0):
            raise DomainError("carrier, bandwidth and chirp duration must be positive")
        if self.num_chirps < 1:
            raise DomainError(f"at least one chirp per CPI is required, got {self.num_chirps}")
        if not 0 < self.interest_bandwidth_hz <= self.bandwidth_hz:
            raise DomainError("interest bandwidth B_s must satisfy 0 < B_s <= B")
        if not self.sample_period_s > 0:
            raise DomainError("sample period must be positive")
        if not 0.0 <= self.duty_cycle <= 1.0:
            raise DomainError(f"duty cycle must lie in [0, 1], got {self.duty_cycle}")
        if self.tau_max_s > self.chirp_s:
            raise DomainError("tau_max = B_s/alpha must not exceed the chirp duration")
        if self.num_samples <= self.n_max:
            raise DomainError("chirp holds no samples after tau_max")
        if self.frame_s is None or self.num_chirps * self.chirp_s > self.duty_cycle * self.frame_s * (1 + 1e-12):
            raise DomainError("duty-cycle consistency K*T <= u*T_f violated")

    @property
    def slope(self) -> float:
        """Chirp slope alpha = B/T"""
        return self.bandwidth_hz / self.chirp_s

    @property
    def tau_max_s(self) -> float:
        return self.interest_bandwidth_hz / self.slope

    @property
    def delay_period_s(self) -> float:
        """Span 1/(alpha Ts) of the circular delay axis; tau_max when Ts = 1/B_s"""
        return 1.0 / (self.slope * self.sample_period_s)

    @property
    def num_samples(self) -> int:
        """N = floor(T/Ts) + 1"""
        return int(np.floor(self.chirp_s / self.sample_period_s + _FLOOR_EPS)) + 1

    @property
    def n_max(self) -> int:
        return int(np.floor(self.tau_max_s / self.sample_period_s + _FLOOR_EPS))

    @property
    def fast_time_samples(self) -> int:
        return self.num_samples - self.n_max

    @property
    def processing_gain(self) -> int:
        """G_p = K (N - n_max)"""
        return self.num_chirps * self.fast_time_samples

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def max_range_m(self) -> float:
        return SPEED_OF_LIGHT * self.tau_max_s / 2.0

    @property
    def max_unambiguous_velocity_mps(self) -> float:
        """Half-width of the Doppler interval, lambda/(4T)"""
        return self.wavelength_m / (4.0 * self.chirp_s)

    def fast_time(self) -> np.ndarray:
        """Sampling instants n*Ts within a chirp, n = n_max .. N-1"""
        return np.arange(self.n_max, self.num_samples) * self.sample_period_s

    def with_chirps(self, num_chirps: int) -> 'ChirpConfig':
        frame = self.frame_s * num_chirps / self.num_chirps
        return replace(self, num_chirps=num_chirps, frame_s=frame)


def chirp_phase(config: ChirpConfig, t):
    """Transmit phase 2pi(fc t + alpha t^2 / 2) within one chirp"""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > config.chirp_s):
        raise DomainError("chirp phase is defined only on [0, T]")
    phase = 2.0 * np.pi * (config.carrier_hz * t_arr + 0.5 * config.slope * t_arr ** 2)
    return float(phase) if np.ndim(phase) == 0 else phase


def resolution(config: ChirpConfig) -> Tuple[float, float]:
    """Returns (delta_R, delta_v) = (c/(2B), lambda/(2KT))"""
    delta_r = SPEED_OF_LIGHT / (2.0 * config.bandwidth_hz)
    delta_v = config.wavelength_m / (2.0 * config.num_chirps * config.chirp_s)
    return delta_r, delta_v


@dataclass
class BeatMatrix:
    """Slow-time x fast-time dechirped samples of one CPI"""
    samples: np.ndarray
    config: ChirpConfig

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        expected = (self.config.num_chirps, self.config.fast_time_samples)
        if self.samples.shape != expected:
            raise DimensionMismatchError(f"beat matrix shape {self.samples.shape} != {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("beat matrix contains non-finite samples")

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def dump(self, path: Path):
        """Writes the little-endian binary dump: 32-byte header then interleaved re/im float64"""
        header = BEAT_HEADER.pack(BEAT_MAGIC, self.config.num_chirps,
                                  self.config.num_samples, self.config.n_max)
        with open(path, 'wb') as fh:
            fh.write(header)
            fh.write(self.samples.astype('<c16').tobytes())

    @classmethod
    def load(cls, path: Path, config: ChirpConfig) -> 'BeatMatrix':
        raw = Path(path).read_bytes()
        magic, k, n, n_max = BEAT_HEADER.unpack_from(raw)
        if magic != BEAT_MAGIC:
            raise DomainError(f"{path} is not a beat matrix dump")
        if (k, n, n_max) != (config.num_chirps, config.num_samples, config.n_max):
            raise DimensionMismatchError(f"dump dimensions {(k, n, n_max)} do not match the config")
        data = np.frombuffer(raw, dtype='<c16', offset=BEAT_HEADER.size)
        return cls(data.reshape(k, n - n_max).copy(), config)


def complex_noise(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    """Circular complex Gaussian samples of the given variance"""
    if variance == 0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_beat(config: ChirpConfig,
                    targets: Sequence[Tuple[Target, float]],
                    noise: NoiseConfig = NoiseConfig(),
                    phase_noise=None,
                    rng: Optional[np.random.Generator] = None) -> BeatMatrix:
    """
    Generates the dechirped CPI for a set of point targets.

    Args:
        config: Victim waveform
        targets: (target, |gamma|^2) pairs; the reflection phase comes from the target
        noise: Receiver noise variance and seed
        phase_noise: Optional oscillator phase process exposing at(times); the echo
            then carries theta(t - tau) - theta(t)
        rng: Overrides the noise generator built from noise.rng_seed

    Returns:
        BeatMatrix of shape K x (N - n_max)
    """
    k = np.arange(config.num_chirps)[:, None]
    t_fast = config.fast_time()[None, :]
    samples = np.zeros((config.num_chirps, config.fast_time_samples), dtype=complex)

    for target, power_gain in targets:
        tau = target.delay_s
        if tau > config.tau_max_s:
            raise OutOfRangeError(
                f"target at {target.range_m:.2f} m is beyond the maximum range {config.max_range_m:.2f} m")
        nu = target.doppler
        gamma = np.sqrt(power_gain) * np.exp(1j * target.phase_rad)
        beat_hz = -config.slope * tau + config.carrier_hz * nu
        phase = 2 * np.pi * (beat_hz * t_fast + config.carrier_hz * nu * k * config.chirp_s)
        if phase_noise is not None:
            t_abs = k * config.chirp_s + t_fast
            phase = phase + phase_noise.at(t_abs - tau) - phase_noise.at(t_abs)
        samples += gamma * np.exp(1j * phase)

    generator = rng if rng is not None else noise.generator()
    samples += complex_noise(generator, noise.variance_w, samples.shape)
    logger.debug("synthesized %d target(s) on a %s beat matrix", len(targets), samples.shape)
    return BeatMatrix(samples, config)


@dataclass
class RangeDopplerMap:
    """
    |z(tau_hat, nu_hat)|^2 on the padded DFT grid.

    power has shape (Doppler bins, delay bins). The delay axis spans
    [0, tau_max) and the Doppler axis is centred on zero.
    """
    power: np.ndarray
    delay_axis_s: np.ndarray
    doppler_axis: np.ndarray
    zero_pad: Tuple[int, int]
    config: ChirpConfig
    window: str = 'rect'

    @property
    def shape(self) -> Tuple[int, int]:
        return self.power.shape

    def peak_index(self) -> Tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.power), self.power.shape))

    def delay_profile(self) -> np.ndarray:
        """Range profile summed over Doppler"""
        return self.power.sum(axis=0)


def _taper(window: str, length: int) -> np.ndarray:
    name = 'boxcar' if window in ('rect', 'rectangular', 'none') else window
    return signal.get_window(name, length, fftbins=False)


def range_doppler_map(beat: BeatMatrix, window: str = 'rect',
                      zero_pad: Tuple[int, int] = (4, 4)) -> RangeDopplerMap:
    """
    Evaluates the 2-D delay-Doppler spectrum of a CPI.

    Fast time is correlated with exp(+j2pi alpha tau_hat n Ts) so bin q sits at
    tau_hat = q * tau_max / N_pad; slow time with exp(-j2pi fc nu_hat k T).

    Args:
        beat: CPI samples
        window: 'rect' or any scipy.signal window name, applied on both axes
        zero_pad: Padding factors (slow time, fast time)
    """
    cfg = beat.config
    pad_k, pad_n = (int(p) for p in zero_pad)
    if pad_k < 1 or pad_n < 1:
        raise DomainError("zero-pad factors must be >= 1")
    k_len, n_len = beat.samples.shape
    tapered = beat.samples * _taper(window, k_len)[:, None] * _taper(window, n_len)[None, :]

    n_fft = pad_n * n_len
    k_fft = pad_k * k_len
    # ifft * n computes the sum with the positive exponent
    fast = fft.ifft(tapered, n=n_fft, axis=1) * n_fft
    spectrum = fft.fftshift(fft.fft(fast, n=k_fft, axis=0), axes=0)
    power = np.abs(spectrum) ** 2

    freq_step = 1.0 / (n_fft * cfg.sample_period_s)
    delay_axis = np.arange(n_fft) * freq_step / cfg.slope
    doppler_axis = fft.fftshift(fft.fftfreq(k_fft)) / (cfg.carrier_hz * cfg.chirp_s)
    return RangeDopplerMap(power, delay_axis, doppler_axis, (pad_k, pad_n), cfg, window)


@dataclass(frozen=True)
class Detection:
    """One CFAR detection; range and velocity are filled by correct_coupling"""
    tau_hat: float
    nu_hat: float
    peak_power: float
    corrected_range: float = field(default=float('nan'))
    velocity: float = field(default=float('nan'))


def correct_coupling(det: Detection, config: ChirpConfig) -> Detection:
    """
    Adds the Doppler-induced delay shift fc*nu/alpha back and converts to (R, v).

    The delay axis is circular: a peak at tau - fc*nu/alpha below zero shows up
    at the top of the axis, so the corrected delay is taken modulo its span.
    """
    tau = np.mod(det.tau_hat + config.carrier_hz * det.nu_hat / config.slope, config.delay_period_s)
    corrected = float(SPEED_OF_LIGHT * tau / 2.0)
    velocity = SPEED_OF_LIGHT * det.nu_hat / 2.0
    return replace(det, corrected_range=corrected, velocity=velocity)


def parabolic_offset(left: float, centre: float, right: float) -> float:
    """Vertex offset in bins of the parabola through three equally spaced samples"""
    denom = left - 2.0 * centre + right
    if denom == 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def refine_peak(rd_map: RangeDopplerMap, row: int, col: int) -> Tuple[float, float]:
    """Parabolic refinement of a map cell on both axes; returns (tau_hat, nu_hat)"""
    mag = np.sqrt(rd_map.power)
    rows, cols = mag.shape
    d_row = parabolic_offset(mag[(row - 1) % rows, col], mag[row, col], mag[(row + 1) % rows, col])
    d_col = parabolic_offset(mag[row, (col - 1) % cols], mag[row, col], mag[row, (col + 1) % cols])
    tau_step = rd_map.delay_axis_s[1] - rd_map.delay_axis_s[0] if cols > 1 else 0.0
    nu_step = rd_map.doppler_axis[1] - rd_map.doppler_axis[0] if rows > 1 else 0.0
    return rd_map.delay_axis_s[col] + d_col * tau_step, rd_map.doppler_axis[row] + d_row * nu_step
