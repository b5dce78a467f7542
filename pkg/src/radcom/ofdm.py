"""
Stepped-frequency OFDM radar.

M consecutive frames of L symbols each are sent on carriers f_m, so a receiver
with an N*df wide ADC synthesises an aperture of M*N*df. The received symbol
on subcarrier n of symbol l in frame m is

    y[m, l, n] = gamma x[m, l, n] exp(-j2pi (f_m + n df) tau) exp(j2pi f0 (mL + l + 1) Tsym nu)

with tau = 2R/c, nu = 2v/c and Tsym = 1/df + Tcp.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from ..enums import HopPattern
from ..errors import DimensionMismatchError, DomainError, ModelViolationError, SingularFisherError
from ..scenario import SPEED_OF_LIGHT, NoiseConfig, Target, db_to_linear
from ..radar.fmcw import complex_noise

logger = logging.getLogger(__name__)

QPSK = np.exp(1j * np.pi * (0.25 + 0.5 * np.arange(4)))

# conditioning limit of the scaled Fisher matrix
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SteppedOfdmConfig:
    """
    Waveform of one stepped-frequency OFDM radar.

    Args:
        base_carrier_hz: f0, carrier of the first hop
        subcarrier_spacing_hz: df
        num_subcarriers: N per frame
        num_frames: M hops
        symbols_per_frame: L
        cp_s: Cyclic prefix duration Tcp, the largest delay the model allows
        hop_pattern: Linear stepping or a seeded random permutation
        hop_seed: Seed of the random permutation
        total_bandwidth_hz: Optional budget B_tot that M*N*df must fit
        total_time_s: Optional per-vehicle budget that M*L*Tsym must fit
    """
    base_carrier_hz: float
    subcarrier_spacing_hz: float
    num_subcarriers: int
    num_frames: int = 1
    symbols_per_frame: int = 1
    cp_s: float = 400e-9
    hop_pattern: HopPattern = HopPattern.LINEAR
    hop_seed: int = 0
    total_bandwidth_hz: Optional[float] = None
    total_time_s: Optional[float] = None

    def __post_init__(self):
        if not (self.base_carrier_hz > 0 and self.subcarrier_spacing_hz > 0):
            raise DomainError("carrier and subcarrier spacing must be positive")
        if min(self.num_subcarriers, self.num_frames, self.symbols_per_frame) < 1:
            raise DomainError("N, M and L must all be at least 1")
        if self.cp_s < 0:
            raise DomainError("cyclic prefix must be non-negative")
        if self.total_bandwidth_hz is not None and self.synthetic_bandwidth_hz > self.total_bandwidth_hz * (1 + 1e-12):
            raise DomainError(f"M*N*df = {self.synthetic_bandwidth_hz:.4g} Hz exceeds B_tot")
        if self.total_time_s is not None and self.duration_s > self.total_time_s * (1 + 1e-12):
            raise DomainError(f"M*L*Tsym = {self.duration_s:.4g} s exceeds the time budget")

    @property
    def symbol_s(self) -> float:
        return 1.0 / self.subcarrier_spacing_hz + self.cp_s

    @property
    def frame_bandwidth_hz(self) -> float:
        return self.num_subcarriers * self.subcarrier_spacing_hz

    @property
    def synthetic_bandwidth_hz(self) -> float:
        return self.num_frames * self.frame_bandwidth_hz

    @property
    def frame_s(self) -> float:
        return self.symbols_per_frame * self.symbol_s

    @property
    def duration_s(self) -> float:
        return self.num_frames * self.frame_s

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.num_frames, self.symbols_per_frame, self.num_subcarriers)

    @property
    def max_range_m(self) -> float:
        return SPEED_OF_LIGHT * self.cp_s / 2.0

    @property
    def delay_bin_s(self) -> float:
        return 1.0 / self.synthetic_bandwidth_hz

    @property
    def doppler_bin(self) -> float:
        return 1.0 / (self.base_carrier_hz * self.duration_s)

    def hop_order(self) -> np.ndarray:
        if self.hop_pattern is HopPattern.RANDOM:
            return np.random.default_rng(self.hop_seed).permutation(self.num_frames)
        return np.arange(self.num_frames)

    def carriers(self) -> np.ndarray:
        """f_m for m = 0 .. M-1"""
        return self.base_carrier_hz + self.hop_order() * self.frame_bandwidth_hz

    def frequencies(self) -> np.ndarray:
        """(M, N) absolute subcarrier frequencies f_m + n df"""
        n = np.arange(self.num_subcarriers) * self.subcarrier_spacing_hz
        return self.carriers()[:, None] + n[None, :]

    def slow_times(self) -> np.ndarray:
        """(M, L) symbol times (mL + l + 1) Tsym"""
        m = np.arange(self.num_frames)[:, None]
        l = np.arange(self.symbols_per_frame)[None, :]
        return (m * self.symbols_per_frame + l + 1) * self.symbol_s

    def narrowband(self) -> 'SteppedOfdmConfig':
        """The same radar without hopping"""
        return replace(self, num_frames=1)


@dataclass
class SymbolGrid:
    """Known transmit symbols x[m, l, n]"""
    symbols: np.ndarray

    @classmethod
    def qpsk(cls, config: SteppedOfdmConfig, rng: np.random.Generator) -> 'SymbolGrid':
        """Unit-modulus quaternary symbols"""
        return cls(QPSK[rng.integers(0, 4, size=config.shape)])

    @classmethod
    def pilots(cls, config: SteppedOfdmConfig) -> 'SymbolGrid':
        return cls(np.ones(config.shape, dtype=complex))

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.symbols) ** 2))


@dataclass
class RxCube:
    """Received symbols y[m, l, n]"""
    samples: np.ndarray
    config: SteppedOfdmConfig

    def __post_init__(self):
        if self.samples.shape != self.config.shape:
            raise DimensionMismatchError(f"cube shape {self.samples.shape} != (M, L, N) {self.config.shape}")


def model_phase(config: SteppedOfdmConfig, tau_s: float, nu: float) -> np.ndarray:
    """Phase of the noiseless echo on the (M, L, N) grid, in radians"""
    f = config.frequencies()[:, None, :]
    t = config.slow_times()[:, :, None]
    return -2.0 * np.pi * f * tau_s + 2.0 * np.pi * config.base_carrier_hz * t * nu


def rx_model(config: SteppedOfdmConfig, grid: SymbolGrid, tau_s: float, nu: float, gain: complex = 1.0) -> np.ndarray:
    """Noiseless received symbols for a delay and a dimensionless Doppler"""
    if tau_s > config.cp_s:
        raise ModelViolationError(f"delay {tau_s:.3e} s exceeds the cyclic prefix {config.cp_s:.3e} s")
    if grid.symbols.shape != config.shape:
        raise DimensionMismatchError("symbol grid does not match the configuration")
    return gain * grid.symbols * np.exp(1j * model_phase(config, tau_s, nu))


def simulate_rx_cube(config: SteppedOfdmConfig, grid: SymbolGrid, target: Target, gain: complex = 1.0,
                     noise: NoiseConfig = NoiseConfig(), rng: Optional[np.random.Generator] = None) -> RxCube:
    """
    Received cube of one point target plus circular Gaussian noise.

    Raises:
        ModelViolationError: 2R/c longer than the cyclic prefix
    """
    samples = rx_model(config, grid, target.delay_s, target.doppler, gain)
    generator = rng if rng is not None else noise.generator()
    samples = samples + complex_noise(generator, noise.variance_w, samples.shape)
    return RxCube(samples, config)


@dataclass(frozen=True)
class OfdmEstimate:
    tau_s: float
    nu: float
    gain: complex
    peak_power: float

    @property
    def range_m(self) -> float:
        return SPEED_OF_LIGHT * self.tau_s / 2.0

    @property
    def velocity_mps(self) -> float:
        return SPEED_OF_LIGHT * self.nu / 2.0


@dataclass
class DelayDopplerMap:
    """|S(tau, nu)|^2 on the search grid, Doppler along rows"""
    power: np.ndarray
    delay_axis_s: np.ndarray
    doppler_axis: np.ndarray
    estimate: OfdmEstimate
    coupling_corrected: bool = True


def default_search_grid(config: SteppedOfdmConfig, max_speed_mps: float = 60.0,
                        oversample: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """Delay grid over [0, Tcp] and Doppler grid over +-max speed, both oversampled"""
    d_tau = config.delay_bin_s / oversample
    delays = np.arange(0.0, config.cp_s + 0.5 * d_tau, d_tau)
    nu_max = 2.0 * max_speed_mps / SPEED_OF_LIGHT
    d_nu = config.doppler_bin / oversample
    k = int(np.ceil(nu_max / d_nu))
    return delays, np.arange(-k, k + 1) * d_nu


def _doppler_times(config: SteppedOfdmConfig, coupling_corrected: bool) -> np.ndarray:
    """Slow times the Doppler steering uses; without correction the frame offset mL is dropped"""
    if coupling_corrected:
        return config.slow_times()
    l = np.arange(config.symbols_per_frame)
    return np.tile((l + 1) * config.symbol_s, (config.num_frames, 1))


def _correlate(z: np.ndarray, config: SteppedOfdmConfig, delays: np.ndarray, dopplers: np.ndarray,
               coupling_corrected: bool) -> np.ndarray:
    """S[p, q] = sum z * conj(model) evaluated frame by frame"""
    f0 = config.base_carrier_hz
    n = np.arange(config.num_subcarriers) * config.subcarrier_spacing_hz
    d_tau = np.exp(2j * np.pi * np.outer(n, delays))                       # (N, Q)
    times = _doppler_times(config, coupling_corrected)
    out = np.zeros((len(dopplers), len(delays)), dtype=complex)
    for m, f_m in enumerate(config.carriers()):
        d_nu = np.exp(2j * np.pi * f0 * np.outer(times[m], dopplers))      # (L, P)
        s_m = d_nu.conj().T @ z[m] @ d_tau
        out += s_m * np.exp(2j * np.pi * f_m * delays)[None, :]
    return out


def _correlate_point(z: np.ndarray, config: SteppedOfdmConfig, tau_s: float, nu: float,
                     coupling_corrected: bool) -> complex:
    f = config.frequencies()[:, None, :]
    t = _doppler_times(config, coupling_corrected)[:, :, None]
    phase = -2.0 * np.pi * f * tau_s + 2.0 * np.pi * config.base_carrier_hz * t * nu
    return complex(np.sum(z * np.exp(-1j * phase)))


def matched_filter(cube: RxCube, grid: SymbolGrid, delays: Optional[np.ndarray] = None,
                   dopplers: Optional[np.ndarray] = None, coupling_corrected: bool = True,
                   refine: bool = True) -> DelayDopplerMap:
    """
    Divides out the known symbols and correlates against the echo model.

    Args:
        cube: Received symbols
        grid: Transmitted symbols
        delays: Delay search grid; defaults to default_search_grid
        dopplers: Dimensionless Doppler search grid
        coupling_corrected: Include the inter-frame Doppler phase in the steering;
            False reproduces the naive processing whose delay is biased by hopping
        refine: Polish the grid peak with Nelder-Mead on |S|^2

    Returns:
        The map and the peak estimate
    """
    config = cube.config
    if grid.symbols.shape != cube.samples.shape:
        raise DimensionMismatchError("symbol grid does not match the received cube")
    if delays is None or dopplers is None:
        default_delays, default_dopplers = default_search_grid(config)
        delays = default_delays if delays is None else delays
        dopplers = default_dopplers if dopplers is None else dopplers
    delays = np.asarray(delays, dtype=float)
    dopplers = np.asarray(dopplers, dtype=float)

    z = cube.samples / grid.symbols
    s = _correlate(z, config, delays, dopplers, coupling_corrected)
    power = np.abs(s) ** 2
    p, q = np.unravel_index(int(np.argmax(power)), power.shape)
    tau, nu = float(delays[q]), float(dopplers[p])

    count = z.size
    if refine:
        tau_bin, nu_bin = config.delay_bin_s, config.doppler_bin

        def cost(x):
            return -abs(_correlate_point(z, config, x[0] * tau_bin, x[1] * nu_bin, coupling_corrected)) ** 2 / count ** 2

        x0 = np.array([tau / tau_bin, nu / nu_bin])
        simplex = np.vstack([x0, x0 + [0.25, 0.0], x0 + [0.0, 0.25]])
        result = optimize.minimize(cost, x0, method='Nelder-Mead',
                                   options={'initial_simplex': simplex, 'xatol': 1e-6, 'fatol': 1e-14,
                                            'maxiter': 2000})
        if result.fun < cost(x0):
            tau, nu = float(result.x[0] * tau_bin), float(result.x[1] * nu_bin)

    s_hat = _correlate_point(z, config, tau, nu, coupling_corrected)
    estimate = OfdmEstimate(tau, nu, s_hat / count, abs(s_hat) ** 2)
    return DelayDopplerMap(power, delays, dopplers, estimate, coupling_corrected)


def coupling_bias_s(config: SteppedOfdmConfig, nu: float) -> float:
    """Delay shift f0 L Tsym nu / (N df) that ignoring the inter-frame Doppler phase mimics"""
    return config.base_carrier_hz * config.symbols_per_frame * config.symbol_s * nu / config.frame_bandwidth_hz


def _centred_axes(config: SteppedOfdmConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Frequency and slow-time axes centred on their grid means"""
    f = config.frequencies()
    t = config.slow_times()
    return f - f.mean(), t - t.mean()


def _parameter_scales(config: SteppedOfdmConfig, gain: complex) -> np.ndarray:
    g = max(abs(gain), 1.0)
    return np.array([config.delay_bin_s, config.doppler_bin, g, g])


def fisher_information(config: SteppedOfdmConfig, snr_db: float, gain: complex = 1.0,
                       method: str = 'analytic', grid: Optional[SymbolGrid] = None) -> np.ndarray:
    """
    Fisher information of (tau, nu, Re gamma, Im gamma).

    The common phases f_mean*tau and f0*t_mean*nu are absorbed into gamma,
    which leaves the delay and Doppler bounds unchanged and keeps the matrix
    well conditioned.

    Args:
        config: Waveform
        snr_db: Per-subcarrier SNR |gamma|^2 / sigma^2 at unit symbol power
        gain: Complex amplitude gamma
        method: 'analytic' inner products, or 'numeric' central differences of the mean
        grid: Symbols for the numeric method; unit-modulus pilots by default
    """
    if not np.isfinite(snr_db):
        raise DomainError("SNR must be finite")
    sigma2 = abs(gain) ** 2 / db_to_linear(snr_db)
    f, t = _centred_axes(config)
    f0 = config.base_carrier_hz
    L, N = config.symbols_per_frame, config.num_subcarriers

    if method == 'analytic':
        g2 = abs(gain) ** 2
        s_ff = L * np.sum(f ** 2)
        s_tt = N * np.sum(t ** 2)
        s_ft = np.sum(f.sum(axis=1) * t.sum(axis=1))
        count = f.size * L
        info = np.zeros((4, 4))
        info[0, 0] = (2 * np.pi) ** 2 * g2 * s_ff
        info[1, 1] = (2 * np.pi * f0) ** 2 * g2 * s_tt
        info[0, 1] = info[1, 0] = -(2 * np.pi) ** 2 * f0 * g2 * s_ft
        info[2, 2] = info[3, 3] = count
        return 2.0 / sigma2 * info

    if method != 'numeric':
        raise DomainError(f"unknown Fisher information method '{method}'")
    symbols = (grid if grid is not None else SymbolGrid.pilots(config)).symbols
    f3, t3 = f[:, None, :], t[:, :, None]

    def mean(theta):
        tau, nu, re, im = theta
        return (re + 1j * im) * symbols * np.exp(-2j * np.pi * f3 * tau + 2j * np.pi * f0 * t3 * nu)

    theta = np.array([0.0, 0.0, np.real(gain), np.imag(gain)])
    steps = 1e-6 * _parameter_scales(config, gain)
    jac = np.empty((symbols.size, 4), dtype=complex)
    for k in range(4):
        delta = np.zeros(4)
        delta[k] = steps[k]
        jac[:, k] = ((mean(theta + delta) - mean(theta - delta)) / (2 * steps[k])).ravel()
    return 2.0 / sigma2 * np.real(jac.conj().T @ jac)


def crb(config: SteppedOfdmConfig, snr_db: float, gain: complex = 1.0,
        method: str = 'analytic') -> Tuple[float, float]:
    """
    Cramer-Rao bounds on range and velocity.

    Returns:
        (std_range_m, std_velocity_mps)

    Raises:
        SingularFisherError: the waveform cannot resolve delay or Doppler (e.g. M = L = 1)
    """
    info = fisher_information(config, snr_db, gain, method)
    scales = _parameter_scales(config, gain)
    scaled = info * np.outer(scales, scales)
    if not np.all(np.isfinite(scaled)) or np.linalg.cond(scaled) > _MAX_CONDITION:
        raise SingularFisherError(
            f"Fisher information is singular for M={config.num_frames}, L={config.symbols_per_frame}, "
            f"N={config.num_subcarriers}")
    bound = np.linalg.inv(scaled) * np.outer(scales, scales)
    std_tau = np.sqrt(bound[0, 0])
    std_nu = np.sqrt(bound[1, 1])
    return SPEED_OF_LIGHT * std_tau / 2.0, SPEED_OF_LIGHT * std_nu / 2.0


@dataclass(frozen=True)
class AccuracySpec:
    """Per-vehicle accuracy requirement and the SNR it is evaluated at"""
    max_range_std_m: float = 0.1
    max_velocity_std_mps: float = 0.1
    subcarrier_snr_db: float = -30.0

    def __post_init__(self):
        if not (self.max_range_std_m > 0 and self.max_velocity_std_mps > 0):
            raise DomainError("accuracy bounds must be positive")
        if not np.isfinite(self.subcarrier_snr_db):
            raise DomainError("subcarrier SNR must be finite")

    def satisfied_by(self, std_range_m: float, std_velocity_mps: float) -> bool:
        return std_range_m <= self.max_range_std_m and std_velocity_mps <= self.max_velocity_std_mps
