"""
Oscillator phase noise under the white-FM assumption.

The two-sided phase PSD is a Lorentzian pedestal

    L(f) = Lp / (1 + (f / Wp)^2)

flat at Lp up to Wp and falling at -20 dB/decade beyond. Trajectories are
drawn by shaping white Gaussian noise in the frequency domain.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft

from ..errors import DomainError
from ..scenario import db_to_linear
from ..seeding import Stream, derive_rng


@dataclass(frozen=True)
class PhaseNoiseConfig:
    """Pedestal height (dBc/Hz), pedestal width (Hz) and generator seed"""
    pedestal_dbc_hz: float
    pedestal_width_hz: float
    rng_seed: Optional[int] = None

    def __post_init__(self):
        if not self.pedestal_width_hz > 0:
            raise DomainError(f"pedestal width must be positive, got {self.pedestal_width_hz}")

    @property
    def enabled(self) -> bool:
        return np.isfinite(self.pedestal_dbc_hz)

    def psd(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Two-sided phase PSD in rad^2/Hz"""
        if not self.enabled:
            return np.zeros_like(np.asarray(freqs_hz, dtype=float))
        lp = db_to_linear(self.pedestal_dbc_hz)
        return lp / (1.0 + (np.asarray(freqs_hz, dtype=float) / self.pedestal_width_hz) ** 2)

    def generator(self, stream: Stream = Stream.PHASE_NOISE_INTERFERER) -> np.random.Generator:
        """Generator seeded with rng_seed, or drawn from seed 0 on the given stream when unset"""
        if self.rng_seed is None:
            return derive_rng(0, stream)
        return np.random.default_rng(self.rng_seed)

    def phase_variance(self) -> float:
        """Total phase variance pi * Lp * Wp of the continuous pedestal"""
        if not self.enabled:
            return 0.0
        return float(np.pi * db_to_linear(self.pedestal_dbc_hz) * self.pedestal_width_hz)


def sample_phase_noise(cfg: PhaseNoiseConfig, n: int, rate_hz: float,
                       rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Draws one zero-mean phase trajectory.

    Args:
        cfg: Pedestal parameters
        n: Number of samples
        rate_hz: Sampling rate of the trajectory
        rng: Generator; defaults to cfg.generator()

    Returns:
        Phase in radians, shape (n,)
    """
    if n < 1 or not rate_hz > 0:
        raise DomainError("phase noise needs n >= 1 samples at a positive rate")
    if not cfg.enabled:
        return np.zeros(n)
    generator = rng if rng is not None else cfg.generator()
    white = generator.standard_normal(n)
    freqs = fft.rfftfreq(n, d=1.0 / rate_hz)
    shaping = np.sqrt(cfg.psd(freqs) * rate_hz)
    shaping[0] = 0.0
    return fft.irfft(fft.rfft(white) * shaping, n=n)


class PhaseNoiseProcess:
    """A sampled phase trajectory that can be read at arbitrary instants"""
    def __init__(self, start_s: float, rate_hz: float, samples: np.ndarray):
        self.start_s = start_s
        self.rate_hz = rate_hz
        self.samples = samples
        self._grid = start_s + np.arange(samples.size) / rate_hz

    @classmethod
    def generate(cls, cfg: PhaseNoiseConfig, start_s: float, stop_s: float, rate_hz: float,
                 rng: Optional[np.random.Generator] = None) -> 'PhaseNoiseProcess':
        n = int(np.ceil((stop_s - start_s) * rate_hz)) + 2
        return cls(start_s, rate_hz, sample_phase_noise(cfg, n, rate_hz, rng))

    def at(self, times) -> np.ndarray:
        """Linearly interpolated phase at the given times"""
        return np.interp(times, self._grid, self.samples)
