import unittest

import numpy as np

from src.enums import CoherenceClass
from src.errors import DimensionMismatchError, DomainError
from src.radar.fmcw import ChirpConfig, synthesize_beat
from src.radar.interference import (InterfererSpec, averaged_range_profile, classify_coherence,
                                    dechirped_interference, expected_in_band_fraction, inject,
                                    interference_probability, noise_floor_median, peak_width_3db,
                                    range_profile, regime_asymptotics, sir_bound, sir_bound_factored,
                                    skirt_power_ratio, target_masked)
from src.radar.phase_noise import PhaseNoiseConfig, PhaseNoiseProcess, sample_phase_noise
from src.scenario import SPEED_OF_LIGHT, Target
from src.seeding import Stream


def victim(**overrides):
    params = dict(carrier_hz=77e9, bandwidth_hz=1e9, chirp_s=20e-6, num_chirps=4, interest_bandwidth_hz=50e6)
    params.update(overrides)
    return ChirpConfig(**params)


def aligned(config, distance_m, power_gain=1.0, ratio=1.0, **overrides):
    """Interferer whose start offset puts its ghost at its own distance"""
    return InterfererSpec.at_distance(config, distance_m, power_gain, ratio,
                                      start_offset_s=distance_m / SPEED_OF_LIGHT, **overrides)


class TestInterferenceProbability(unittest.TestCase):
    def test_highway_waveform(self):
        """u = 0.2, 1 GHz in 30 us, tau_max = 1 us gives f = 6.67e-3."""
        f = interference_probability(0.2, 1e9 / 30e-6, 1e-6, 1e9)
        self.assertAlmostEqual(f, 6.6667e-3, delta=1e-6)

    def test_clamped_and_validated(self):
        self.assertEqual(interference_probability(1.0, 1e15, 1e-6, 1e9), 1.0)
        with self.assertRaises(DomainError):
            interference_probability(1.5, 1e13, 1e-6, 1e9)

    def test_matched_slopes_fraction(self):
        """With equal slopes and random offsets the hit fraction is tau_max / T."""
        config = victim(num_chirps=1)
        fraction = expected_in_band_fraction(config, InterfererSpec.matching(config), 200,
                                             np.random.default_rng(4))
        self.assertAlmostEqual(fraction, config.tau_max_s / config.chirp_s, delta=0.005)

    def test_regime_asymptotics(self):
        """Equal slopes interfere with probability u B_s / B for a whole chirp."""
        config = victim()
        regimes = regime_asymptotics(0.5, config, 2 * config.slope)
        self.assertAlmostEqual(regimes['equal'].probability, 0.5 * 50e6 / 1e9)
        self.assertAlmostEqual(regimes['equal'].duration_s, config.chirp_s)
        self.assertAlmostEqual(regimes['faster'].duration_s, config.tau_max_s)
        self.assertAlmostEqual(regimes['faster'].simultaneous, 2.0)
        self.assertEqual(regimes['slower'].duration_s, float('inf'))


class TestDechirpedInterference(unittest.TestCase):
    def setUp(self):
        self.config = victim()

    def test_ghost_matches_true_target(self):
        """An aligned equal-slope interferer looks like a target at its distance with the same gain."""
        gain = 1e-6
        ghost = dechirped_interference(self.config, aligned(self.config, 100.0, gain))
        self.assertEqual(ghost.in_band_fraction, 1.0)
        echo = synthesize_beat(self.config, [(Target(100.0), gain)])
        axis, p_ghost = range_profile(ghost.samples, self.config)
        _, p_echo = range_profile(echo.samples, self.config)
        self.assertAlmostEqual(axis[np.argmax(p_ghost)], 100.0, delta=0.2)
        self.assertLess(abs(10 * np.log10(p_ghost.max() / p_echo.max())), 1.0)

    def test_mismatch_spreads_floor(self):
        """A 10 % slope mismatch raises the median of the range profile above the ghost case."""
        _, coherent = range_profile(dechirped_interference(self.config, aligned(self.config, 100.0)).samples,
                                    self.config)
        _, spread = range_profile(dechirped_interference(self.config, aligned(self.config, 100.0, ratio=1.1)).samples,
                                  self.config)
        self.assertGreater(noise_floor_median(spread), 100 * noise_floor_median(coherent))

    def test_out_of_band_carrier(self):
        """An interferer 100 MHz above the victim's band never lands in the ADC band."""
        intf = aligned(self.config, 50.0, carrier_hz=self.config.carrier_hz + 1.1e9)
        self.assertEqual(dechirped_interference(self.config, intf).in_band_fraction, 0.0)

    def test_random_offset_is_seeded(self):
        intf = InterfererSpec.matching(self.config, oneway_delay_s=1e-7)
        first = dechirped_interference(self.config, intf, np.random.default_rng(8))
        second = dechirped_interference(self.config, intf, np.random.default_rng(8))
        self.assertEqual(first.start_offset_s, second.start_offset_s)
        np.testing.assert_array_equal(first.samples, second.samples)

    def test_default_generators_repeat(self):
        """Without a generator or seed the offset and the interferer phase noise still repeat."""
        intf = InterfererSpec.matching(self.config, oneway_delay_s=1e-7,
                                       phase_noise=PhaseNoiseConfig(-70.0, 200e3))
        first = dechirped_interference(self.config, intf)
        second = dechirped_interference(self.config, intf)
        self.assertEqual(first.start_offset_s, second.start_offset_s)
        np.testing.assert_array_equal(first.samples, second.samples)

    def test_inject(self):
        """Injection adds samples and refuses mismatched shapes."""
        beat = synthesize_beat(self.config, [(Target(30.0), 1.0)])
        ghost = dechirped_interference(self.config, aligned(self.config, 100.0))
        total = inject(beat, ghost)
        np.testing.assert_allclose(total.samples, beat.samples + ghost.samples)
        with self.assertRaises(DimensionMismatchError):
            inject(beat, np.zeros((1, 1)))

    def test_invalid_spec(self):
        with self.assertRaises(DomainError):
            InterfererSpec(1e9, 20e-6, oneway_delay_s=-1.0)
        with self.assertRaises(DomainError):
            InterfererSpec(1e9, 20e-6, duty_cycle=0.5)


class TestCoherence(unittest.TestCase):
    def setUp(self):
        self.config = victim()

    def test_classes(self):
        """Identical waveform is a ghost, a small slope offset smears, a large one raises the floor."""
        self.assertEqual(classify_coherence(self.config, aligned(self.config, 50.0)), CoherenceClass.COHERENT)
        self.assertEqual(classify_coherence(self.config, aligned(self.config, 50.0, ratio=1.0003)),
                         CoherenceClass.PARTIALLY_COHERENT)
        self.assertEqual(classify_coherence(self.config, aligned(self.config, 50.0, ratio=4.0)),
                         CoherenceClass.INCOHERENT)

    def test_phase_noise_breaks_coherence(self):
        intf = aligned(self.config, 50.0, phase_noise=PhaseNoiseConfig(-70.0, 200e3, 1))
        self.assertNotEqual(classify_coherence(self.config, intf), CoherenceClass.COHERENT)


class TestSirBound(unittest.TestCase):
    def test_factored_form_agrees(self):
        """Geometry times waveform factor equals the direct rule of thumb."""
        config = victim(num_chirps=64, duty_cycle=0.5)
        wavelength = config.wavelength_m
        rcs, r, d = 10.0, 100.0, 70.0
        gamma2 = rcs * wavelength ** 2 / ((4 * np.pi) ** 3 * d ** 4)
        gamma_int2 = wavelength ** 2 / ((4 * np.pi) ** 2 * r ** 2)
        f = interference_probability(config.duty_cycle, config.slope, config.tau_max_s, config.bandwidth_hz)
        direct = sir_bound(gamma2, gamma_int2, config.processing_gain, 1.0, f)
        self.assertAlmostEqual(sir_bound_factored(rcs, r, d, config, 1.0) / direct, 1.0, places=10)

    def test_coherent_gain_lowers_bound(self):
        config = victim(num_chirps=64)
        gp = config.processing_gain
        self.assertAlmostEqual(sir_bound(1.0, 1.0, gp, gp, 0.5), 2.0)
        with self.assertRaises(DomainError):
            sir_bound(1.0, 1.0, gp, 2 * gp, 0.5)
        with self.assertRaises(DomainError):
            sir_bound(1.0, 1.0, gp, 1.0, 0.0)


class TestPhaseNoise(unittest.TestCase):
    def test_trajectory_variance(self):
        """Sampled trajectories carry the pedestal's total variance pi Lp Wp."""
        cfg = PhaseNoiseConfig(-70.0, 200e3)
        self.assertAlmostEqual(cfg.phase_variance(), np.pi * 1e-7 * 2e5)
        rng = np.random.default_rng(2)
        variance = np.mean([np.var(sample_phase_noise(cfg, 1 << 16, 50e6, rng)) for _ in range(20)])
        self.assertAlmostEqual(variance / cfg.phase_variance(), 1.0, delta=0.15)

    def test_disabled(self):
        cfg = PhaseNoiseConfig(float('-inf'), 200e3)
        self.assertFalse(cfg.enabled)
        np.testing.assert_array_equal(sample_phase_noise(cfg, 8, 1e6), np.zeros(8))

    def test_unseeded_streams(self):
        """An unset seed gives a fixed trajectory per stream, distinct for victim and interferer."""
        cfg = PhaseNoiseConfig(-70.0, 200e3)
        np.testing.assert_array_equal(sample_phase_noise(cfg, 64, 1e6), sample_phase_noise(cfg, 64, 1e6))
        victim_side = sample_phase_noise(cfg, 64, 1e6, cfg.generator(Stream.PHASE_NOISE_VICTIM))
        self.assertFalse(np.array_equal(victim_side, sample_phase_noise(cfg, 64, 1e6)))
        seeded = PhaseNoiseConfig(-70.0, 200e3, 5)
        np.testing.assert_array_equal(sample_phase_noise(seeded, 64, 1e6),
                                      sample_phase_noise(seeded, 64, 1e6, np.random.default_rng(5)))

    def test_interpolation(self):
        process = PhaseNoiseProcess(0.0, 1.0, np.array([0.0, 2.0, 4.0]))
        np.testing.assert_allclose(process.at([0.5, 1.5]), [1.0, 3.0])

    def test_interference_smeared_more_than_echo(self):
        """Independent oscillators spread the ghost further than the range-correlated echo."""
        config = victim()
        pn = PhaseNoiseConfig(-70.0, 200e3)
        profiles = averaged_range_profile(config, Target(70.0), 1.0, aligned(config, 100.0, 1.0, phase_noise=pn),
                                          victim_phase_noise=pn, realizations=30, master_seed=3)
        smeared = skirt_power_ratio(profiles.interference_phase_noise)
        self.assertGreater(smeared, 2 * skirt_power_ratio(profiles.target_phase_noise))
        self.assertGreater(smeared, skirt_power_ratio(profiles.interference_clean))

    def test_peak_width_and_masking(self):
        """A hann-windowed tone is about two bins wide at -3 dB and is not masked by a distant ghost."""
        config = victim()
        axis, echo = range_profile(synthesize_beat(config, [(Target(70.0), 1.0)]).samples, config)
        bin_m = SPEED_OF_LIGHT / (2 * config.slope * config.fast_time_samples * config.sample_period_s)
        width = peak_width_3db(echo, axis)
        self.assertGreater(width, bin_m)
        self.assertLess(width, 2 * bin_m)
        _, ghost = range_profile(dechirped_interference(config, aligned(config, 120.0, 1.0)).samples, config)
        self.assertFalse(target_masked(echo, ghost, axis, 70.0))
        self.assertTrue(target_masked(echo, 10 * echo, axis, 70.0))


if __name__ == '__main__':
    unittest.main()
