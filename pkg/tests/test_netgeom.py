import unittest

import numpy as np

from src.enums import TravelDirection
from src.errors import DomainError
from src.network.netgeom import (HighwayScenario, detectable_range, expected_lane_interference,
                                 lane_contributions, monte_carlo_aggregate, sample_ppp_lane, sinr_curve,
                                 truncation_extent)
from src.radar.fmcw import ChirpConfig
from src.scenario import LinkBudget, Target


def highway(**overrides):
    """Six lanes, victim looking backwards from lane 1, 30/90 degree fields of view"""
    radar = ChirpConfig(carrier_hz=77e9, bandwidth_hz=1e9, chirp_s=30e-6, num_chirps=64,
                        interest_bandwidth_hz=1e9 / 30e-6 * 1e-6, duty_cycle=0.2)
    params = dict(num_lanes=6, lane_spacing_m=3.5, mean_spacing_m=50.0,
                  fov_forward_rad=np.radians(30.0), fov_backward_rad=np.radians(90.0),
                  radar=radar, link=LinkBudget.from_config(10.0, 44.0, 77e9),
                  target=Target(150.0, rcs_m2=10.0), victim_lane=1, same_direction_lanes=3)
    params.update(overrides)
    return HighwayScenario(**params)


class TestHighwayScenario(unittest.TestCase):
    def setUp(self):
        self.scn = highway()

    def test_waveform_probability(self):
        self.assertAlmostEqual(self.scn.radar.tau_max_s, 1e-6)
        self.assertAlmostEqual(self.scn.interference_probability, 6.6667e-3, delta=1e-6)

    def test_lane_fields_of_view(self):
        """Same-direction lanes face the narrow forward FOV, oncoming lanes the wide rear one."""
        self.assertIs(self.scn.direction(0), TravelDirection.SAME)
        self.assertIs(self.scn.direction(3), TravelDirection.ONCOMING)
        self.assertAlmostEqual(self.scn.lane_fov(0), np.radians(30.0))
        self.assertAlmostEqual(self.scn.lane_fov(4), np.radians(90.0))

    def test_invalid_scenarios(self):
        with self.assertRaises(DomainError):
            highway(mean_spacing_m=0.0)
        with self.assertRaises(DomainError):
            highway(victim_lane=6)
        with self.assertRaises(DomainError):
            highway(fov_forward_rad=np.pi)


class TestLaneInterference(unittest.TestCase):
    def setUp(self):
        self.scn = highway()

    def test_closed_forms(self):
        """Own lane falls as 1/Delta^2, other lanes as theta / (2 l R Delta)."""
        base = self.scn.friis_constant * self.scn.interference_probability
        self.assertAlmostEqual(expected_lane_interference(self.scn, 0) / base, 1 / 50.0 ** 2)
        theta = np.radians(90.0)
        self.assertAlmostEqual(expected_lane_interference(self.scn, -2, theta) / base,
                               theta / (2 * 2 * 3.5 * 50.0))

    def test_monte_carlo_agrees(self):
        """The PPP average matches the closed form within 5 % for the own lane and a far lane."""
        rng = np.random.default_rng(6)
        for offset, theta in ((0, None), (2, np.radians(90.0))):
            closed = expected_lane_interference(self.scn, offset, theta)
            simulated = monte_carlo_aggregate(self.scn, offset, 20000, rng, theta_rad=theta)
            self.assertAlmostEqual(simulated / closed, 1.0, delta=0.05)

    def test_truncation_extent(self):
        self.assertAlmostEqual(truncation_extent(self.scn, 0, tolerance=1e-2), 5000.0)
        self.assertGreater(truncation_extent(self.scn, 2), truncation_extent(self.scn, 1))

    def test_ppp_lane(self):
        """Positions are sorted inside the extent with mean count extent / Delta."""
        rng = np.random.default_rng(1)
        counts = []
        for _ in range(200):
            x = sample_ppp_lane(10.0, 1000.0, rng)
            self.assertTrue(np.all(np.diff(x) >= 0))
            self.assertTrue(np.all((x >= 0) & (x < 1000.0)))
            counts.append(x.size)
        self.assertAlmostEqual(np.mean(counts), 100.0, delta=3.0)
        with self.assertRaises(DomainError):
            sample_ppp_lane(10.0, 0.0, rng)

    def test_lane_contributions(self):
        self.assertEqual(len(lane_contributions(self.scn)), 6)


class TestSinrCurve(unittest.TestCase):
    def setUp(self):
        self.scn = highway()
        self.grid = np.geomspace(5.0, 500.0, 25)
        self.curve = sinr_curve(self.scn, self.grid)

    def test_sinr_grows_with_spacing(self):
        self.assertTrue(np.all(np.diff(self.curve.sinr) > 0))
        self.assertTrue(np.all(self.curve.sinr < self.curve.snr))

    def test_dense_traffic_costs_orders_of_magnitude(self):
        """At 5 m spacing interference pushes SINR more than 20 dB under SNR."""
        self.assertLess(self.curve.sinr[0], self.curve.snr[0] / 100)

    def test_sparse_traffic_approaches_snr(self):
        curve = sinr_curve(self.scn, [1e9])
        self.assertAlmostEqual(curve.sinr[0] / curve.snr[0], 1.0, delta=0.01)

    def test_passing_and_oncoming_cross(self):
        """The own lane dominates in dense traffic, oncoming lanes in sparse traffic."""
        curve = sinr_curve(self.scn, [5.0, 50.0])
        self.assertGreater(curve.passing_w[0], curve.oncoming_w[0])
        self.assertLess(curve.passing_w[1], curve.oncoming_w[1])
        np.testing.assert_allclose(curve.interference_w, curve.passing_w + curve.oncoming_w)

    def test_empty_grid(self):
        with self.assertRaises(DomainError):
            sinr_curve(self.scn, [])


class TestDetectableRange(unittest.TestCase):
    def setUp(self):
        self.scn = highway(mean_spacing_m=20.0)

    def test_range_scales_with_rcs(self):
        """Echo power falls as d^4, so a tenfold RCS stretches the range by 10^(1/4)."""
        car = detectable_range(self.scn, -40.0, rcs_m2=10.0)
        pedestrian = detectable_range(self.scn, -40.0, rcs_m2=1.0)
        self.assertGreater(pedestrian, 1.0)
        self.assertAlmostEqual(car / pedestrian, 10 ** 0.25, places=4)

    def test_sparser_traffic_sees_further(self):
        self.assertGreater(detectable_range(self.scn.with_spacing(200.0), -40.0),
                           detectable_range(self.scn, -40.0))

    def test_limits(self):
        self.assertEqual(detectable_range(self.scn, -300.0), self.scn.radar.max_range_m)
        self.assertEqual(detectable_range(self.scn, 100.0), 0.0)


if __name__ == '__main__':
    unittest.main()
