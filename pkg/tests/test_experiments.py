import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.enums import OfdmScheme
from src.experiments.runner import parse_config, run_experiment
from src.log_setup import configure_logging

PHASE_NOISE = """\
[run]
experiment = phase_noise
seed = 2
trials = 3

[radar]
num_chirps = 2

[target]
range_m = 70

[interferer]
distance_m = 100

[phase_noise]
pedestal_dbc_hz = -70
pedestal_width_khz = 200
"""

HIGHWAY = """\
[run]
experiment = highway
seed = 6
trials = 200

[radar]
chirp_duration_us = 30
interest_bandwidth_mhz = 33.3333333333
duty_cycle = 0.2

[target]
range_m = 150

[highway]
num_lanes = 6

[sweep]
spacing_points = 5
"""

SLOWCHIRP = """\
[run]
experiment = slowchirp
seed = 7
trials = 20

[slowchirp]
chirp_duration_ms = 10
grid_points = 2
num_radars = 5
num_channels = 100
rounds = 3
"""

COORDMAC = """\
[run]
experiment = coordmac
seed = 10
trials = 2

[mac]
frame_ms = 2
radar_counts = 2, 4
"""

OFDM_COUNT = """\
[run]
experiment = ofdm_count

[ofdm]
subcarrier_spacing_khz = 500
total_time_ms = 1
max_frames = 2
max_symbols = 16
snr_sweep_db = -30
range_limit_sweep_m = 0.1
velocity_limit_sweep_mps = 0.1

[accuracy]
max_range_std_m = 0.1
max_velocity_std_mps = 0.1
"""


class TestExperimentRuns(unittest.TestCase):
    """Each experiment kind runs end to end on a small configuration."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        configure_logging()
        self.tmp.cleanup()

    def run_text(self, text, name):
        path = self.dir / f'{name}.cfg'
        path.write_text(text)
        out = self.dir / name
        summary = run_experiment(parse_config(path, output_dir=str(out)))
        self.assertEqual(json.loads((out / 'summary.json').read_text())["experiment"], name)
        for output in summary["outputs"]:
            self.assertTrue((out / output).is_file(), output)
        return summary, out

    def test_phase_noise(self):
        summary, out = self.run_text(PHASE_NOISE, 'phase_noise')
        metrics = summary["metrics"]
        self.assertIn("phase_noise_profiles.dat", summary["outputs"])
        self.assertEqual(len(metrics["skirt_power_ratio"]), len(metrics["peak_width_3db"]))
        self.assertIsInstance(metrics["interference_smeared_more"], bool)

    def test_highway(self):
        """The lane table has one row per lane and the waveform gives f = 6.67e-3."""
        summary, out = self.run_text(HIGHWAY, 'highway')
        metrics = summary["metrics"]
        self.assertAlmostEqual(metrics["interference_probability"], 6.6667e-3, delta=1e-6)
        lanes = np.loadtxt(out / 'highway_lanes.dat')
        self.assertEqual(lanes.shape, (6, 6))
        sinr = np.loadtxt(out / 'highway_sinr.dat')
        self.assertEqual(sinr.shape[0], 5)
        self.assertTrue(np.all(np.diff(sinr[:, 6]) > 0))
        detect = metrics["detectable_range_m"]
        self.assertGreaterEqual(detect["target"], detect["pedestrian"])

    def test_slowchirp(self):
        summary, out = self.run_text(SLOWCHIRP, 'slowchirp')
        metrics = summary["metrics"]
        self.assertEqual(metrics["max_channels"], 63245)
        self.assertEqual(np.loadtxt(out / 'slowchirp_estimates.dat').shape, (4, 5))
        self.assertEqual(np.loadtxt(out / 'slowchirp_channel_protocol.dat').shape, (3, 2))
        lut = np.loadtxt(out / 'slowchirp_lut.dat')
        self.assertEqual(lut.shape[1], 4)
        self.assertTrue(np.all(lut[:, 3] <= 10e-3 * (1 + 1e-9)))
        self.assertAlmostEqual(metrics["expected_first_round_conflicts"], 10 / 100)

    def test_coordmac(self):
        """Both radar counts are reported and the first trial of each leaves a trace."""
        summary, out = self.run_text(COORDMAC, 'coordmac')
        per_count = summary["metrics"]["per_count"]
        self.assertEqual(set(per_count), {"2", "4"})
        for entry in per_count.values():
            self.assertGreaterEqual(entry["f_coordinated"], 0.0)
            self.assertLessEqual(entry["f_uncoordinated"], 1.0)
        for count in (2, 4):
            self.assertIn(f"coordmac_trace_n{count}.tsv", summary["outputs"])

    def test_ofdm_count(self):
        summary, out = self.run_text(OFDM_COUNT, 'ofdm_count')
        metrics = summary["metrics"]
        self.assertEqual(set(metrics), {scheme.value for scheme in OfdmScheme})
        for axis in ("snr_db", "range_limit_m", "velocity_limit_mps"):
            self.assertIn(f"ofdm_count_{axis}.dat", summary["outputs"])
        for entry in metrics.values():
            self.assertGreaterEqual(entry["max_vehicles"], 0)


if __name__ == '__main__':
    unittest.main()
