import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.config.config_manager import ConfigManager
from src.enums import ExperimentKind
from src.errors import ConfigValidationError

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'

SINGLE_LINK = """\
[run]
experiment = single_link
seed = 4

[radar]
num_chirps = 8
duty_cycle = 1.0

[target]
range_m = 70

[interferer]
distance_m = 100
slope_ratios = 1.0, 1.1
"""


class TestConfigManager(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text, name='run.cfg'):
        path = self.dir / name
        path.write_text(text)
        return path

    def test_valid_file(self):
        """Typed accessors convert units to SI."""
        config = ConfigManager(self.write(SINGLE_LINK))
        config.validate()
        self.assertIs(config.experiment, ExperimentKind.SINGLE_LINK)
        self.assertEqual(config.seed, 4)
        self.assertEqual(config.trials, 1)
        self.assertAlmostEqual(config.chirp_config.slope, 5e13)
        self.assertEqual(config.chirp_config.num_chirps, 8)
        self.assertAlmostEqual(config.link_budget.combined_gain, 10 ** 4.4, delta=1e-6)
        self.assertEqual(config.slope_ratios, [1.0, 1.1])
        self.assertAlmostEqual(config.noise.variance_w, 2.0e-12, delta=0.01e-12)

    def test_unknown_key_reports_line(self):
        path = self.write(SINGLE_LINK.replace("num_chirps = 8", "num_chirps = 8\nnum_chrips = 9"))
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(path)
        self.assertEqual(ctx.exception.line, 7)
        self.assertIn("num_chrips", str(ctx.exception))
        self.assertIn(f"{path}:7:", str(ctx.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(self.write(SINGLE_LINK + "\n[radr]\ncarrier_ghz = 77\n"))
        self.assertIn("[radr]", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 16)

    def test_empty_file_lists_required_keys(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(self.write(""))
        self.assertIn("[run] experiment", str(ctx.exception))

    def test_kind_requires_its_keys(self):
        """Every key the experiment needs is named at once."""
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(self.write("[run]\nexperiment = single_link\n"))
        message = str(ctx.exception)
        for key in ("[target] range_m", "[interferer] distance_m", "[interferer] slope_ratios"):
            self.assertIn(key, message)

    def test_unknown_experiment(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(self.write("[run]\nexperiment = radar_party\n"))
        self.assertIn("radar_party", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 2)

    def test_malformed_value(self):
        path = self.write(SINGLE_LINK.replace("num_chirps = 8", "num_chirps = many"))
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(path)
        self.assertEqual(ctx.exception.line, 6)

    def test_duplicate_key(self):
        path = self.write(SINGLE_LINK.replace("seed = 4", "seed = 4\nseed = 5"))
        with self.assertRaises(ConfigValidationError) as ctx:
            ConfigManager(path)
        self.assertEqual(ctx.exception.line, 4)

    def test_duty_cycle_out_of_range(self):
        """Validation rejects u = 1.5 and points at its line."""
        config = ConfigManager(self.write(SINGLE_LINK.replace("duty_cycle = 1.0", "duty_cycle = 1.5")))
        with self.assertRaises(ConfigValidationError) as ctx:
            config.validate()
        self.assertEqual(ctx.exception.line, 7)
        self.assertIn("duty_cycle", str(ctx.exception))

    def test_module_invariant_becomes_config_error(self):
        """A B_s wider than B fails while building the waveform."""
        path = self.write(SINGLE_LINK.replace("num_chirps = 8", "num_chirps = 8\ninterest_bandwidth_mhz = 2000"))
        config = ConfigManager(path)
        with self.assertRaises(ConfigValidationError):
            config.validate()

    def test_missing_file(self):
        with self.assertRaises(ConfigValidationError):
            ConfigManager(self.dir / 'absent.cfg')

    def test_override_and_save(self):
        """Overrides survive a save and reload of the resolved file."""
        config = ConfigManager(self.write(SINGLE_LINK))
        config.override("run", "seed", 99)
        resolved = self.dir / 'resolved.cfg'
        config.save_config(resolved)
        reloaded = ConfigManager(resolved)
        self.assertEqual(reloaded.seed, 99)
        self.assertEqual(reloaded.chirp_config, config.chirp_config)
        with self.assertRaises(ConfigValidationError):
            config.override("run", "seeds", 1)

    def test_shipped_configs_validate(self):
        """Every configuration in configs/ is valid."""
        paths = sorted(CONFIG_DIR.glob('*.cfg'))
        self.assertEqual(len(paths), len(ExperimentKind))
        kinds = set()
        for path in paths:
            config = ConfigManager(path)
            config.validate()
            kinds.add(config.experiment)
        self.assertEqual(kinds, set(ExperimentKind))

    def test_mac_view_settings(self):
        """The MAC checks mutual field of view unless all_in_view is set."""
        shipped = ConfigManager(CONFIG_DIR / 'fig10.cfg').mac_settings
        self.assertFalse(shipped.all_in_view)
        self.assertAlmostEqual(shipped.fov_rad, np.radians(120.0))
        text = "[run]\nexperiment = coordmac\n\n[mac]\nframe_ms = 2\nradar_counts = 2\nfov_deg = 90\nall_in_view = true\n"
        settings = ConfigManager(self.write(text)).mac_settings
        self.assertTrue(settings.all_in_view)
        self.assertAlmostEqual(settings.fov_rad, np.pi / 2)
        config = ConfigManager(self.write(text.replace("fov_deg = 90", "fov_deg = 0")))
        with self.assertRaises(ConfigValidationError):
            config.validate()

    def test_highway_config(self):
        """The highway waveform keeps tau_max at 1 us with u = 0.2."""
        config = ConfigManager(CONFIG_DIR / 'fig6.cfg')
        scenario = config.highway_scenario
        self.assertAlmostEqual(scenario.radar.tau_max_s, 1e-6, delta=1e-12)
        self.assertAlmostEqual(scenario.interference_probability, 6.6667e-3, delta=1e-6)
        self.assertTrue(np.all(np.diff(config.spacing_grid) > 0))


if __name__ == '__main__':
    unittest.main()
