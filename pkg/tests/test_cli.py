import io
import json
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path

from main import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main
from src.enums import ExperimentKind
from src.experiments.runner import describe, parse_config
from src.log_setup import configure_logging

SMALL_RUN = """\
[run]
experiment = single_link
seed = 3

[radar]
num_chirps = 2

[target]
range_m = {range_m}

[interferer]
distance_m = 100
slope_ratios = 1.0, 1.1
"""


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.config = self.dir / 'small.cfg'
        self.config.write_text(SMALL_RUN.format(range_m=70))

    def tearDown(self):
        # closes the run.log handler before the directory goes away
        configure_logging()
        self.tmp.cleanup()

    def test_list_experiments(self):
        """Every experiment kind is listed with its description."""
        out = io.StringIO()
        with redirect_stdout(out):
            code = main(["list-experiments"])
        self.assertEqual(code, EXIT_OK)
        for kind in ExperimentKind:
            self.assertIn(kind.value, out.getvalue())
            self.assertTrue(describe(kind))

    def test_validate(self):
        self.assertEqual(main(["validate", str(self.config)]), EXIT_OK)

    def test_validate_rejects_bad_config(self):
        bad = self.dir / 'bad.cfg'
        bad.write_text(SMALL_RUN.format(range_m=70).replace("num_chirps = 2", "num_chirps = 2\nduty_cycle = 1.5"))
        self.assertEqual(main(["validate", str(bad)]), EXIT_INVALID)
        self.assertEqual(main(["validate", str(self.dir / 'absent.cfg')]), EXIT_INVALID)

    def test_overrides(self):
        cfg = parse_config(self.config, seed=11, output_dir=str(self.dir / 'out'), trials=5)
        self.assertEqual(cfg.master_seed, 11)
        self.assertEqual(cfg.trials, 5)
        self.assertEqual(cfg.output_dir, self.dir / 'out')
        self.assertEqual(len(cfg.config_hash), 64)

    def test_run_writes_outputs(self):
        """A run leaves tables, the resolved config, the log and a summary."""
        out = self.dir / 'run'
        self.assertEqual(main(["run", str(self.config), "-o", str(out)]), EXIT_OK)
        summary = json.loads((out / 'summary.json').read_text())
        self.assertEqual(summary["experiment"], "single_link")
        self.assertEqual(summary["seed"], 3)
        for name in summary["outputs"]:
            self.assertTrue((out / name).is_file(), name)
        self.assertIn("single_link_summary.dat", summary["outputs"])
        self.assertTrue((out / 'run.log').is_file())
        self.assertEqual(summary["metrics"]["slope_ratios"], [1.0, 1.1])

    def test_same_seed_same_bytes(self):
        """Two runs with one seed produce byte-identical tables."""
        first, second = self.dir / 'a', self.dir / 'b'
        self.assertEqual(main(["run", str(self.config), "-o", str(first)]), EXIT_OK)
        self.assertEqual(main(["run", str(self.config), "-o", str(second)]), EXIT_OK)
        tables = sorted(p.name for p in first.glob('*.dat'))
        self.assertTrue(tables)
        for name in tables:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def test_other_seed_changes_noise(self):
        first, second = self.dir / 'a', self.dir / 'b'
        main(["run", str(self.config), "-o", str(first)])
        main(["run", str(self.config), "-o", str(second), "-s", "4"])
        name = 'single_link_ratio_1.dat'
        self.assertNotEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_failed_run(self):
        """A target beyond the ADC range passes validation but fails the run."""
        far = self.dir / 'far.cfg'
        far.write_text(SMALL_RUN.format(range_m=200))
        self.assertEqual(main(["run", str(far), "-o", str(self.dir / 'far')]), EXIT_FAILED)


if __name__ == '__main__':
    unittest.main()
