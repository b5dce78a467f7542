"""
Config-to-results plumbing shared by every experiment.

parse_config validates a configuration file and applies command-line
overrides; run_experiment dispatches to the experiment's module and writes
the result files plus summary.json.
"""
import hashlib
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from .. import __version__
from ..config.config_manager import ConfigManager
from ..enums import ExperimentKind
from ..errors import ConfigValidationError, ExperimentError
from . import coordmac, highway, ofdm_count, phase_noise, single_link, slowchirp
from .results import ResultWriter

logger = logging.getLogger(__name__)

Runner = Callable[[ConfigManager, ResultWriter], Dict[str, Any]]

EXPERIMENTS: Dict[ExperimentKind, Runner] = {
    ExperimentKind.SINGLE_LINK: single_link.run,
    ExperimentKind.PHASE_NOISE: phase_noise.run,
    ExperimentKind.HIGHWAY: highway.run,
    ExperimentKind.SLOWCHIRP: slowchirp.run,
    ExperimentKind.COORDMAC: coordmac.run,
    ExperimentKind.OFDM_COUNT: ofdm_count.run,
}


@dataclass
class RunConfig:
    """A validated configuration, ready to run"""
    path: Path
    kind: ExperimentKind
    settings: ConfigManager
    master_seed: int
    trials: int
    output_dir: Path
    config_hash: str


def parse_config(path, seed: Optional[int] = None, output_dir: Optional[str] = None,
                 trials: Optional[int] = None) -> RunConfig:
    """
    Loads and validates a configuration file.

    Args:
        path: Configuration file
        seed: Overrides [run] seed
        output_dir: Overrides [run] output_dir
        trials: Overrides [run] trials

    Raises:
        ConfigValidationError: malformed file or values outside their domain
    """
    settings = ConfigManager(path)
    for key, value in (("seed", seed), ("output_dir", output_dir), ("trials", trials)):
        if value is not None:
            settings.override("run", key, value)
    settings.validate()
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return RunConfig(Path(path), settings.experiment, settings, settings.seed, settings.trials,
                     settings.output_dir, digest)


def run_experiment(cfg: RunConfig) -> Dict[str, Any]:
    """
    Runs one experiment and writes its outputs.

    Returns:
        The summary also written to summary.json

    Raises:
        ExperimentError: the experiment failed; the original error is chained
    """
    writer = ResultWriter(cfg.output_dir)
    logger.info("running %s from %s (seed %d, %d trial(s))", cfg.kind.value, cfg.path, cfg.master_seed, cfg.trials)
    start = time.perf_counter()
    try:
        metrics = EXPERIMENTS[cfg.kind](cfg.settings, writer)
    except ConfigValidationError:
        raise
    except Exception as err:
        raise ExperimentError(f"{cfg.kind.value} failed: {err}") from err
    wall = time.perf_counter() - start

    resolved = 'config.resolved.cfg'
    cfg.settings.save_config(cfg.output_dir / resolved)
    summary = {
        "experiment": cfg.kind.value,
        "config": str(cfg.path),
        "config_hash": cfg.config_hash,
        "version": __version__,
        "seed": cfg.master_seed,
        "trials": cfg.trials,
        "wall_time_s": wall,
        "outputs": writer.outputs + [resolved],
        "metrics": metrics,
    }
    writer.write_summary(summary)
    logger.info("%s finished in %.2f s, %d output file(s) in %s", cfg.kind.value, wall, len(summary["outputs"]),
                cfg.output_dir)
    return summary


def describe(kind: ExperimentKind) -> str:
    """First docstring line of the experiment's module"""
    doc = sys.modules[EXPERIMENTS[kind].__module__].__doc__ or ""
    return doc.strip().splitlines()[0] if doc.strip() else ""
