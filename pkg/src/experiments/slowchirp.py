"""Quasi-orthogonal slow chirps: channel count, coupling, joint estimation and channel selection."""
import logging
from typing import Any, Dict

import numpy as np

from ..config.config_manager import ConfigManager
from ..errors import AmbiguousVelocityError
from ..radar.slowchirp import (coupling, default_lut, dechirp_slow, estimate_range_velocity,
                               expected_conflict_pairs, max_channels, random_channel_protocol)
from ..scenario import NoiseConfig, Target
from ..seeding import Stream, derive_rng
from .results import ResultWriter

logger = logging.getLogger(__name__)

COUPLING_POINTS = 50


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    cfg = config.slowchirp_config
    settings = config.slowchirp_settings
    channels = max_channels(cfg.chirp_s, cfg.bandwidth_hz, settings["rcs_m2"], settings["interferer_distance_m"])
    logger.info("slow chirp: T = %.1f ms, %d quasi-orthogonal channels", cfg.chirp_s * 1e3, channels)

    # coupling from one bin of delay up to a tenth of the sweep
    offsets = np.geomspace(1.0 / cfg.bandwidth_hz, 0.1 * cfg.chirp_s, COUPLING_POINTS)
    exact_bound = np.array([coupling(d, cfg.bandwidth_hz, cfg.chirp_s) for d in offsets])
    writer.write_table("slowchirp_coupling.dat", ["delta_tau_s", "coupling", "bound"],
                       np.column_stack([offsets, exact_bound]))

    lut = default_lut(cfg)
    v_max = min(abs(v) for v in lut.span)
    writer.write_table("slowchirp_lut.dat", ["velocity_mps", "ratio_angle", "phase_angle", "sweep_magnitude"],
                       np.column_stack([lut.velocities_mps, lut.angle, lut.phase_angle, lut.sweep_magnitude]),
                       comments=[f"f_star_hz {lut.f_star_hz:.10e}"])
    n =settings["grid_points"]
    ranges = np.linspace(0.1, 0.9, n) * cfg.max_range_m
    velocities = np.linspace(-0.8, 0.8, n) * v_max
    rows = []
    failures = 0
    for i, r in enumerate(ranges):
        for j, v in enumerate(velocities):
            signal = dechirp_slow(Target(r, v), cfg, noise=NoiseConfig(settings["noise_variance_w"]),
                                  rng=derive_rng(config.seed, Stream.SLOWCHIRP, i, j))
            try:
                est = estimate_range_velocity(signal, cfg, lut)
                rows.append((r, v, est.range_m, est.velocity_mps, est.ratio_residual))
            except AmbiguousVelocityError as err:
                failures += 1
                logger.warning("R = %.1f m, v = %.2f m/s: %s", r, v, err)
                rows.append((r, v, np.nan, np.nan, np.nan))
    table = np.array(rows, dtype=float)
    writer.write_table("slowchirp_estimates.dat",
                       ["range_m", "velocity_mps", "range_hat_m", "velocity_hat_mps", "ratio_residual"], table,
                       comments=[f"lut_span_mps {lut.span[0]:.10e} {lut.span[1]:.10e}"])

    rounds = settings["rounds"]
    conflicts = np.zeros(rounds)
    for trial in range(config.trials):
        conflicts += random_channel_protocol(settings["num_radars"], settings["num_channels"], rounds,
                                             derive_rng(config.seed, Stream.CHANNEL_PROTOCOL, trial))
    conflicts /= config.trials
    writer.write_table("slowchirp_channel_protocol.dat", ["round", "mean_conflicting_pairs"],
                       np.column_stack([np.arange(rounds), conflicts]), formats=["%d", "%.10e"],
                       comments=[f"num_radars {settings['num_radars']}", f"num_channels {settings['num_channels']}"])

    valid = ~np.isnan(table[:, 2])
    return {
        "max_channels": channels,
        "lut_span_mps": list(lut.span),
        "max_range_error_m": float(np.max(np.abs(table[valid, 2] - table[valid, 0]))) if valid.any() else None,
        "max_velocity_error_mps": float(np.max(np.abs(table[valid, 3] - table[valid, 1]))) if valid.any() else None,
        "ambiguous_estimates": failures,
        "first_round_conflicts": float(conflicts[0]),
        "expected_first_round_conflicts": expected_conflict_pairs(settings["num_radars"], settings["num_channels"]),
    }
