"""Network SINR on a multi-lane highway versus mean vehicle spacing."""
import logging
from typing import Any, Dict

import numpy as np

from ..config.config_manager import ConfigManager
from ..enums import TravelDirection
from ..network.netgeom import detectable_range, expected_lane_interference, monte_carlo_aggregate, sinr_curve
from ..scenario import linear_to_db
from ..seeding import Stream, derive_rng
from .results import ResultWriter

logger = logging.getLogger(__name__)


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    scn = config.highway_scenario
    grid = config.spacing_grid
    logger.info("highway: %d lanes, f = %.3e, spacing %.1f .. %.1f m",
                scn.num_lanes, scn.interference_probability, grid[0], grid[-1])

    curve = sinr_curve(scn, grid)
    with np.errstate(divide='ignore'):
        sinr_db = 10.0 * np.log10(curve.sinr)
        snr_db = 10.0 * np.log10(curve.snr)
    writer.write_table("highway_sinr.dat",
                       ["delta_m", "signal_w", "noise_w", "interference_w", "passing_w", "oncoming_w",
                        "sinr_db", "snr_db"],
                       np.column_stack([curve.delta_m, curve.signal_w, curve.noise_w, curve.interference_w,
                                        curve.passing_w, curve.oncoming_w, sinr_db, snr_db]),
                       comments=[f"interference_probability {scn.interference_probability:.10e}"])
    oncoming_wins = np.nonzero(curve.oncoming_w > curve.passing_w)[0]
    crossover = float(curve.delta_m[oncoming_wins[0]]) if oncoming_wins.size else float('nan')

    rows = []
    for lane in range(scn.num_lanes):
        offset = lane - scn.victim_lane
        theta = scn.lane_fov(lane)
        closed = expected_lane_interference(scn, offset, theta)
        empirical = monte_carlo_aggregate(scn, offset, config.trials, derive_rng(config.seed, Stream.PPP, lane),
                                          theta_rad=theta)
        direction = 0 if scn.direction(lane) is TravelDirection.SAME else 1
        rows.append((lane, offset, direction, closed, empirical, empirical / closed - 1.0))
    writer.write_table("highway_lanes.dat",
                       ["lane", "lane_offset", "oncoming", "closed_form_w", "monte_carlo_w", "relative_error"],
                       rows, formats=["%d", "%d", "%d", "%.10e", "%.10e", "%.10e"],
                       comments=[f"mean_spacing_m {scn.mean_spacing_m:.10e}", f"trials {config.trials}"])

    threshold = config.sinr_threshold_db
    car = detectable_range(scn, threshold)
    pedestrian = detectable_range(scn, threshold, rcs_m2=config.pedestrian_rcs_m2)
    logger.info("spacing %.1f m: car detectable to %.1f m, pedestrian to %.1f m", scn.mean_spacing_m, car, pedestrian)
    return {
        "interference_probability": scn.interference_probability,
        "crossover_spacing_m": crossover,
        "sinr_db_range": [float(np.min(sinr_db)), float(np.max(sinr_db))],
        "max_lane_relative_error": float(max(abs(r[-1]) for r in rows)),
        "detectable_range_m": {"target": car, "pedestrian": pedestrian},
        "snr_db": linear_to_db(curve.signal_w[0] / curve.noise_w[0]),
    }
