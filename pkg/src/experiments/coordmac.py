"""Coordinated versus uncoordinated radar interference over the first frames."""
import logging
from typing import Any, Dict

import numpy as np

from ..config.config_manager import ConfigManager
from ..environment.mac_simulator import run as run_mac
from ..seeding import derive_int_seeds
from .results import ResultWriter

logger = logging.getLogger(__name__)


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    frame = config.frame_config
    settings = config.mac_settings
    frames = config.mac_frames
    trials = config.trials
    logger.info("coordination: u' = %.3f, %d slots x %d bands, %d trials per count",
                frame.modified_duty_cycle, frame.num_slots, frame.num_bands, trials)

    rows = []
    per_count = {}
    for count in config.radar_counts:
        seeds = derive_int_seeds(config.seed, trials, count)
        coordinated = np.zeros((trials, frames))
        uncoordinated = np.zeros((trials, frames))
        conflicts = 0
        for trial, seed in enumerate(seeds):
            result = run_mac(count, frames, frame, master_seed=seed, settings=settings)
            coordinated[trial] = result.f_coordinated
            uncoordinated[trial] = result.f_uncoordinated
            conflicts += result.persistent_conflicts
            if trial == 0 and config.mac_trace:
                writer.write_lines(f"coordmac_trace_n{count}.tsv", (e.line() for e in result.trace),
                                   header=[f"num_radars {count}", "time_s\tnode\tkind\tpayload"])
        below = np.mean(coordinated < uncoordinated, axis=0)
        for k in range(frames):
            rows.append((count, k, (k + 1) * frame.frame_s, coordinated[:, k].mean(), uncoordinated[:, k].mean(),
                         below[k]))
        per_count[str(count)] = {
            "f_coordinated": float(coordinated[:, -1].mean()),
            "f_uncoordinated": float(uncoordinated[:, -1].mean()),
            "fraction_coordinated_below": float(below[-1]),
            "persistent_conflicts": conflicts,
        }
        logger.info("%d radars: f = %.4f coordinated, %.4f uncoordinated after %d frame(s)",
                    count, per_count[str(count)]["f_coordinated"], per_count[str(count)]["f_uncoordinated"], frames)

    writer.write_table("coordmac_summary.dat",
                       ["num_radars", "frame_idx", "time_s", "f_coordinated", "f_uncoordinated",
                        "fraction_coordinated_below"],
                       rows, formats=["%d", "%d", "%.10e", "%.10e", "%.10e", "%.10e"],
                       comments=[f"trials {trials}", f"capacity {frame.capacity}"])
    return {"capacity": frame.capacity, "per_count": per_count}
