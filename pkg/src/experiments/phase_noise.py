"""Phase-noise smearing of the target echo and of a coherent interferer's ghost."""
import logging
from typing import Any, Dict

import numpy as np

from ..config.config_manager import ConfigManager
from ..radar.interference import averaged_range_profile, peak_width_3db, skirt_power_ratio
from ..scenario import interferer_power_gain, target_power_gain
from .results import ResultWriter
from .single_link import aligned_interferer

logger = logging.getLogger(__name__)

PROFILE_ZERO_PAD = 4


def _local_peak(profile: np.ndarray, axis: np.ndarray, range_m: float, half_width: int = 4) -> int:
    centre = int(np.argmin(np.abs(axis - range_m)))
    lo, hi = max(0, centre - half_width), min(axis.size, centre + half_width + 1)
    return lo + int(np.argmax(profile[lo:hi]))


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    victim = config.chirp_config
    link = config.link_budget
    target = config.target
    distance = config.interferer_distance_m
    pn = config.phase_noise
    intf = aligned_interferer(victim, distance, interferer_power_gain(link, distance), 1.0, phase_noise=pn)
    logger.info("phase noise: %.0f dBc/Hz pedestal, %.0f kHz wide, %d realizations",
                pn.pedestal_dbc_hz, pn.pedestal_width_hz / 1e3, config.trials)

    profiles = averaged_range_profile(victim, target, target_power_gain(link, target), intf,
                                      victim_phase_noise=pn, realizations=config.trials,
                                      master_seed=config.seed, window=config.window,
                                      zero_pad=PROFILE_ZERO_PAD)
    axis = profiles.range_axis_m
    writer.write_table("phase_noise_profiles.dat",
                       ["range_m", "target_clean_w", "interference_clean_w", "target_pn_w", "interference_pn_w"],
                       np.column_stack([axis, profiles.target_clean, profiles.interference_clean,
                                        profiles.target_phase_noise, profiles.interference_phase_noise]),
                       comments=[f"realizations {config.trials}"])

    t_idx = _local_peak(profiles.target_phase_noise, axis, target.range_m)
    i_idx = _local_peak(profiles.interference_phase_noise, axis, distance)
    widths = {
        "target_clean_m": peak_width_3db(profiles.target_clean, axis, t_idx),
        "target_pn_m": peak_width_3db(profiles.target_phase_noise, axis, t_idx),
        "interference_clean_m": peak_width_3db(profiles.interference_clean, axis, i_idx),
        "interference_pn_m": peak_width_3db(profiles.interference_phase_noise, axis, i_idx),
    }
    # skirt two to four resolution bins either side of each peak
    pad = PROFILE_ZERO_PAD
    skirts = {
        "target_clean": skirt_power_ratio(profiles.target_clean, t_idx, 2 * pad, 4 * pad),
        "target_pn": skirt_power_ratio(profiles.target_phase_noise, t_idx, 2 * pad, 4 * pad),
        "interference_clean": skirt_power_ratio(profiles.interference_clean, i_idx, 2 * pad, 4 * pad),
        "interference_pn": skirt_power_ratio(profiles.interference_phase_noise, i_idx, 2 * pad, 4 * pad),
    }
    logger.info("3 dB widths: target %.3f m, interference %.3f m", widths["target_pn_m"], widths["interference_pn_m"])
    logger.info("skirt power: target %.2f dB, interference %.2f dB below the peak",
                -10 * np.log10(skirts["target_pn"]), -10 * np.log10(skirts["interference_pn"]))
    return {
        "peak_width_3db": widths,
        "skirt_power_ratio": skirts,
        "interference_smeared_more": bool(skirts["interference_pn"] > skirts["target_pn"]),
    }
