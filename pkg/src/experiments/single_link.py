"""Range profiles of one victim radar against one interferer, swept over the interferer's slope."""
import logging
from typing import Any, Dict

import numpy as np

from ..config.config_manager import ConfigManager
from ..enums import CoherenceClass
from ..radar.fmcw import ChirpConfig, synthesize_beat
from ..radar.interference import (InterfererSpec, classify_coherence, dechirped_interference, inject,
                                  noise_floor_median, range_profile, sir_bound, target_masked)
from ..scenario import SPEED_OF_LIGHT, NoiseConfig, interferer_power_gain, linear_to_db, target_power_gain
from ..seeding import Stream, derive_rng
from .results import ResultWriter

logger = logging.getLogger(__name__)


def aligned_interferer(victim: ChirpConfig, distance_m: float, power_gain: float, slope_ratio: float,
                       **overrides) -> InterfererSpec:
    """
    Interferer whose start offset puts the equal-slope ghost at the
    interferer's own distance, inside the victim's range window.
    """
    # the ghost delay is tau_int + t0, so t0 = tau_int doubles the one-way path
    t0 = float(np.mod(distance_m / SPEED_OF_LIGHT, victim.chirp_s))
    return InterfererSpec.at_distance(victim, distance_m, power_gain, slope_ratio=slope_ratio,
                                      start_offset_s=t0, **overrides)


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    victim = config.chirp_config
    link = config.link_budget
    target = config.target
    distance = config.interferer_distance_m
    gain = target_power_gain(link, target)
    intf_gain = interferer_power_gain(link, distance)
    noise = config.noise
    window = config.window
    logger.info("single link: target %.1f m, interferer %.1f m, SNR per sample %.1f dB",
                target.range_m, distance, linear_to_db(gain / noise.variance_w) if noise.variance_w else np.inf)

    _, clean_target = range_profile(synthesize_beat(victim, [(target, gain)], NoiseConfig()).samples,
                                    victim, window)
    rows = []
    for i, ratio in enumerate(config.slope_ratios):
        intf = aligned_interferer(victim, distance, intf_gain, ratio)
        beat = synthesize_beat(victim, [(target, gain)], noise, rng=derive_rng(config.seed, Stream.NOISE, i))
        interference = dechirped_interference(victim, intf)
        axis, total = range_profile(inject(beat, interference).samples, victim, window)
        _, intf_profile = range_profile(interference.samples, victim, window)

        coherence = classify_coherence(victim, intf)
        fraction = interference.in_band_fraction
        g_i = victim.processing_gain if coherence is CoherenceClass.COHERENT else 1.0
        bound = sir_bound(gain, intf_gain, victim.processing_gain, g_i, fraction) if fraction > 0 else np.inf
        masked = target_masked(clean_target, intf_profile, axis, target.range_m)
        floor = noise_floor_median(total)
        writer.write_table(f"single_link_ratio_{ratio:g}.dat",
                           ["range_m", "total_power_w", "target_power_w", "interference_power_w"],
                           np.column_stack([axis, total, clean_target, intf_profile]),
                           comments=[f"slope_ratio {ratio:g}", f"coherence {coherence.name.lower()}"])
        rows.append((ratio, floor, fraction, coherence.value, float(masked), linear_to_db(bound)))
        logger.info("slope ratio %g: %s, in-band %.3f, floor %.3e W, masked %s",
                    ratio, coherence.name.lower(), fraction, floor, masked)

    writer.write_table("single_link_summary.dat",
                       ["slope_ratio", "noise_floor_median_w", "in_band_fraction", "coherence_class",
                        "target_masked", "sir_bound_db"], np.array(rows, dtype=float),
                       comments=["coherence_class: 0 coherent, 1 partially coherent, 2 incoherent"])
    table = np.array(rows, dtype=float)
    return {
        "slope_ratios": table[:, 0].tolist(),
        "noise_floor_median_w": table[:, 1].tolist(),
        "in_band_fraction": table[:, 2].tolist(),
        "target_masked": [bool(m) for m in table[:, 4]],
    }
