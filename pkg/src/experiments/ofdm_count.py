"""Vehicles per time-frequency budget for stepped, narrowband and wideband OFDM RadCom."""
import logging
from dataclasses import replace
from typing import Any, Callable, Dict

from ..config.config_manager import ConfigManager
from ..enums import OfdmScheme
from ..radcom.allocation import allocate, max_vehicles
from ..radcom.ofdm import AccuracySpec
from .results import NUMBER_FORMAT, ResultWriter

logger = logging.getLogger(__name__)

# panel axis -> how a swept value enters the accuracy spec
PANELS: Dict[str, Callable[[AccuracySpec, float], AccuracySpec]] = {
    "snr_db": lambda spec, x: replace(spec, subcarrier_snr_db=x),
    "range_limit_m": lambda spec, x: replace(spec, max_range_std_m=x),
    "velocity_limit_mps": lambda spec, x: replace(spec, max_velocity_std_mps=x),
}


def run(config: ConfigManager, writer: ResultWriter) -> Dict[str, Any]:
    template = config.ofdm_template
    budget = config.resource_budget
    spec = config.accuracy_spec
    adc = config.adc_bandwidth_hz
    max_frames, max_symbols = config.ofdm_search_limits

    def count(scheme: OfdmScheme, accuracy: AccuracySpec):
        return max_vehicles(scheme, template, budget, accuracy, adc, max_frames, max_symbols)

    for axis, values in config.ofdm_sweeps.items():
        rows = []
        for value in values:
            accuracy = PANELS[axis](spec, value)
            for scheme in OfdmScheme:
                best = count(scheme, accuracy)
                m = best.config.num_frames if best.config else 0
                l = best.config.symbols_per_frame if best.config else 0
                rows.append((scheme.value, value, best.count, m, l, best.binding))
        writer.write_table(f"ofdm_count_{axis}.dat", ["scheme", axis, "max_vehicles", "frames_m", "symbols_l", "binding"],
                           rows, formats=["%s", NUMBER_FORMAT, "%d", "%d", "%d", "%s"])
        logger.info("panel %s: %d points", axis, len(values))

    nominal = {scheme: count(scheme, spec) for scheme in OfdmScheme}
    stepped = nominal[OfdmScheme.STEPPED]
    if stepped.count:
        allocation = allocate(stepped.count, stepped.config, budget)
        allocation.resource_elements()
        rows = [(v, t.slot, t.carrier, t.start_s, t.stop_s, t.low_hz, t.high_hz)
                for v, tiles in allocation.tiles.items() for t in tiles]
        writer.write_table("ofdm_allocation_stepped.dat",
                           ["vehicle", "slot", "carrier", "start_s", "stop_s", "low_hz", "high_hz"], rows,
                           formats=["%d", "%d", "%d"] + [NUMBER_FORMAT] * 4)
    for scheme, best in nominal.items():
        logger.info("%s: %d vehicles (binding %s)", scheme.value, best.count, best.binding)
    return {
        scheme.value: {
            "max_vehicles": best.count,
            "frames_m": best.config.num_frames if best.config else 0,
            "symbols_l": best.config.symbols_per_frame if best.config else 0,
            "std_range_m": best.std_range_m,
            "std_velocity_mps": best.std_velocity_mps,
            "binding": best.binding,
        }
        for scheme, best in nominal.items()
    }
