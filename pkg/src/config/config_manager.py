import re
from configparser import ConfigParser, Error as ConfigParserError
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..enums import ExperimentKind, HopPattern
from ..environment.mac_simulator import FrameConfig, MacSettings
from ..errors import ConfigValidationError, DomainError
from ..network.netgeom import HighwayScenario
from ..radar.fmcw import ChirpConfig
from ..radar.phase_noise import PhaseNoiseConfig
from ..radar.slowchirp import SlowChirpConfig
from ..radcom.allocation import ResourceBudget
from ..radcom.ofdm import AccuracySpec, SteppedOfdmConfig
from ..scenario import LinkBudget, NoiseConfig, Target, db_to_linear, thermal_noise_power

# Sentinel for keys without a default
REQUIRED = None

# section -> key -> (type, default). Units are part of every physical key name.
SCHEMA: Dict[str, Dict[str, Tuple[str, Optional[str]]]] = {
    "run": {
        "experiment": ("str", REQUIRED),
        "seed": ("int", "0"),
        "trials": ("int", "1"),
        "output_dir": ("str", "results"),
    },
    "radar": {
        "carrier_ghz": ("float", "77"),
        "bandwidth_ghz": ("float", "1"),
        "chirp_duration_us": ("float", "20"),
        "num_chirps": ("int", "64"),
        "interest_bandwidth_mhz": ("float", "50"),
        "duty_cycle": ("float", "1.0"),
        "frame_us": ("float", ""),
        "window": ("str", "hann"),
    },
    "link": {
        "tx_power_dbm": ("float", "10"),
        "antenna_gain_dbi": ("float", "22"),
        "noise_figure_db": ("float", "10"),
    },
    "target": {
        "range_m": ("float", "70"),
        "velocity_mps": ("float", "0"),
        "rcs_m2": ("float", "10"),
    },
    "noise": {
        "enabled": ("bool", "true"),
    },
    "interferer": {
        "distance_m": ("float", "100"),
        "slope_ratios": ("floats", "1.0"),
    },
    "phase_noise": {
        "pedestal_dbc_hz": ("float", "-70"),
        "pedestal_width_khz": ("float", "200"),
    },
    "highway": {
        "num_lanes": ("int", "6"),
        "lane_spacing_m": ("float", "3.5"),
        "same_direction_lanes": ("int", "3"),
        "fov_forward_deg": ("float", "30"),
        "fov_backward_deg": ("float", "90"),
        "victim_lane": ("int", "1"),
    },
    "sweep": {
        "spacing_min_m": ("float", "5"),
        "spacing_max_m": ("float", "500"),
        "spacing_points": ("int", "41"),
        "check_spacing_m": ("float", "50"),
        "sinr_threshold_db": ("float", "13"),
        "pedestrian_rcs_m2": ("float", "0.5"),
    },
    "slowchirp": {
        "carrier_ghz": ("float", "77"),
        "bandwidth_ghz": ("float", "1"),
        "chirp_duration_ms": ("float", "10"),
        "max_range_m": ("float", "150"),
        "max_speed_mps": ("float", "50"),
        "interferer_distance_m": ("float", "500"),
        "rcs_m2": ("float", "10"),
        "grid_points": ("int", "5"),
        "snr_db": ("float", ""),
        "num_radars": ("int", "20"),
        "num_channels": ("int", "1000"),
        "rounds": ("int", "5"),
    },
    "mac": {
        "frame_ms": ("float", "2"),
        "chirp_duration_us": ("float", "20"),
        "chirps_per_frame": ("int", "99"),
        "carrier_ghz": ("float", "79"),
        "bandwidth_ghz": ("float", "1"),
        "interest_bandwidth_mhz": ("float", "50"),
        "comm_bandwidth_mhz": ("float", "10"),
        "num_bands": ("int", "1"),
        "sync_error_us": ("float", "1"),
        "radar_counts": ("ints", "2, 4, 8, 16, 32"),
        "frames": ("int", "1"),
        "radio_range_m": ("float", "400"),
        "airtime_us": ("float", "100"),
        "cca_delay_us": ("float", "4"),
        "staleness_frames": ("int", "5"),
        "road_length_m": ("float", "200"),
        "num_lanes": ("int", "4"),
        "lane_spacing_m": ("float", "3.5"),
        "fov_deg": ("float", "120"),
        "all_in_view": ("bool", "false"),
        "trace": ("bool", "true"),
    },
    "ofdm": {
        "carrier_ghz": ("float", "77"),
        "subcarrier_spacing_khz": ("float", "500"),
        "cyclic_prefix_ns": ("float", "400"),
        "adc_bandwidth_mhz": ("float", "50"),
        "total_bandwidth_ghz": ("float", "1"),
        "total_time_ms": ("float", "30"),
        "max_frames": ("int", "20"),
        "max_symbols": ("int", "512"),
        "hop_pattern": ("str", "linear"),
        "snr_sweep_db": ("floats", "-40, -35, -30, -25, -20"),
        "range_limit_sweep_m": ("floats", "0.05, 0.1, 0.2, 0.5"),
        "velocity_limit_sweep_mps": ("floats", "0.05, 0.1, 0.2, 0.5"),
    },
    "accuracy": {
        "max_range_std_m": ("float", "0.1"),
        "max_velocity_std_mps": ("float", "0.1"),
        "subcarrier_snr_db": ("float", "-30"),
    },
}

# Keys every experiment of a kind must set explicitly
KIND_REQUIRED: Dict[ExperimentKind, List[Tuple[str, str]]] = {
    ExperimentKind.SINGLE_LINK: [("target", "range_m"), ("interferer", "distance_m"), ("interferer", "slope_ratios")],
    ExperimentKind.PHASE_NOISE: [("target", "range_m"), ("interferer", "distance_m"),
                                 ("phase_noise", "pedestal_dbc_hz"), ("phase_noise", "pedestal_width_khz")],
    ExperimentKind.HIGHWAY: [("target", "range_m"), ("highway", "num_lanes")],
    ExperimentKind.SLOWCHIRP: [("slowchirp", "chirp_duration_ms")],
    ExperimentKind.COORDMAC: [("mac", "frame_ms"), ("mac", "radar_counts")],
    ExperimentKind.OFDM_COUNT: [("ofdm", "subcarrier_spacing_khz"), ("accuracy", "max_range_std_m"),
                                ("accuracy", "max_velocity_std_mps")],
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


class ConfigManager:
    """
    Loads and validates one experiment configuration.

    The file is a sectioned INI file. Every key is checked against SCHEMA;
    physical values carry their unit in the key name and are converted to SI
    once, by the typed accessors below.
    """
    def __init__(self, config_file: str):
        """
        Args:
            config_file: Path to the .cfg file

        Raises:
            ConfigValidationError: unreadable file, unknown section or key,
                malformed value or missing required key
        """
        self.config = ConfigParser()
        self.config_file = Path(config_file)
        if not self.config_file.is_file():
            raise ConfigValidationError("configuration file not found", str(config_file))
        self.text = self.config_file.read_text()
        self._lines = self._index_lines(self.text)

        # Load default values first
        self._set_defaults()

        user = ConfigParser()
        try:
            user.read_string(self.text, source=str(self.config_file))
        except ConfigParserError as err:
            raise ConfigValidationError(str(err).splitlines()[0], str(self.config_file),
                                        getattr(err, 'lineno', None)) from err
        self._check_known(user)
        self.config.read_string(self.text, source=str(self.config_file))
        self.explicit = {(s, k) for s in user.sections() for k in user[s]}
        self._check_required()
        self._check_types()

    def _set_defaults(self):
        """Sets default values for every optional parameter"""
        for section, keys in SCHEMA.items():
            self.config[section] = {key: default for key, (_, default) in keys.items() if default is not None}

    def save_config(self, path: Path):
        """Writes the resolved configuration, defaults included"""
        with open(path, 'w') as configfile:
            self.config.write(configfile)

    def override(self, section: str, key: str, value):
        """Replaces a value, e.g. from a command-line flag"""
        if key not in SCHEMA.get(section, {}):
            raise ConfigValidationError(f"cannot override unknown key [{section}] {key}", str(self.config_file))
        self.config.set(section, key, str(value))
        self.explicit.add((section, key))

    @staticmethod
    def _index_lines(text: str) -> Dict[Tuple[str, Optional[str]], int]:
        """(section, key) -> 1-based line; key None marks the section header"""
        index: Dict[Tuple[str, Optional[str]], int] = {}
        section = None
        for number, line in enumerate(text.splitlines(), start=1):
            header = _SECTION_RE.match(line)
            if header:
                section = header.group(1).strip()
                index.setdefault((section, None), number)
                continue
            key = _KEY_RE.match(line)
            if key and section is not None:
                index.setdefault((section, key.group(1).strip().lower()), number)
        return index

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self._lines.get((section, key))

    def _error(self, message: str, section: str, key: Optional[str] = None) -> ConfigValidationError:
        line = self.line_of(section, key)
        if line is None and key is not None:
            line = self.line_of(section)
        return ConfigValidationError(message, str(self.config_file), line)

    def _check_known(self, user: ConfigParser):
        for section in user.sections():
            if section not in SCHEMA:
                raise self._error(f"unknown section [{section}]", section)
            for key in user[section]:
                if key not in SCHEMA[section]:
                    raise self._error(f"unknown key '{key}' in [{section}]", section, key)

    def _check_required(self):
        missing = [f"[{s}] {k}" for s, keys in SCHEMA.items() for k, (_, d) in keys.items()
                   if d is None and not self.config.has_option(s, k)]
        if not missing:
            kind = self.experiment
            missing = [f"[{s}] {k}" for s, k in KIND_REQUIRED[kind] if (s, k) not in self.explicit]
        if missing:
            raise ConfigValidationError("missing required keys: " + ", ".join(missing), str(self.config_file))

    def _check_types(self):
        for section, keys in SCHEMA.items():
            for key, (kind, _) in keys.items():
                raw = self.config.get(section, key, fallback="")
                if raw == "":
                    continue
                try:
                    self._convert(section, key, kind)
                except ValueError as err:
                    raise self._error(f"[{section}] {key} = '{raw}' is not a valid {kind}: {err}",
                                      section, key) from err

    def _convert(self, section: str, key: str, kind: str):
        if kind == "int":
            return self.config.getint(section, key)
        if kind == "float":
            return self.config.getfloat(section, key)
        if kind == "bool":
            return self.config.getboolean(section, key)
        if kind == "floats":
            return [float(v) for v in self.config.get(section, key).split(",") if v.strip()]
        if kind == "ints":
            return [int(v) for v in self.config.get(section, key).split(",") if v.strip()]
        return self.config.get(section, key)

    def _get(self, section: str, key: str):
        return self._convert(section, key, SCHEMA[section][key][0])

    def _optional_float(self, section: str, key: str) -> Optional[float]:
        raw = self.config.get(section, key, fallback="")
        return None if raw.strip() == "" else self.config.getfloat(section, key)

    def _require(self, condition: bool, invariant: str, section: str, key: str):
        if not condition:
            value = self.config.get(section, key)
            raise self._error(f"[{section}] {key} = {value} violates {invariant}", section, key)

    def validate(self):
        """
        Range checks on the raw values, then builds every object the selected
        experiment uses so module invariants are checked before any work starts.

        Raises:
            ConfigValidationError: with the offending line where one is known
        """
        self._require(self.trials >= 1, "trials >= 1", "run", "trials")
        self._require(0.0 <= self._get("radar", "duty_cycle") <= 1.0, "0 <= duty_cycle <= 1", "radar", "duty_cycle")
        self._require(self._get("target", "range_m") > 0, "range > 0", "target", "range_m")
        kind = self.experiment
        builders = {
            ExperimentKind.SINGLE_LINK: lambda: (self.chirp_config, self.link_budget, self.target,
                                                 self.slope_ratios),
            ExperimentKind.PHASE_NOISE: lambda: (self.chirp_config, self.link_budget, self.target,
                                                 self.phase_noise),
            ExperimentKind.HIGHWAY: lambda: (self.highway_scenario, self.spacing_grid),
            ExperimentKind.SLOWCHIRP: lambda: self.slowchirp_config,
            ExperimentKind.COORDMAC: lambda: (self.frame_config, self.mac_settings, self.radar_counts),
            ExperimentKind.OFDM_COUNT: lambda: (self.ofdm_template, self.resource_budget, self.accuracy_spec),
        }
        try:
            builders[kind]()
        except DomainError as err:
            raise ConfigValidationError(f"{kind.value}: {err}", str(self.config_file)) from err

    @property
    def experiment(self) -> ExperimentKind:
        """Returns the selected experiment"""
        name = self.config.get("run", "experiment").strip().lower()
        try:
            return ExperimentKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in ExperimentKind)
            raise self._error(f"unknown experiment '{name}' (choose from {choices})", "run", "experiment") from None

    @property
    def seed(self) -> int:
        return self.config.getint("run", "seed")

    @property
    def trials(self) -> int:
        return self.config.getint("run", "trials")

    @property
    def output_dir(self) -> Path:
        return Path(self.config.get("run", "output_dir"))

    @property
    def chirp_config(self) -> ChirpConfig:
        """Returns the victim FMCW waveform"""
        frame_us = self._optional_float("radar", "frame_us")
        return ChirpConfig(
            carrier_hz=self._get("radar", "carrier_ghz") * 1e9,
            bandwidth_hz=self._get("radar", "bandwidth_ghz") * 1e9,
            chirp_s=self._get("radar", "chirp_duration_us") * 1e-6,
            num_chirps=self._get("radar", "num_chirps"),
            interest_bandwidth_hz=self._get("radar", "interest_bandwidth_mhz") * 1e6,
            duty_cycle=self._get("radar", "duty_cycle"),
            frame_s=None if frame_us is None else frame_us * 1e-6,
        )

    @property
    def window(self) -> str:
        return self.config.get("radar", "window")

    @property
    def link_budget(self) -> LinkBudget:
        """Returns the link budget; the antenna gain applies at both ends"""
        return LinkBudget.from_config(self._get("link", "tx_power_dbm"), 2.0 * self._get("link", "antenna_gain_dbi"),
                                      self._get("radar", "carrier_ghz") * 1e9)

    @property
    def noise_figure_db(self) -> float:
        return self._get("link", "noise_figure_db")

    @property
    def noise(self) -> NoiseConfig:
        """Thermal noise k T0 Bs F over the ADC band, or none"""
        if not self.config.getboolean("noise", "enabled"):
            return NoiseConfig(0.0, self.seed)
        bandwidth = self._get("radar", "interest_bandwidth_mhz") * 1e6
        return NoiseConfig(thermal_noise_power(bandwidth, self.noise_figure_db), self.seed)

    @property
    def target(self) -> Target:
        return Target(self._get("target", "range_m"), self._get("target", "velocity_mps"),
                      self._get("target", "rcs_m2"))

    @property
    def interferer_distance_m(self) -> float:
        return self._get("interferer", "distance_m")

    @property
    def slope_ratios(self) -> List[float]:
        ratios = self._get("interferer", "slope_ratios")
        self._require(len(ratios) > 0 and all(r > 0 for r in ratios), "slope ratios > 0",
                      "interferer", "slope_ratios")
        return ratios

    @property
    def phase_noise(self) -> PhaseNoiseConfig:
        return PhaseNoiseConfig(self._get("phase_noise", "pedestal_dbc_hz"),
                                self._get("phase_noise", "pedestal_width_khz") * 1e3)

    @property
    def highway_scenario(self) -> HighwayScenario:
        """Returns the highway at the spot-check spacing"""
        return HighwayScenario(
            num_lanes=self._get("highway", "num_lanes"),
            lane_spacing_m=self._get("highway", "lane_spacing_m"),
            mean_spacing_m=self._get("sweep", "check_spacing_m"),
            fov_forward_rad=np.deg2rad(self._get("highway", "fov_forward_deg")),
            fov_backward_rad=np.deg2rad(self._get("highway", "fov_backward_deg")),
            radar=self.chirp_config,
            link=self.link_budget,
            target=self.target,
            victim_lane=self._get("highway", "victim_lane"),
            same_direction_lanes=self._get("highway", "same_direction_lanes"),
            noise_figure_db=self.noise_figure_db,
        )

    @property
    def spacing_grid(self) -> np.ndarray:
        lo, hi = self._get("sweep", "spacing_min_m"), self._get("sweep", "spacing_max_m")
        points = self._get("sweep", "spacing_points")
        self._require(0 < lo < hi, "0 < spacing_min_m < spacing_max_m", "sweep", "spacing_max_m")
        self._require(points >= 2, "spacing_points >= 2", "sweep", "spacing_points")
        return np.geomspace(lo, hi, points)

    @property
    def sinr_threshold_db(self) -> float:
        return self._get("sweep", "sinr_threshold_db")

    @property
    def pedestrian_rcs_m2(self) -> float:
        return self._get("sweep", "pedestrian_rcs_m2")

    @property
    def slowchirp_config(self) -> SlowChirpConfig:
        return SlowChirpConfig(
            carrier_hz=self._get("slowchirp", "carrier_ghz") * 1e9,
            bandwidth_hz=self._get("slowchirp", "bandwidth_ghz") * 1e9,
            chirp_s=self._get("slowchirp", "chirp_duration_ms") * 1e-3,
            max_range_m=self._get("slowchirp", "max_range_m"),
            max_speed_mps=self._get("slowchirp", "max_speed_mps"),
        )

    @property
    def slowchirp_settings(self) -> Dict[str, float]:
        """Channel-count geometry, estimation grid and channel protocol parameters"""
        snr_db = self._optional_float("slowchirp", "snr_db")
        return {
            "interferer_distance_m": self._get("slowchirp", "interferer_distance_m"),
            "rcs_m2": self._get("slowchirp", "rcs_m2"),
            "grid_points": self._get("slowchirp", "grid_points"),
            "noise_variance_w": 0.0 if snr_db is None else 1.0 / db_to_linear(snr_db),
            "num_radars": self._get("slowchirp", "num_radars"),
            "num_channels": self._get("slowchirp", "num_channels"),
            "rounds": self._get("slowchirp", "rounds"),
        }

    @property
    def frame_config(self) -> FrameConfig:
        return FrameConfig(
            frame_s=self._get("mac", "frame_ms") * 1e-3,
            chirp_s=self._get("mac", "chirp_duration_us") * 1e-6,
            chirps_per_frame=self._get("mac", "chirps_per_frame"),
            carrier_hz=self._get("mac", "carrier_ghz") * 1e9,
            bandwidth_hz=self._get("mac", "bandwidth_ghz") * 1e9,
            interest_bandwidth_hz=self._get("mac", "interest_bandwidth_mhz") * 1e6,
            comm_bandwidth_hz=self._get("mac", "comm_bandwidth_mhz") * 1e6,
            num_bands=self._get("mac", "num_bands"),
            sync_error_bound_s=self._get("mac", "sync_error_us") * 1e-6,
        )

    @property
    def mac_settings(self) -> MacSettings:
        fov = self._get("mac", "fov_deg")
        self._require(0 < fov <= 360, "0 < fov_deg <= 360", "mac", "fov_deg")
        self._require(self._get("mac", "num_lanes") >= 1, "num_lanes >= 1", "mac", "num_lanes")
        return MacSettings(
            radio_range_m=self._get("mac", "radio_range_m"),
            airtime_s=self._get("mac", "airtime_us") * 1e-6,
            cca_delay_s=self._get("mac", "cca_delay_us") * 1e-6,
            staleness_frames=self._get("mac", "staleness_frames"),
            road_length_m=self._get("mac", "road_length_m"),
            num_lanes=self._get("mac", "num_lanes"),
            lane_spacing_m=self._get("mac", "lane_spacing_m"),
            fov_rad=float(np.deg2rad(fov)),
            all_in_view=self._get("mac", "all_in_view"),
        )

    @property
    def radar_counts(self) -> List[int]:
        counts = self._get("mac", "radar_counts")
        self._require(len(counts) > 0 and all(c >= 1 for c in counts), "radar counts >= 1", "mac", "radar_counts")
        return counts

    @property
    def mac_frames(self) -> int:
        frames = self._get("mac", "frames")
        self._require(frames >= 1, "frames >= 1", "mac", "frames")
        return frames

    @property
    def mac_trace(self) -> bool:
        return self._get("mac", "trace")

    @property
    def ofdm_template(self) -> SteppedOfdmConfig:
        """Subcarrier spacing and carrier of all schemes; N, M, L are searched"""
        spacing = self._get("ofdm", "subcarrier_spacing_khz") * 1e3
        try:
            pattern = HopPattern(self._get("ofdm", "hop_pattern").strip().lower())
        except ValueError:
            raise self._error("hop_pattern must be 'linear' or 'random'", "ofdm", "hop_pattern") from None
        n = int(np.floor(self.adc_bandwidth_hz / spacing + 1e-9))
        return SteppedOfdmConfig(self._get("ofdm", "carrier_ghz") * 1e9, spacing, max(n, 1),
                                 cp_s=self._get("ofdm", "cyclic_prefix_ns") * 1e-9, hop_pattern=pattern,
                                 hop_seed=self.seed)

    @property
    def adc_bandwidth_hz(self) -> float:
        return self._get("ofdm", "adc_bandwidth_mhz") * 1e6

    @property
    def ofdm_search_limits(self) -> Tuple[int, int]:
        return self._get("ofdm", "max_frames"), self._get("ofdm", "max_symbols")

    @property
    def resource_budget(self) -> ResourceBudget:
        return ResourceBudget(self._get("ofdm", "total_bandwidth_ghz") * 1e9, self._get("ofdm", "total_time_ms") * 1e-3)

    @property
    def accuracy_spec(self) -> AccuracySpec:
        return AccuracySpec(self._get("accuracy", "max_range_std_m"), self._get("accuracy", "max_velocity_std_mps"),
                            self._get("accuracy", "subcarrier_snr_db"))

    @property
    def ofdm_sweeps(self) -> Dict[str, List[float]]:
        """Panel axis -> values: subcarrier SNR, range limit and velocity limit"""
        return {
            "snr_db": self._get("ofdm", "snr_sweep_db"),
            "range_limit_m": self._get("ofdm", "range_limit_sweep_m"),
            "velocity_limit_mps": self._get("ofdm", "velocity_limit_sweep_mps"),
        }
