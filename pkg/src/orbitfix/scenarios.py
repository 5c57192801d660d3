"""Scenario configuration: a flat, strictly-validated JSON schema with
per-system defaults, plus builders that turn a config into the runtime
objects the library consumes.

Unknown keys are a hard error (no silent typos). Missing keys take the
system defaults listed in ``LEO_DEFAULTS`` / ``GNSS_DEFAULTS`` (also
documented in the README). Angles are degrees and distances meters in the
config file; everything is converted to radians/SI on load.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields as dataclass_fields

import numpy as np

from .constants import WGS84_A
from .exceptions import ConfigError
from .linkbudget import LinkConfig
from .measurements import ClockModel, SynthScenario
from .orbits import (
    Constellation,
    ConstellationSpec,
    GeodeticCoord,
    build_gps_nominal,
    build_walker_leo,
    geodetic_to_ecef,
)
from .positioning import GeometryScenario, SolveContext

LEO_DEFAULTS: dict = {
    "system": "leo",
    "constellation": "walker_leo",
    "planes": 30,
    "sats_per_plane": 28,
    "altitude_m": 600_000.0,
    "inclination_deg": 70.0,
    "phasing_factor": 1,
    "carrier_frequency_hz": 2.0e9,
    "bandwidth_hz": 1.0e6,
    "chip_or_symbol_rate_hz": 15_000.0,  # subcarrier spacing
    "eirp_density_dbw_per_mhz": 34.0,
    "received_power_dbw": None,
    "rx_antenna_gain_dbi": 0.0,
    "system_noise_temp_k": 290.0,
    "coherent_integration_s": 0.01,
    "delay_integration_s": 1.0 / 15_000.0,  # one wideband burst symbol
    "ranging_waveform": "ofdm_prs",
    "chip_beta_factor": 2.0,
    "ue_latitude_deg": 0.0,
    "ue_longitude_deg": 0.0,
    "ue_altitude_m": 0.0,
    "ref_latitude_deg": 0.0,
    "ref_longitude_deg": math.degrees(5_000.0 / WGS84_A),  # 5 km east of the UE
    "ref_altitude_m": 0.0,
    "elevation_mask_deg": 15.0,
    "epoch_interval_s": 0.01,
    "duration_s": 3.0,
    "max_satellites": 4,
    "seeds": list(range(1, 51)),
    "prs_period_s": 0.04,
    "ue_clock_bias_s": 100e-6,
    "ue_clock_drift": 1e-8,
    "ref_clock_bias_s": 37e-6,
    "ref_clock_drift": 5e-9,
    "sat_clock_bound_s": 1e-3,
    "code_schedule": "first_epoch",
    "dd_covariance": "exact",
    "ratio_threshold": 2.0,
    "condition_sample_interval_s": 1.0,
    "solve_stride_s": 0.1,
}

GNSS_DEFAULTS: dict = {
    **LEO_DEFAULTS,
    "system": "gnss",
    "constellation": "gps_nominal",
    "carrier_frequency_hz": 1575.42e6,
    "bandwidth_hz": 2.046e6,
    "chip_or_symbol_rate_hz": 1.023e6,
    "eirp_density_dbw_per_mhz": None,
    "received_power_dbw": -158.5,
    "delay_integration_s": 0.01,  # continuous code signal: one epoch
    "ranging_waveform": "chip_correlation",
}

_VALID_SYSTEMS = ("leo", "gnss")


@dataclass(frozen=True)
class ScenarioConfig:
    """One system's fully-resolved scenario parameters (SI units inside)."""

    system: str
    constellation: str
    planes: int
    sats_per_plane: int
    altitude_m: float
    inclination_deg: float
    phasing_factor: int
    carrier_frequency_hz: float
    bandwidth_hz: float
    chip_or_symbol_rate_hz: float
    eirp_density_dbw_per_mhz: float | None
    received_power_dbw: float | None
    rx_antenna_gain_dbi: float
    system_noise_temp_k: float
    coherent_integration_s: float
    delay_integration_s: float
    ranging_waveform: str
    chip_beta_factor: float
    ue_latitude_deg: float
    ue_longitude_deg: float
    ue_altitude_m: float
    ref_latitude_deg: float
    ref_longitude_deg: float
    ref_altitude_m: float
    elevation_mask_deg: float
    epoch_interval_s: float
    duration_s: float
    max_satellites: int
    seeds: list[int] = field(default_factory=list)
    prs_period_s: float = 0.04
    ue_clock_bias_s: float = 100e-6
    ue_clock_drift: float = 1e-8
    ref_clock_bias_s: float = 37e-6
    ref_clock_drift: float = 5e-9
    sat_clock_bound_s: float = 1e-3
    code_schedule: str = "first_epoch"
    dd_covariance: str = "exact"
    ratio_threshold: float = 2.0
    condition_sample_interval_s: float = 1.0
    solve_stride_s: float = 0.1

    def __post_init__(self):
        if self.system not in _VALID_SYSTEMS:
            raise ConfigError(f"system must be one of {_VALID_SYSTEMS}, got {self.system!r}")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        if not 0.0 <= self.elevation_mask_deg < 90.0:
            raise ConfigError("elevation_mask_deg must be in [0, 90)")
        if self.code_schedule not in ("first_epoch", "every_epoch"):
            raise ConfigError(f"unknown code_schedule {self.code_schedule!r}")
        if self.dd_covariance not in ("exact", "diagonal"):
            raise ConfigError(f"unknown dd_covariance {self.dd_covariance!r}")

    # -- builders ---------------------------------------------------------

    def constellation_elements(self):
        if self.constellation == "gps_nominal":
            return build_gps_nominal()
        if self.constellation == "walker_leo":
            spec = ConstellationSpec(
                kind="walker_leo",
                planes=self.planes,
                sats_per_plane=self.sats_per_plane,
                altitude=self.altitude_m,
                inclination=math.radians(self.inclination_deg),
                phasing_factor=self.phasing_factor,
            )
            return build_walker_leo(spec)
        raise ConfigError(f"unknown constellation {self.constellation!r}")

    def build_constellation(self) -> Constellation:
        return Constellation(self.constellation_elements())

    def link_config(self) -> LinkConfig:
        return LinkConfig(
            carrier_frequency=self.carrier_frequency_hz,
            bandwidth=self.bandwidth_hz,
            eirp_density=self.eirp_density_dbw_per_mhz,
            received_power=self.received_power_dbw,
            chip_or_symbol_rate=self.chip_or_symbol_rate_hz,
            rx_antenna_gain=self.rx_antenna_gain_dbi,
            system_noise_temp=self.system_noise_temp_k,
            coherent_integration=self.coherent_integration_s,
            delay_integration=self.delay_integration_s,
            ranging_waveform=self.ranging_waveform,
            chip_beta_factor=self.chip_beta_factor,
        )

    @property
    def ue_geodetic(self) -> GeodeticCoord:
        return GeodeticCoord(
            math.radians(self.ue_latitude_deg),
            math.radians(self.ue_longitude_deg),
            self.ue_altitude_m,
        )

    @property
    def ref_geodetic(self) -> GeodeticCoord:
        return GeodeticCoord(
            math.radians(self.ref_latitude_deg),
            math.radians(self.ref_longitude_deg),
            self.ref_altitude_m,
        )

    @property
    def ue_ecef(self) -> np.ndarray:
        return geodetic_to_ecef(self.ue_geodetic)

    @property
    def ref_ecef(self) -> np.ndarray:
        return geodetic_to_ecef(self.ref_geodetic)

    def synth_scenario(self, seed: int, constellation: Constellation | None = None) -> SynthScenario:
        """Runtime synthesis scenario for one Monte Carlo seed.

        Satellite clock biases are drawn (uniform within the configured
        bound) from a dedicated stream derived from the seed, before any
        measurement noise, so a window is fully reproducible.
        """
        constellation = constellation or self.build_constellation()
        clock_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC10C]))
        bound = self.sat_clock_bound_s
        sat_clocks = {
            i: ClockModel(bias=float(clock_rng.uniform(-bound, bound)), drift=0.0)
            for i in range(len(constellation))
        }
        return SynthScenario(
            constellation=constellation,
            link=self.link_config(),
            ue_ecef=self.ue_ecef,
            ref_ecef=self.ref_ecef,
            elevation_mask=math.radians(self.elevation_mask_deg),
            max_satellites=self.max_satellites,
            ue_clock=ClockModel(self.ue_clock_bias_s, self.ue_clock_drift),
            ref_clock=ClockModel(self.ref_clock_bias_s, self.ref_clock_drift),
            sat_clocks=sat_clocks,
        )

    def solve_context(self) -> SolveContext:
        return SolveContext(
            ref_receiver_ecef=self.ref_ecef,
            true_ue_ecef=self.ue_ecef,
            exact_dd_covariance=self.dd_covariance == "exact",
            code_schedule=self.code_schedule,
            ratio_threshold=self.ratio_threshold,
        )

    def geometry_scenario(
        self, max_satellites: int | None = None, constellation: Constellation | None = None
    ) -> GeometryScenario:
        """Noiseless geometry scenario; by default uses every visible
        satellite (the conditioning analysis is not capped at 4)."""
        return GeometryScenario(
            constellation=constellation or self.build_constellation(),
            ue_ecef=self.ue_ecef,
            elevation_mask=math.radians(self.elevation_mask_deg),
            epoch_interval=self.epoch_interval_s,
            wavelength=299_792_458.0 / self.carrier_frequency_hz,
            max_satellites=max_satellites,
        )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def defaults_for(system: str) -> dict:
    if system == "leo":
        return dict(LEO_DEFAULTS)
    if system == "gnss":
        return dict(GNSS_DEFAULTS)
    raise ConfigError(f"system must be one of {_VALID_SYSTEMS}, got {system!r}")


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Strict-schema config resolution: unknown keys are rejected, missing
    keys take the system defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object of scalar keys")
    system = raw.get("system", "leo")
    defaults = defaults_for(system)
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    merged = {**defaults, **raw}
    merged["seeds"] = [int(s) for s in merged["seeds"]]
    return ScenarioConfig(**merged)


def load_config(path) -> ScenarioConfig:
    """Load and validate a flat JSON scenario config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return config_from_dict(raw)


def default_config(system: str, **overrides) -> ScenarioConfig:
    """Built-in defaults for one system, with keyword overrides."""
    merged = defaults_for(system)
    unknown = sorted(set(overrides) - set(merged))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    merged.update(overrides)
    return config_from_dict(merged)
