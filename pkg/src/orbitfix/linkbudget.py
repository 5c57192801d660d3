"""Link budget and CRLB-based measurement error model.

Two waveform families are supported for the delay (ranging) observable:

* ``"ofdm_prs"`` — flat-spectrum wideband burst; RMS bandwidth
  ``beta = bandwidth / sqrt(12)``;
* ``"chip_correlation"`` — chip-modulated code (GPS C/A style); RMS
  bandwidth ``beta = chip_rate / sqrt(3) * chip_beta_factor``. The default
  factor 2.0 models a wideband (multi-lobe) front end, whose Gabor
  bandwidth is about twice the ideal flat-spectrum value, and lands the
  delay sigma in the classic C/A range for nominal C/N0.

The post-integration SNR is ``s = 10^(C/N0 / 10) * T``. Delay and phase
use separate integration times because in a dual-waveform system the
wideband signal exists only during its burst while the narrowband carrier
is continuous; setting both equal recovers the single-T model.

* ``sigma_delay = c / (2*pi*beta*sqrt(2*s_delay))``  [m]
* ``sigma_phase = 1 / (2*pi*sqrt(2*s_phase))``       [cycles]
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, C_LIGHT
from .exceptions import ConfigError


@dataclass(frozen=True)
class LinkConfig:
    """Link parameters of one system.

    Exactly one of ``eirp_density`` (dBW/MHz, transmit side, free-space
    loss applied per slant range) or ``received_power`` (dBW, fixed at the
    receiver regardless of range) must be set.
    """

    carrier_frequency: float
    bandwidth: float
    eirp_density: float | None = None
    received_power: float | None = None
    chip_or_symbol_rate: float = 0.0
    rx_antenna_gain: float = 0.0        # dBi
    system_noise_temp: float = 290.0    # K
    coherent_integration: float = 0.01  # s, phase observable
    delay_integration: float | None = None  # s, delay observable (None -> same)
    ranging_waveform: str = "ofdm_prs"
    chip_beta_factor: float = 2.0

    def __post_init__(self):
        if (self.eirp_density is None) == (self.received_power is None):
            raise ConfigError(
                "exactly one of eirp_density and received_power must be set"
            )
        if self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.coherent_integration <= 0:
            raise ConfigError("coherent_integration must be positive")
        if self.ranging_waveform not in ("ofdm_prs", "chip_correlation"):
            raise ConfigError(f"unknown ranging_waveform {self.ranging_waveform!r}")
        if self.ranging_waveform == "chip_correlation" and self.chip_or_symbol_rate <= 0:
            raise ConfigError("chip_correlation waveform needs chip_or_symbol_rate > 0")

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier_frequency

    @property
    def delay_integration_s(self) -> float:
        return (
            self.coherent_integration
            if self.delay_integration is None
            else self.delay_integration
        )


@dataclass(frozen=True)
class ErrorModel:
    """Per-link one-sigma measurement errors derived from the CRLB."""

    sigma_delay: float  # m
    sigma_phase: float  # cycles
    cn0: float          # dB-Hz
    finite: bool = True


def free_space_path_loss(distance: float, carrier_frequency: float) -> float:
    """Free-space path loss in dB: ``20*log10(4*pi*d*f/c)``."""
    if distance <= 0:
        raise ConfigError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance * carrier_frequency / C_LIGHT)


def received_cn0(config: LinkConfig, distance: float) -> float:
    """Received carrier-to-noise-density ratio in dB-Hz.

    EIRP-density links: C = EIRP_density + 10*log10(BW_MHz) - FSPL + G_rx.
    Fixed-power links: C = received_power + G_rx.
    """
    if config.eirp_density is not None:
        carrier_dbw = (
            config.eirp_density
            + 10.0 * math.log10(config.bandwidth / 1e6)
            - free_space_path_loss(distance, config.carrier_frequency)
            + config.rx_antenna_gain
        )
    else:
        carrier_dbw = config.received_power + config.rx_antenna_gain
    noise_density_dbw = 10.0 * math.log10(BOLTZMANN * config.system_noise_temp)
    return carrier_dbw - noise_density_dbw


def rms_bandwidth(config: LinkConfig) -> float:
    """RMS (Gabor) bandwidth of the ranging waveform in Hz."""
    if config.ranging_waveform == "ofdm_prs":
        return config.bandwidth / math.sqrt(12.0)
    return config.chip_or_symbol_rate / math.sqrt(3.0) * config.chip_beta_factor


def error_sigmas(config: LinkConfig, cn0: float) -> ErrorModel:
    """CRLB one-sigma delay (m) and phase (cycles) errors at a given C/N0."""
    if not math.isfinite(cn0):
        if cn0 == math.inf:
            return ErrorModel(sigma_delay=0.0, sigma_phase=0.0, cn0=cn0)
        return ErrorModel(
            sigma_delay=math.inf, sigma_phase=math.inf, cn0=cn0, finite=False
        )
    cn0_lin = 10.0 ** (cn0 / 10.0)
    s_delay = cn0_lin * config.delay_integration_s
    s_phase = cn0_lin * config.coherent_integration
    if s_delay <= 0 or s_phase <= 0:
        return ErrorModel(
            sigma_delay=math.inf, sigma_phase=math.inf, cn0=cn0, finite=False
        )
    beta = rms_bandwidth(config)
    sigma_delay = C_LIGHT / (2.0 * math.pi * beta * math.sqrt(2.0 * s_delay))
    sigma_phase = 1.0 / (2.0 * math.pi * math.sqrt(2.0 * s_phase))
    return ErrorModel(sigma_delay=sigma_delay, sigma_phase=sigma_phase, cn0=cn0)


def link_error_model(config: LinkConfig, distance: float) -> ErrorModel:
    """Convenience: C/N0 from the budget, then CRLB sigmas."""
    return error_sigmas(config, received_cn0(config, distance))


def link_error_models(config: LinkConfig, distances: np.ndarray) -> list[ErrorModel]:
    return [link_error_model(config, float(d)) for d in np.atleast_1d(distances)]
