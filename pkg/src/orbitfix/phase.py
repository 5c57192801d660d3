"""Carrier-phase kinematics: line-of-sight geometry, Doppler, the true
accumulated carrier phase, and its piecewise-linear Doppler approximation.

Sign conventions (fixed once, used everywhere):

* ``doppler = -f_c * range_rate / c`` — an approaching satellite has
  positive Doppler;
* the accumulated carrier phase is reported relative to the window start
  and follows the received carrier, ``phi(t) = -(f_c/c) * (r(t) - r(t0))``,
  so that ``dphi/dt`` equals the instantaneous Doppler. A linear Doppler
  model is therefore exact whenever the Doppler is constant.

``range_to_cycles`` converts an absolute range to carrier cycles
(``r * f_c / c``) for callers that need the unwrapped geometric phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT
from .exceptions import GeometryError
from .orbits import KeplerianElements, SatelliteState, propagate_to_ecef

_FD_STEP = 1e-3  # finite-difference half step for range acceleration [s]


@dataclass(frozen=True)
class LineOfSight:
    """Receiver-to-satellite geometry at one instant."""

    range: float
    unit_vector: np.ndarray
    range_rate: float
    range_accel: float


@dataclass(frozen=True)
class PhaseTrace:
    """Carrier phase (cycles) sampled on a strictly increasing time grid."""

    times: np.ndarray
    phase: np.ndarray
    carrier_frequency: float

    def __post_init__(self):
        if len(self.times) != len(self.phase):
            raise ValueError("times and phase lengths differ")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


@dataclass(frozen=True)
class DopplerSample:
    """Doppler shift and Doppler rate at one instant."""

    time: float
    doppler: float
    doppler_rate: float


def _range_and_rate(ue: np.ndarray, pos: np.ndarray, vel: np.ndarray) -> tuple[float, float]:
    los = pos - ue
    rng = float(np.linalg.norm(los))
    if rng < 1e-6:
        raise GeometryError("satellite and receiver positions coincide")
    return rng, float(np.dot(los, vel) / rng)


def line_of_sight(ue: np.ndarray, sat: SatelliteState) -> LineOfSight:
    """Range, unit LOS vector (receiver -> satellite), range rate and range
    acceleration for a single satellite state.

    The range acceleration is obtained by central-differencing the range
    rate over +-1 ms of straight-line motion extrapolated from the given
    state, which keeps the operation valid for any trajectory source.
    """
    ue = np.asarray(ue, dtype=float)
    pos = np.asarray(sat.position_ecef, dtype=float)
    vel = np.asarray(sat.velocity_ecef, dtype=float)
    rng, rate = _range_and_rate(ue, pos, vel)
    _, rate_p = _range_and_rate(ue, pos + _FD_STEP * vel, vel)
    _, rate_m = _range_and_rate(ue, pos - _FD_STEP * vel, vel)
    accel = (rate_p - rate_m) / (2.0 * _FD_STEP)
    return LineOfSight(
        range=rng,
        unit_vector=(pos - ue) / rng,
        range_rate=rate,
        range_accel=accel,
    )


def range_to_cycles(range_m: float, carrier_frequency: float) -> float:
    """Geometric range expressed in carrier cycles, ``r * f_c / c``."""
    return range_m * carrier_frequency / C_LIGHT


def true_carrier_phase(
    ue: np.ndarray,
    sat_elements: KeplerianElements,
    carrier_frequency: float,
    times: np.ndarray,
) -> PhaseTrace:
    """Accumulated carrier phase of a propagated satellite, relative to the
    first sample (so the trace starts at zero).

    ``phi(t) = -(f_c/c) * (r(t) - r(t0))``; increments are exactly
    ``-(f_c/c)`` times the range increments.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    ue = np.asarray(ue, dtype=float)
    ranges = np.empty(times.size)
    for i, t in enumerate(times):
        st = propagate_to_ecef(sat_elements, float(t))
        ranges[i] = np.linalg.norm(st.position_ecef - ue)
    phase = -(carrier_frequency / C_LIGHT) * (ranges - ranges[0])
    return PhaseTrace(times=times, phase=phase, carrier_frequency=carrier_frequency)


def doppler_state(
    ue: np.ndarray,
    sat_pair: tuple[SatelliteState, SatelliteState],
    carrier_frequency: float,
) -> DopplerSample:
    """Doppler and Doppler rate from a pair of states bracketing an instant.

    ``doppler = -f_c * range_rate / c`` evaluated at the midpoint (mean of
    the endpoint range rates); ``doppler_rate`` from the central difference
    of the range rates. The states may come from any trajectory source.
    """
    early, late = sat_pair
    if late.time <= early.time:
        raise ValueError("state pair must be time-ordered")
    ue = np.asarray(ue, dtype=float)
    _, rr_early = _range_and_rate(ue, early.position_ecef, early.velocity_ecef)
    _, rr_late = _range_and_rate(ue, late.position_ecef, late.velocity_ecef)
    dt = late.time - early.time
    rate = 0.5 * (rr_early + rr_late)
    accel = (rr_late - rr_early) / dt
    scale = -carrier_frequency / C_LIGHT
    return DopplerSample(
        time=0.5 * (early.time + late.time),
        doppler=scale * rate,
        doppler_rate=scale * accel,
    )


def doppler_phase_approx(
    doppler_updates: list[DopplerSample],
    times: np.ndarray,
) -> PhaseTrace:
    """Piecewise-linear phase prediction from periodic Doppler updates.

    Within each update interval the phase advances at the update's Doppler
    (the ``doppler_rate`` field is deliberately ignored: this is the linear
    model). The prediction is continuous and starts at zero at
    ``times[0]``. Query times must be covered by the updates: at or after
    the first update and no more than one update interval past the last.
    """
    if not doppler_updates:
        raise ValueError("at least one Doppler update is required")
    updates = sorted(doppler_updates, key=lambda u: u.time)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    t_up = np.array([u.time for u in updates])
    f_up = np.array([u.doppler for u in updates])
    if len(updates) > 1:
        interval = float(np.median(np.diff(t_up)))
        horizon = t_up[-1] + interval
    else:
        horizon = math.inf
    if times[0] < t_up[0] - 1e-12 or times[-1] > horizon + 1e-12:
        raise ValueError(
            f"query times [{times[0]}, {times[-1]}] not covered by updates "
            f"[{t_up[0]}, {horizon}]"
        )

    # cumulative phase from the first update time, then re-anchor at times[0]
    seg = np.concatenate([[0.0], np.cumsum(f_up[:-1] * np.diff(t_up))])

    def accumulated(t: float) -> float:
        k = int(np.searchsorted(t_up, t, side="right") - 1)
        k = max(k, 0)
        return seg[k] + f_up[k] * (t - t_up[k])

    raw = np.array([accumulated(float(t)) for t in times])
    phase = raw - accumulated(float(times[0]))
    return PhaseTrace(times=times, phase=phase, carrier_frequency=math.nan)


def phase_approx_error(true_trace: PhaseTrace, approx_trace: PhaseTrace) -> np.ndarray:
    """Elementwise ``true - approx`` phase error in cycles."""
    if true_trace.times.shape != approx_trace.times.shape or not np.allclose(
        true_trace.times, approx_trace.times, rtol=0.0, atol=1e-12
    ):
        raise ValueError("phase traces are on different time grids")
    return true_trace.phase - approx_trace.phase


def max_tolerable_frequency_error(prs_period: float) -> float:
    """Largest frequency error (Hz) that keeps the predicted phase within
    one full cycle across a gap of ``prs_period`` seconds: ``1 / period``.
    """
    if not prs_period > 0:
        raise ValueError(f"PRS period must be positive, got {prs_period}")
    return 1.0 / prs_period
