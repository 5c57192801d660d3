"""Synthetic pseudorange / carrier-phase observations and double differences.

Observation equations per receiver-satellite link (reception-epoch
geometry; light-time iteration is not modeled since the framework is an
error-model simulation and double differencing removes common terms):

* ``rho = r + c*(dt_rx - dt_sat) + n_rho``,    ``n_rho ~ N(0, sigma_delay^2)``
* ``Phi = r/lam + f_c*(dt_rx - dt_sat) + N + n_phi``, ``n_phi ~ N(0, sigma_phase^2)``

The integer ambiguity ``N`` is drawn once per (receiver, satellite) pair at
first visibility, uniformly in [-1e6, 1e6], and held constant for the whole
run (phase continuity, no cycle slips). All noise is drawn from a single
seeded generator in a fixed order, so a window is bit-reproducible from its
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C_LIGHT
from .exceptions import GeometryError, InsufficientGeometryError
from .linkbudget import ErrorModel, LinkConfig, link_error_model
from .orbits import Constellation, SatelliteState, elevation_angles, select_from_arrays

AMBIGUITY_RANGE = 1_000_000  # |N| bound for ground-truth draws [cycles]


@dataclass(frozen=True)
class ClockModel:
    """Affine clock error: offset(t) = bias + drift * t  [s]."""

    bias: float = 0.0
    drift: float = 0.0

    def offset_at(self, t: float) -> float:
        return self.bias + self.drift * t


@dataclass(frozen=True)
class MeasurementEntry:
    """One receiver-satellite link at one epoch."""

    sat_id: int
    pseudorange: float
    carrier_phase: float
    true_ambiguity: int
    sat_state: SatelliteState
    sigma_delay: float
    sigma_phase: float


@dataclass(frozen=True)
class EpochMeasurements:
    """All links of one receiver at one epoch, keyed by sat_id."""

    time: float
    receiver_id: str
    entries: dict[int, MeasurementEntry]


@dataclass(frozen=True)
class DDRow:
    """One double-differenced satellite row (non-reference satellite)."""

    sat_id: int
    dd_pseudorange: float
    dd_phase: float
    true_dd_ambiguity: int


@dataclass(frozen=True)
class LinkSigmas:
    """One-way sigmas of the UE and reference-receiver links to one satellite."""

    sigma_delay_ue: float
    sigma_phase_ue: float
    sigma_delay_ref: float
    sigma_phase_ref: float


@dataclass(frozen=True)
class DDMeasurements:
    """Double-differenced observables of one epoch.

    ``sat_states`` and ``link_sigmas`` include the reference satellite;
    ``rows`` exclude it. ``carrier_frequency`` rides along so downstream
    linearization knows the wavelength.
    """

    time: float
    ref_sat_id: int
    rows: list[DDRow]
    sat_states: dict[int, SatelliteState]
    link_sigmas: dict[int, LinkSigmas]
    carrier_frequency: float


@dataclass
class SynthScenario:
    """Everything measurement synthesis needs, already in ECEF/SI units."""

    constellation: Constellation
    link: LinkConfig
    ue_ecef: np.ndarray
    ref_ecef: np.ndarray
    elevation_mask: float
    max_satellites: int | None
    ue_clock: ClockModel = field(default_factory=ClockModel)
    ref_clock: ClockModel = field(default_factory=ClockModel)
    sat_clocks: dict[int, ClockModel] = field(default_factory=dict)


def _link_observables(
    rx_ecef: np.ndarray,
    rx_clock_offset: float,
    sat_state: SatelliteState,
    sat_clock_offset: float,
    ambiguity: int,
    model: ErrorModel,
    link: LinkConfig,
    rng: np.random.Generator,
) -> tuple[float, float]:
    r = float(np.linalg.norm(sat_state.position_ecef - rx_ecef))
    clock = rx_clock_offset - sat_clock_offset
    rho = r + C_LIGHT * clock + rng.normal(0.0, model.sigma_delay)
    phi = (
        r / link.wavelength
        + link.carrier_frequency * clock
        + ambiguity
        + rng.normal(0.0, model.sigma_phase)
    )
    return rho, phi


def synthesize_epoch(
    scenario: SynthScenario,
    t: float,
    ambiguities: dict[tuple[str, int], int],
    rng: np.random.Generator,
    selected: list[int] | None = None,
) -> tuple[EpochMeasurements, EpochMeasurements]:
    """Observations of the UE and the reference receiver at one epoch.

    ``ambiguities`` is the persistent (receiver, sat) -> N ground-truth map;
    missing entries are drawn here and kept by the caller. ``selected``
    overrides the per-epoch satellite selection (used by window synthesis
    to apply its reference-holding policy).
    """
    positions, velocities = scenario.constellation.states_at(t)
    if selected is None:
        selected = select_from_arrays(
            positions, scenario.ue_ecef, scenario.elevation_mask, scenario.max_satellites
        )
    if not selected:
        raise InsufficientGeometryError(f"no visible satellites at t={t}")
    # both receivers must see the whole selected set (5 km baseline, so
    # this only trims pathological mask-edge cases)
    ref_els = elevation_angles(scenario.ref_ecef, positions[selected])
    selected = [s for s, el in zip(selected, ref_els) if el > scenario.elevation_mask]
    if not selected:
        raise InsufficientGeometryError(
            f"no satellite visible from both receivers at t={t}"
        )

    epochs = {}
    for receiver_id, rx_ecef, rx_clock in (
        ("ue", scenario.ue_ecef, scenario.ue_clock),
        ("ref", scenario.ref_ecef, scenario.ref_clock),
    ):
        entries = {}
        for sat_id in sorted(selected):
            state = SatelliteState(
                sat_id=sat_id,
                position_ecef=positions[sat_id],
                velocity_ecef=velocities[sat_id],
                time=t,
            )
            key = (receiver_id, sat_id)
            if key not in ambiguities:
                ambiguities[key] = int(
                    rng.integers(-AMBIGUITY_RANGE, AMBIGUITY_RANGE + 1)
                )
            slant = float(np.linalg.norm(state.position_ecef - rx_ecef))
            model = link_error_model(scenario.link, slant)
            sat_clock = scenario.sat_clocks.get(sat_id, ClockModel())
            rho, phi = _link_observables(
                rx_ecef,
                rx_clock.offset_at(t),
                state,
                sat_clock.offset_at(t),
                ambiguities[key],
                model,
                scenario.link,
                rng,
            )
            entries[sat_id] = MeasurementEntry(
                sat_id=sat_id,
                pseudorange=rho,
                carrier_phase=phi,
                true_ambiguity=ambiguities[key],
                sat_state=state,
                sigma_delay=model.sigma_delay,
                sigma_phase=model.sigma_phase,
            )
        epochs[receiver_id] = EpochMeasurements(
            time=t, receiver_id=receiver_id, entries=entries
        )
    return epochs["ue"], epochs["ref"]


def double_difference(
    ue: EpochMeasurements,
    ref: EpochMeasurements,
    ref_sat: int,
    carrier_frequency: float = math.nan,
) -> DDMeasurements:
    """Form double differences against a reference satellite and receiver.

    For every common non-reference satellite j:
    ``dd = (ue_j - ue_r) - (ref_j - ref_r)``, applied to pseudorange and
    phase alike; the true DD ambiguity is formed identically from the
    ground-truth integers and is exact.
    """
    if ref_sat not in ue.entries or ref_sat not in ref.entries:
        raise GeometryError(f"reference satellite {ref_sat} missing from an epoch")
    common = sorted(set(ue.entries) & set(ref.entries) - {ref_sat})
    ue_r, ref_r = ue.entries[ref_sat], ref.entries[ref_sat]
    rows = []
    sat_states = {ref_sat: ue_r.sat_state}
    sigmas = {
        ref_sat: LinkSigmas(
            ue_r.sigma_delay, ue_r.sigma_phase, ref_r.sigma_delay, ref_r.sigma_phase
        )
    }
    for sat_id in common:
        ue_j, ref_j = ue.entries[sat_id], ref.entries[sat_id]
        rows.append(
            DDRow(
                sat_id=sat_id,
                dd_pseudorange=(ue_j.pseudorange - ue_r.pseudorange)
                - (ref_j.pseudorange - ref_r.pseudorange),
                dd_phase=(ue_j.carrier_phase - ue_r.carrier_phase)
                - (ref_j.carrier_phase - ref_r.carrier_phase),
                true_dd_ambiguity=(ue_j.true_ambiguity - ue_r.true_ambiguity)
                - (ref_j.true_ambiguity - ref_r.true_ambiguity),
            )
        )
        sat_states[sat_id] = ue_j.sat_state
        sigmas[sat_id] = LinkSigmas(
            ue_j.sigma_delay, ue_j.sigma_phase, ref_j.sigma_delay, ref_j.sigma_phase
        )
    return DDMeasurements(
        time=ue.time,
        ref_sat_id=ref_sat,
        rows=rows,
        sat_states=sat_states,
        link_sigmas=sigmas,
        carrier_frequency=carrier_frequency,
    )


def synthesize_window(
    scenario: SynthScenario,
    t0: float,
    duration: float,
    epoch_interval: float,
    rng_seed: int,
    collect_raw: bool = False,
):
    """Double-differenced epochs over ``[t0, t0 + duration)``.

    Satellite selection is re-evaluated per epoch; the reference satellite
    is the highest-elevation satellite of the first selection and is kept
    until it drops out of the selection, then re-chosen. The ambiguity map
    persists across the window. Deterministic given ``rng_seed``.
    """
    if duration <= 0 or epoch_interval <= 0:
        raise ValueError("duration and epoch_interval must be positive")
    rng = np.random.default_rng(rng_seed)
    n_epochs = int(round(duration / epoch_interval))
    ambiguities: dict[tuple[str, int], int] = {}
    ref_sat: int | None = None
    dd_epochs: list[DDMeasurements] = []
    raw: list[EpochMeasurements] = []
    for i in range(n_epochs):
        t = t0 + i * epoch_interval
        positions, _ = scenario.constellation.states_at(t)
        selected = select_from_arrays(
            positions, scenario.ue_ecef, scenario.elevation_mask, scenario.max_satellites
        )
        if len(selected) < 2:
            raise InsufficientGeometryError(
                f"need at least 2 visible satellites at t={t}, got {len(selected)}"
            )
        if ref_sat is None or ref_sat not in selected:
            ref_sat = selected[0]  # highest elevation
        ue_epoch, ref_epoch = synthesize_epoch(
            scenario, t, ambiguities, rng, selected=selected
        )
        dd_epochs.append(
            double_difference(
                ue_epoch, ref_epoch, ref_sat, scenario.link.carrier_frequency
            )
        )
        if collect_raw:
            raw.extend([ue_epoch, ref_epoch])
    if collect_raw:
        return dd_epochs, raw
    return dd_epochs


def dump_measurements_csv(raw_epochs: list[EpochMeasurements], path) -> None:
    """Debug dump of raw per-link observables.

    Columns: time_s, receiver, sat_id, pseudorange_m, phase_cycles, true_N.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write("time_s,receiver,sat_id,pseudorange_m,phase_cycles,true_N\n")
        for epoch in raw_epochs:
            for sat_id in sorted(epoch.entries):
                e = epoch.entries[sat_id]
                f.write(
                    f"{epoch.time:.9g},{epoch.receiver_id},{sat_id},"
                    f"{e.pseudorange:.9g},{e.carrier_phase:.9g},{e.true_ambiguity}\n"
                )
