"""Experiment pipelines: Doppler dynamics, Doppler-approximation phase
error, condition-number convergence, ambiguity convergence, and positioning
performance, plus CSV emission and the two-system comparison.

Monte Carlo experiments run one independent realization per seed (results
are deterministic per seed and aggregated as medians with 10th/90th
percentiles); per-seed runs execute in parallel processes, capped by the
``ORBITFIX_WORKERS`` environment variable.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .constants import C_LIGHT, MU_EARTH, WGS84_A
from .measurements import dump_measurements_csv, synthesize_window
from .orbits import (
    GPS_SEMI_MAJOR_AXIS,
    KeplerianElements,
    SatelliteState,
    geodetic_to_ecef,
    GeodeticCoord,
    propagate_to_ecef,
)
from .phase import (
    DopplerSample,
    doppler_phase_approx,
    doppler_state,
    line_of_sight,
    phase_approx_error,
    true_carrier_phase,
)
from .positioning import delay_only_solve, fix_and_solve
from .scenarios import ScenarioConfig, config_from_dict

EXPERIMENTS = ("doppler", "phase_error", "condition", "ambiguity", "position")

# Doppler-approximation study window (matches the observation setup the
# condition/ambiguity scenarios assume: 10 ms tracking updates)
PHASE_WINDOW_S = 0.03
DOPPLER_UPDATE_S = 0.01
PHASE_GRID_S = 1e-4

Table = dict[str, np.ndarray]


@dataclass
class ExperimentResult:
    """Per-seed traces plus deterministic aggregates of one experiment."""

    experiment: str
    system: str
    aggregate: Table
    per_seed: dict[int, Table] = field(default_factory=dict)
    extra_tables: dict[str, Table] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def _metadata(config: ScenarioConfig, experiment: str) -> dict:
    return {
        "experiment": experiment,
        "system": config.system,
        "config_hash": config.config_hash(),
        "seeds": list(config.seeds),
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# Nadir-pass geometry shared by the doppler and phase-error experiments
# ---------------------------------------------------------------------------

def _system_orbit_radius(config: ScenarioConfig) -> float:
    if config.constellation == "gps_nominal":
        return GPS_SEMI_MAJOR_AXIS
    return WGS84_A + config.altitude_m


def zenith_pass_elements(config: ScenarioConfig) -> KeplerianElements:
    """A circular polar orbit passing through the zenith of a UE at
    (lat 0, lon 0) at t = 0."""
    return KeplerianElements(
        semi_major_axis=_system_orbit_radius(config),
        eccentricity=0.0,
        inclination=math.pi / 2,
        raan=0.0,
        arg_perigee=0.0,
        mean_anomaly_epoch=0.0,
    )


def run_doppler(config: ScenarioConfig) -> ExperimentResult:
    """Nadir Doppler dynamics of one representative satellite.

    ``doppler_rate_hz_per_s`` is the transverse-motion (straight-line
    relative kinematics) value f_c/c * v^2/d that frequency-error budgets
    quote; ``doppler_rate_twobody_hz_per_s`` is the smaller value a full
    two-body propagation gives (orbital curvature pulls the satellite away
    from the straight-line path, strongly so at MEO altitude).
    """
    a = _system_orbit_radius(config)
    altitude = a - WGS84_A
    speed = math.sqrt(MU_EARTH / a)
    f_c = config.carrier_frequency_hz

    # straight-line kinematics: satellite overhead, velocity transverse
    ue = np.zeros(3)
    sat = SatelliteState(
        sat_id=0,
        position_ecef=np.array([0.0, 0.0, altitude]),
        velocity_ecef=np.array([speed, 0.0, 0.0]),
        time=0.0,
    )
    los = line_of_sight(ue, sat)
    rate_linear = -f_c * los.range_accel / C_LIGHT
    doppler_now = -f_c * los.range_rate / C_LIGHT

    # two-body: zenith pass over a UE fixed on the rotating Earth
    elements = zenith_pass_elements(config)
    ue_ecef = geodetic_to_ecef(GeodeticCoord(0.0, 0.0, 0.0))
    pair = (
        propagate_to_ecef(elements, -1e-3),
        propagate_to_ecef(elements, +1e-3),
    )
    sample = doppler_state(ue_ecef, pair, f_c)

    aggregate: Table = {
        "carrier_frequency_hz": np.array([f_c]),
        "altitude_m": np.array([altitude]),
        "orbital_speed_m_per_s": np.array([speed]),
        "doppler_hz": np.array([doppler_now]),
        "doppler_rate_hz_per_s": np.array([rate_linear]),
        "doppler_rate_twobody_hz_per_s": np.array([sample.doppler_rate]),
    }
    return ExperimentResult(
        experiment="doppler",
        system=config.system,
        aggregate=aggregate,
        metadata=_metadata(config, "doppler"),
    )


def run_phase_error(config: ScenarioConfig) -> ExperimentResult:
    """True phase vs. its piecewise-linear Doppler approximation over a
    30 ms zenith-pass window with 10 ms Doppler updates (noiseless)."""
    elements = zenith_pass_elements(config)
    ue_ecef = geodetic_to_ecef(GeodeticCoord(0.0, 0.0, 0.0))
    f_c = config.carrier_frequency_hz
    times = np.round(np.arange(0.0, PHASE_WINDOW_S + PHASE_GRID_S / 2, PHASE_GRID_S), 12)
    update_times = np.arange(0.0, PHASE_WINDOW_S, DOPPLER_UPDATE_S)
    updates: list[DopplerSample] = []
    for t in update_times:
        pair = (
            propagate_to_ecef(elements, float(t) - 1e-3),
            propagate_to_ecef(elements, float(t) + 1e-3),
        )
        s = doppler_state(ue_ecef, pair, f_c)
        updates.append(DopplerSample(time=float(t), doppler=s.doppler, doppler_rate=s.doppler_rate))
    true_trace = true_carrier_phase(ue_ecef, elements, f_c, times)
    approx_trace = doppler_phase_approx(updates, times)
    error = phase_approx_error(true_trace, approx_trace)
    aggregate: Table = {
        "time_s": times,
        "true_phase_cycles": true_trace.phase,
        "approx_phase_cycles": approx_trace.phase,
        "error_cycles": error,
    }
    return ExperimentResult(
        experiment="phase_error",
        system=config.system,
        aggregate=aggregate,
        metadata=_metadata(config, "phase_error"),
    )


def run_condition(config: ScenarioConfig) -> ExperimentResult:
    """Condition number of the accumulated phase model vs. measurement time.

    Uses every visible satellite (the conditioning analysis is not capped
    at the positioning experiments' 4-satellite selection).
    """
    from .positioning import condition_trace

    if config.duration_s <= 0:
        aggregate: Table = {"time_s": np.array([]), "condition_number": np.array([])}
    else:
        trace = condition_trace(
            config.geometry_scenario(max_satellites=None),
            duration=config.duration_s,
            sample_interval=config.condition_sample_interval_s,
        )
        aggregate = {
            "time_s": trace.times,
            "condition_number": trace.condition_numbers,
        }
    return ExperimentResult(
        experiment="condition",
        system=config.system,
        aggregate=aggregate,
        metadata=_metadata(config, "condition"),
    )


# ---------------------------------------------------------------------------
# Monte Carlo experiments (ambiguity / position)
# ---------------------------------------------------------------------------

def _run_joint_seed(config: ScenarioConfig, seed: int) -> dict[str, Table]:
    """One Monte Carlo realization: synthesize a window, then run
    fix_and_solve on growing prefixes at the configured stride, plus one
    delay-only solve from the first PRS occasion."""
    scn = config.synth_scenario(seed)
    epochs = synthesize_window(
        scn, 0.0, config.duration_s, config.epoch_interval_s, seed
    )
    ctx = config.solve_context()
    stride_epochs = max(1, int(round(config.solve_stride_s / config.epoch_interval_s)))
    prefix_ends = list(range(stride_epochs, len(epochs) + 1, stride_epochs))

    times, hor, vert, accepted = [], [], [], []
    amb_err, float_err, all_fixed = [], [], []
    for k in prefix_ends:
        est = fix_and_solve(epochs[:k], ctx)
        truth = est.true_ambiguities
        ferr = np.abs(est.ambiguities_float - truth)
        if est.fixed_accepted and est.ambiguities_fixed is not None:
            cerr = np.abs(est.ambiguities_fixed - truth).astype(float)
        else:
            cerr = ferr
        times.append(epochs[k - 1].time + config.epoch_interval_s)
        hor.append(est.horizontal_error)
        vert.append(est.vertical_error)
        accepted.append(1.0 if est.fixed_accepted else 0.0)
        amb_err.append(float(np.max(cerr)) if cerr.size else math.nan)
        float_err.append(float(np.max(ferr)) if ferr.size else math.nan)
        all_fixed.append(
            1.0
            if est.fixed_accepted
            and est.ambiguities_fixed is not None
            and np.array_equal(est.ambiguities_fixed, truth)
            else 0.0
        )

    delay_est = delay_only_solve(epochs[:1], ctx)
    joint: Table = {
        "time_s": np.array(times),
        "horizontal_err_m": np.array(hor),
        "vertical_err_m": np.array(vert),
        "fixed_accepted": np.array(accepted),
        "max_abs_amb_error_cycles": np.array(amb_err),
        "max_abs_float_error_cycles": np.array(float_err),
        "all_fixed_correct": np.array(all_fixed),
    }
    delay: Table = {
        "time_s": np.array([epochs[0].time + config.epoch_interval_s]),
        "horizontal_err_m": np.array([delay_est.horizontal_error]),
        "vertical_err_m": np.array([delay_est.vertical_error]),
    }
    return {"joint": joint, "delay_only": delay}


def _seed_worker(args) -> tuple[int, dict[str, Table]]:
    raw_config, seed = args
    config = config_from_dict(raw_config)
    return seed, _run_joint_seed(config, seed)


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("ORBITFIX_WORKERS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            cap = 1
        return max(1, min(cap, n_jobs))
    return max(1, min(os.cpu_count() or 1, 8, n_jobs))


def _run_seeds(config: ScenarioConfig) -> dict[int, dict[str, Table]]:
    seeds = list(config.seeds)
    workers = _worker_count(len(seeds))
    raw = config.to_dict()
    if workers == 1 or len(seeds) <= 1:
        results = [_seed_worker((raw, s)) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_worker, [(raw, s) for s in seeds]))
    return {seed: tables for seed, tables in sorted(results)}


def _aggregate(per_seed: dict[int, Table], columns: list[str]) -> Table:
    """Median and 10th/90th percentiles across seeds, per time sample."""
    seeds = sorted(per_seed)
    times = per_seed[seeds[0]]["time_s"]
    out: Table = {"time_s": times}
    for col in columns:
        stack = np.vstack([per_seed[s][col] for s in seeds])
        out[f"median_{col}"] = np.median(stack, axis=0)
        out[f"p10_{col}"] = np.percentile(stack, 10, axis=0)
        out[f"p90_{col}"] = np.percentile(stack, 90, axis=0)
    return out


def run_ambiguity(config: ScenarioConfig) -> ExperimentResult:
    """Integer-ambiguity convergence over growing observation windows."""
    seed_tables = _run_seeds(config)
    per_seed = {
        s: {
            k: t["joint"][k]
            for k in (
                "time_s",
                "max_abs_amb_error_cycles",
                "max_abs_float_error_cycles",
                "fixed_accepted",
                "all_fixed_correct",
            )
        }
        for s, t in seed_tables.items()
    }
    aggregate = _aggregate(
        per_seed,
        ["max_abs_amb_error_cycles", "max_abs_float_error_cycles", "all_fixed_correct"],
    )
    return ExperimentResult(
        experiment="ambiguity",
        system=config.system,
        aggregate=aggregate,
        per_seed=per_seed,
        metadata=_metadata(config, "ambiguity"),
    )


def run_position(config: ScenarioConfig) -> ExperimentResult:
    """Positioning error over growing windows, joint and delay-only modes."""
    seed_tables = _run_seeds(config)
    per_seed = {
        s: {
            k: t["joint"][k]
            for k in ("time_s", "horizontal_err_m", "vertical_err_m", "fixed_accepted")
        }
        for s, t in seed_tables.items()
    }
    delay_seed = {s: t["delay_only"] for s, t in seed_tables.items()}
    aggregate = _aggregate(per_seed, ["horizontal_err_m", "vertical_err_m"])
    delay_aggregate = _aggregate(delay_seed, ["horizontal_err_m", "vertical_err_m"])
    return ExperimentResult(
        experiment="position",
        system=config.system,
        aggregate=aggregate,
        per_seed=per_seed,
        extra_tables={"delay_only_aggregate": delay_aggregate},
        metadata=_metadata(config, "position"),
    )


_RUNNERS = {
    "doppler": run_doppler,
    "phase_error": run_phase_error,
    "condition": run_condition,
    "ambiguity": run_ambiguity,
    "position": run_position,
}


def run_experiment(config: ScenarioConfig, experiment: str) -> ExperimentResult:
    """Dispatch one experiment; deterministic for a given (config, seeds)."""
    if experiment not in _RUNNERS:
        raise ValueError(f"unknown experiment {experiment!r}; pick from {EXPERIMENTS}")
    return _RUNNERS[experiment](config)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return f"{f:.9g}"


def _write_table(path, table: Table) -> None:
    cols = list(table)
    n = len(table[cols[0]]) if cols else 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(cols) + "\n")
        for i in range(n):
            f.write(",".join(_format_value(table[c][i]) for c in cols) + "\n")


def emit_csv(result: ExperimentResult, out_dir) -> list[str]:
    """One CSV per trace plus a manifest; byte-stable for identical inputs."""
    os.makedirs(out_dir, exist_ok=True)
    base = f"{result.experiment}_{result.system}"
    paths = []

    agg_path = os.path.join(out_dir, f"{base}_aggregate.csv")
    _write_table(agg_path, result.aggregate)
    paths.append(agg_path)
    for name in sorted(result.extra_tables):
        p = os.path.join(out_dir, f"{base}_{name}.csv")
        _write_table(p, result.extra_tables[name])
        paths.append(p)
    for seed in sorted(result.per_seed):
        p = os.path.join(out_dir, f"{base}_seed{seed:03d}.csv")
        _write_table(p, result.per_seed[seed])
        paths.append(p)

    manifest = dict(result.metadata)
    manifest["files"] = [os.path.basename(p) for p in paths]
    man_path = os.path.join(out_dir, f"{base}_manifest.json")
    with open(man_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    paths.append(man_path)
    return paths


# ---------------------------------------------------------------------------
# Two-system comparison
# ---------------------------------------------------------------------------

def plateau_onset(
    times: np.ndarray, values: np.ndarray, window_s: float = 50.0, rel: float = 0.05
) -> float | None:
    """Earliest time from which every ``window_s``-apart sample pair changes
    by less than ``rel`` (relative); None when the trace never settles."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        return None
    step = times[1] - times[0]
    k = max(1, int(round(window_s / step)))
    if k >= len(values):
        return None
    with np.errstate(invalid="ignore"):
        ok = np.abs(values[k:] / values[:-k] - 1.0) < rel
    ok &= np.isfinite(values[k:]) & np.isfinite(values[:-k])
    bad = np.nonzero(~ok)[0]
    onset = 0 if bad.size == 0 else int(bad[-1]) + 1
    if onset >= len(ok):
        return None
    return float(times[onset])


def _verdict_rows(result: ExperimentResult) -> dict[str, object]:
    exp = result.experiment
    agg = result.aggregate
    if exp == "ambiguity":
        t = agg["time_s"]
        v = agg["median_max_abs_amb_error_cycles"]
        solved = v == 0
        bad = np.nonzero(~solved)[0]
        onset = 0 if bad.size == 0 else int(bad[-1]) + 1
        converged = onset < len(t)
        return {
            "metric": "median_max_abs_amb_error_cycles",
            "converged": converged,
            "convergence_time_s": float(t[onset]) if converged else math.nan,
            "final_value": float(v[-1]),
        }
    if exp == "position":
        t = agg["time_s"]
        v = agg["median_horizontal_err_m"]
        ok = v <= 0.1
        bad = np.nonzero(~ok)[0]
        onset = 0 if bad.size == 0 else int(bad[-1]) + 1
        converged = onset < len(t)
        return {
            "metric": "median_horizontal_err_m",
            "converged": converged,
            "convergence_time_s": float(t[onset]) if converged else math.nan,
            "final_value": float(v[-1]),
        }
    if exp == "condition":
        t, v = agg["time_s"], agg["condition_number"]
        onset = plateau_onset(t, v) if len(t) else None
        return {
            "metric": "condition_number",
            "converged": onset is not None,
            "convergence_time_s": onset if onset is not None else math.nan,
            "final_value": float(v[-1]) if len(v) else math.nan,
        }
    if exp == "doppler":
        return {
            "metric": "doppler_rate_hz_per_s",
            "converged": True,
            "convergence_time_s": math.nan,
            "final_value": float(agg["doppler_rate_hz_per_s"][0]),
        }
    # phase_error
    return {
        "metric": "max_abs_error_cycles",
        "converged": True,
        "convergence_time_s": math.nan,
        "final_value": float(np.max(np.abs(agg["error_cycles"]))),
    }


def compare_systems(
    leo_config: ScenarioConfig, gnss_config: ScenarioConfig, experiment: str
) -> tuple[ExperimentResult, ExperimentResult, Table]:
    """Run both systems on matched settings and build the verdict table."""
    leo = run_experiment(leo_config, experiment)
    gnss = run_experiment(gnss_config, experiment)
    rows = [_verdict_rows(leo), _verdict_rows(gnss)]
    verdict: Table = {
        "system": np.array(["leo", "gnss"], dtype=object),
        "metric": np.array([r["metric"] for r in rows], dtype=object),
        "converged": np.array([1.0 if r["converged"] else 0.0 for r in rows]),
        "convergence_time_s": np.array([r["convergence_time_s"] for r in rows]),
        "final_value": np.array([r["final_value"] for r in rows]),
    }
    return leo, gnss, verdict


def emit_verdict_csv(verdict: Table, experiment: str, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"compare_{experiment}_verdict.csv")
    cols = list(verdict)
    n = len(verdict[cols[0]])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(cols) + "\n")
        for i in range(n):
            cells = []
            for c in cols:
                v = verdict[c][i]
                cells.append(str(v) if isinstance(v, str) else _format_value(v))
            f.write(",".join(cells) + "\n")
    return path


def dump_first_seed_measurements(config: ScenarioConfig, out_dir) -> str:
    """Raw measurement dump (first seed) for debugging."""
    seed = config.seeds[0] if config.seeds else 1
    scn = config.synth_scenario(seed)
    _, raw = synthesize_window(
        scn, 0.0, config.duration_s, config.epoch_interval_s, seed, collect_raw=True
    )
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"measurements_{config.system}_seed{seed:03d}.csv")
    dump_measurements_csv(raw, path)
    return path
