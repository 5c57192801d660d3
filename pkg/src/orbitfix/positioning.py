"""Multi-epoch double-differenced estimation.

Builds the linearized measurement model (phase rows carry a 1/lambda-scaled
geometry block plus a unit ambiguity coefficient; code rows carry geometry
only), tracks the conditioning of the stacked phase model over time, and
estimates the receiver position by Gauss-Newton weighted least squares:
delay-only, float (joint delay + phase), and integer-fixed solutions.

Row weights are the inverse of the exact double-difference covariance
(shared reference-satellite and reference-receiver links make DD rows
correlated); a diagonal approximation is available for ablation.

The multi-epoch stack is never materialized: normal equations accumulate
per epoch (recursive weighted least squares), and the condition trace
compresses the stacked phase matrix into its QR R factor (the Cholesky
factor of the Gram matrix), which is memory-bounded and numerically valid
far beyond what a float64 Gram eigendecomposition can resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ambiguity import FloatAmbiguities, ils_search, ratio_test
from .exceptions import (
    ConvergenceError,
    GeometryError,
    InsufficientGeometryError,
    NumericError,
)
from .measurements import DDMeasurements
from .orbits import (
    Constellation,
    ecef_to_geodetic,
    enu_matrix,
    select_from_arrays,
)

_SINGULARITY_RATIO = 1e-14

Identity = tuple[int, int]  # (reference satellite, satellite)


# ---------------------------------------------------------------------------
# Linearized model of one epoch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearizedEpoch:
    """Linearized DD rows of one epoch about an approximate position.

    ``phase_geometry`` rows are (u_ref - u_j)/lambda; the ambiguity part of
    a phase row is an implicit identity block: row j has coefficient 1 on
    ``ambiguity_ids[j]`` and 0 elsewhere. Weights are full inverse
    covariance blocks.
    """

    time: float
    ambiguity_ids: list[Identity]
    phase_geometry: np.ndarray  # (m, 3)
    phase_rhs: np.ndarray       # (m,)
    phase_weight: np.ndarray    # (m, m)
    code_geometry: np.ndarray   # (m, 3)
    code_rhs: np.ndarray        # (m,)
    code_weight: np.ndarray     # (m, m)


def _dd_covariance(var_own: np.ndarray, var_ref: float, exact: bool) -> np.ndarray:
    """DD covariance: diag of per-row sums plus the shared reference term."""
    r = np.diag(var_own)
    if exact:
        r = r + var_ref
    else:
        r = r + np.diag(np.full(len(var_own), var_ref))
    return r


def _weights(dd: DDMeasurements, exact: bool) -> tuple[np.ndarray, np.ndarray]:
    sig_ref = dd.link_sigmas[dd.ref_sat_id]
    var_ref_code = sig_ref.sigma_delay_ue**2 + sig_ref.sigma_delay_ref**2
    var_ref_phase = sig_ref.sigma_phase_ue**2 + sig_ref.sigma_phase_ref**2
    var_code = np.array(
        [
            s.sigma_delay_ue**2 + s.sigma_delay_ref**2
            for s in (dd.link_sigmas[row.sat_id] for row in dd.rows)
        ]
    )
    var_phase = np.array(
        [
            s.sigma_phase_ue**2 + s.sigma_phase_ref**2
            for s in (dd.link_sigmas[row.sat_id] for row in dd.rows)
        ]
    )
    w_code = np.linalg.inv(_dd_covariance(var_code, var_ref_code, exact))
    w_phase = np.linalg.inv(_dd_covariance(var_phase, var_ref_phase, exact))
    return w_phase, w_code


def linearize_epoch(
    dd: DDMeasurements,
    approx_position: np.ndarray,
    ref_receiver: np.ndarray,
    exact_dd_covariance: bool = True,
) -> LinearizedEpoch:
    """Linearize one DD epoch about ``approx_position``.

    The unknowns are the receiver coordinates (relative to the known
    reference receiver) and one DD ambiguity per row identity
    (ref_sat, sat). Right-hand sides are observed-minus-predicted.
    """
    p = np.asarray(approx_position, dtype=float)
    b = np.asarray(ref_receiver, dtype=float)
    lam = 299_792_458.0 / dd.carrier_frequency
    ref_pos = dd.sat_states[dd.ref_sat_id].position_ecef
    d_ref = ref_pos - p
    r_ref = float(np.linalg.norm(d_ref))
    if r_ref < 1.0:
        raise GeometryError("approximate position coincides with the reference satellite")
    u_ref = d_ref / r_ref
    base_ref = float(np.linalg.norm(ref_pos - b))

    m = len(dd.rows)
    geometry = np.zeros((m, 3))
    phase_rhs = np.zeros(m)
    code_rhs = np.zeros(m)
    ids: list[Identity] = []
    for j, row in enumerate(dd.rows):
        sat_pos = dd.sat_states[row.sat_id].position_ecef
        d_j = sat_pos - p
        r_j = float(np.linalg.norm(d_j))
        u_j = d_j / r_j
        geometry[j] = u_ref - u_j
        pred = (r_j - r_ref) - (float(np.linalg.norm(sat_pos - b)) - base_ref)
        code_rhs[j] = row.dd_pseudorange - pred
        phase_rhs[j] = row.dd_phase - pred / lam
        ids.append((dd.ref_sat_id, row.sat_id))
    w_phase, w_code = _weights(dd, exact_dd_covariance)
    return LinearizedEpoch(
        time=dd.time,
        ambiguity_ids=ids,
        phase_geometry=geometry / lam,
        phase_rhs=phase_rhs,
        phase_weight=w_phase,
        code_geometry=geometry,
        code_rhs=code_rhs,
        code_weight=w_code,
    )


# ---------------------------------------------------------------------------
# Recursive WLS accumulation
# ---------------------------------------------------------------------------

@dataclass
class RwlsState:
    """Accumulated normal equations: information matrix/vector plus the
    identity -> column map. Grows only when new ambiguity identities appear.
    """

    information: np.ndarray
    information_vector: np.ndarray
    linearization_point: np.ndarray
    ambiguity_index: dict[Identity, int] = field(default_factory=dict)

    @classmethod
    def empty(cls, linearization_point: np.ndarray) -> "RwlsState":
        return cls(
            information=np.zeros((3, 3)),
            information_vector=np.zeros(3),
            linearization_point=np.asarray(linearization_point, dtype=float).copy(),
        )


def rwls_update(
    state: RwlsState,
    epoch: LinearizedEpoch,
    use_phase: bool = True,
    use_code: bool = True,
) -> RwlsState:
    """Pure accumulation of one epoch into the normal equations.

    Returns a new state; the input is not modified. Accumulation is
    commutative, and any epoch partition yields the same normal equations
    as one batch stack.
    """
    index = dict(state.ambiguity_index)
    for ident in epoch.ambiguity_ids:
        if ident not in index:
            index[ident] = 3 + len(index)
    n = 3 + len(index)
    info = np.zeros((n, n))
    vec = np.zeros(n)
    old = state.information.shape[0]
    info[:old, :old] = state.information
    vec[:old] = state.information_vector

    cols = np.array([index[i] for i in epoch.ambiguity_ids], dtype=int)
    if use_phase and len(cols) > 0:
        g = epoch.phase_geometry
        w = epoch.phase_weight
        y = epoch.phase_rhs
        info[:3, :3] += g.T @ w @ g
        wg = w @ g
        info[np.ix_(cols, [0, 1, 2])] += wg
        info[np.ix_([0, 1, 2], cols)] += wg.T
        info[np.ix_(cols, cols)] += w
        vec[:3] += g.T @ (w @ y)
        vec[cols] += w @ y
    if use_code and len(epoch.code_rhs) > 0:
        g = epoch.code_geometry
        w = epoch.code_weight
        info[:3, :3] += g.T @ w @ g
        vec[:3] += g.T @ (w @ epoch.code_rhs)
    return RwlsState(
        information=info,
        information_vector=vec,
        linearization_point=state.linearization_point.copy(),
        ambiguity_index=index,
    )


# ---------------------------------------------------------------------------
# Condition number of the stacked phase model
# ---------------------------------------------------------------------------

def condition_number(matrix: np.ndarray) -> float:
    """sigma_max / sigma_min of a matrix; +inf when effectively singular."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise ValueError("empty matrix has no condition number")
    svals = np.linalg.svd(m, compute_uv=False)
    if min(m.shape) < m.shape[1] or svals[-1] < _SINGULARITY_RATIO * svals[0]:
        return math.inf
    return float(svals[0] / svals[-1])


@dataclass(frozen=True)
class ConditionTrace:
    """Condition number of the accumulated phase model, sampled over time."""

    times: np.ndarray
    condition_numbers: np.ndarray
    gaps: list[float] = field(default_factory=list)


@dataclass
class GeometryScenario:
    """Noiseless geometry inputs for the condition-number experiment."""

    constellation: Constellation
    ue_ecef: np.ndarray
    elevation_mask: float
    epoch_interval: float
    wavelength: float
    max_satellites: int | None = None


class _RunningStack:
    """QR-compressed row stack: keeps R with R'R equal to the Gram matrix."""

    def __init__(self):
        self.r: np.ndarray | None = None
        self.cols = 3
        self.pending: list[np.ndarray] = []
        self.pending_rows = 0

    def ensure_cols(self, n: int) -> None:
        self.cols = max(self.cols, n)

    def add_rows(self, rows: np.ndarray) -> None:
        self.pending.append(rows)
        self.pending_rows += rows.shape[0]

    def _materialize(self) -> None:
        if not self.pending:
            return
        blocks = []
        if self.r is not None:
            pad = self.cols - self.r.shape[1]
            blocks.append(
                np.hstack([self.r, np.zeros((self.r.shape[0], pad))]) if pad else self.r
            )
        for rows in self.pending:
            pad = self.cols - rows.shape[1]
            blocks.append(np.hstack([rows, np.zeros((rows.shape[0], pad))]) if pad else rows)
        stacked = np.vstack(blocks)
        self.r = np.linalg.qr(stacked, mode="r")
        self.pending = []
        self.pending_rows = 0

    def condition(self) -> float:
        self._materialize()
        if self.r is None or self.r.shape[0] < self.cols:
            return math.inf
        svals = np.linalg.svd(self.r, compute_uv=False)
        if svals[-1] < _SINGULARITY_RATIO * svals[0]:
            return math.inf
        return float(svals[0] / svals[-1])


def condition_trace(
    scenario: GeometryScenario,
    duration: float,
    sample_interval: float,
) -> ConditionTrace:
    """Conditioning of the stacked multi-epoch DD phase model over time.

    Noiseless geometry rows accumulate at the scenario epoch interval; the
    condition number of everything stacked so far is sampled every
    ``sample_interval``. The satellite set is re-evaluated per epoch, the
    reference satellite (highest elevation) is held until it drops out, and
    new ambiguity columns open as new (ref, sat) identities appear. Epochs
    with fewer than two visible satellites are recorded as gaps.
    """
    if duration < sample_interval:
        raise ValueError("duration must be at least sample_interval")
    dt = scenario.epoch_interval
    n_epochs = int(round(duration / dt))
    every = max(1, int(round(sample_interval / dt)))
    stack = _RunningStack()
    index: dict[Identity, int] = {}
    ref_sat: int | None = None
    times, kappas, gaps = [], [], []
    inv_lambda = 1.0 / scenario.wavelength
    ue = np.asarray(scenario.ue_ecef, dtype=float)

    for i in range(n_epochs):
        t = (i + 1) * dt
        positions, _ = scenario.constellation.states_at(i * dt)
        selected = select_from_arrays(
            positions, ue, scenario.elevation_mask, scenario.max_satellites
        )
        if len(selected) < 2:
            gaps.append(i * dt)
        else:
            if ref_sat is None or ref_sat not in selected:
                ref_sat = selected[0]
            d = positions[selected] - ue
            units = d / np.linalg.norm(d, axis=1)[:, None]
            u_ref = units[selected.index(ref_sat)]
            rows_sats = [s for s in selected if s != ref_sat]
            cols = []
            for s in rows_sats:
                ident = (ref_sat, s)
                if ident not in index:
                    index[ident] = 3 + len(index)
                cols.append(index[ident])
            stack.ensure_cols(3 + len(index))
            block = np.zeros((len(rows_sats), stack.cols))
            for j, s in enumerate(rows_sats):
                block[j, :3] = (u_ref - units[selected.index(s)]) * inv_lambda
                block[j, cols[j]] = 1.0
            stack.add_rows(block)
        if (i + 1) % every == 0:
            times.append(t)
            kappas.append(stack.condition())
    return ConditionTrace(
        times=np.array(times), condition_numbers=np.array(kappas), gaps=gaps
    )


def schur_position_condition(information: np.ndarray) -> float:
    """Condition number of the position block's Schur complement."""
    a = information[:3, :3]
    if information.shape[0] > 3:
        b = information[:3, 3:]
        c = information[3:, 3:]
        s = a - b @ np.linalg.solve(c, b.T)
    else:
        s = a
    eig = np.linalg.eigvalsh(0.5 * (s + s.T))
    if eig[0] <= _SINGULARITY_RATIO * eig[-1]:
        return math.inf
    return float(eig[-1] / eig[0])


# ---------------------------------------------------------------------------
# Window assembly and Gauss-Newton solvers
# ---------------------------------------------------------------------------

@dataclass
class SolveContext:
    """Inputs the solvers need beyond the measurements themselves."""

    ref_receiver_ecef: np.ndarray
    true_ue_ecef: np.ndarray | None = None
    exact_dd_covariance: bool = True
    code_schedule: str = "first_epoch"  # or "every_epoch"
    ratio_threshold: float = 2.0
    node_cap: int = 10_000_000
    max_iterations: int = 10
    step_tolerance: float = 1e-4  # m


@dataclass(frozen=True)
class PositionEstimate:
    """Position plus ambiguity estimate of one solve."""

    position_ecef: np.ndarray
    covariance: np.ndarray
    ambiguity_ids: list[Identity]
    ambiguities_float: np.ndarray
    true_ambiguities: np.ndarray
    horizontal_error: float
    vertical_error: float
    ambiguities_fixed: np.ndarray | None = None
    fixed_accepted: bool = False
    iterations: int = 0


class _Segment:
    """Consecutive epochs sharing one (ref_sat, satellite set) signature."""

    def __init__(self, ref_sat: int, sat_ids: tuple[int, ...], cols: np.ndarray):
        self.ref_sat = ref_sat
        self.sat_ids = sat_ids
        self.cols = cols
        self.times: list[float] = []
        self.ref_pos: list[np.ndarray] = []
        self.sat_pos: list[np.ndarray] = []
        self.dd_phase: list[np.ndarray] = []
        self.dd_code: list[np.ndarray] = []
        self.w_phase: list[np.ndarray] = []
        self.w_code: list[np.ndarray] = []

    def finalize(self, ref_receiver: np.ndarray) -> None:
        self.times = np.array(self.times)
        self.ref_pos = np.array(self.ref_pos)
        self.sat_pos = np.array(self.sat_pos)
        self.dd_phase = np.array(self.dd_phase)
        self.dd_code = np.array(self.dd_code)
        self.w_phase = np.array(self.w_phase)
        self.w_code = np.array(self.w_code)
        # reference-receiver geometry never changes during the solve
        r_ref = np.linalg.norm(self.ref_pos - ref_receiver, axis=1)
        r_sat = np.linalg.norm(self.sat_pos - ref_receiver, axis=2)
        self.base_dd = r_sat - r_ref[:, None]  # (E, m)


class _Window:
    """Vectorized multi-epoch model shared by all solver paths."""

    def __init__(self, epochs: list[DDMeasurements], ctx: SolveContext):
        if not epochs:
            raise InsufficientGeometryError("no epochs to solve")
        self.ctx = ctx
        self.wavelength = 299_792_458.0 / epochs[0].carrier_frequency
        self.index: dict[Identity, int] = {}
        self.truth: dict[Identity, int] = {}
        segments: list[_Segment] = []
        current: _Segment | None = None
        for dd in epochs:
            sat_ids = tuple(row.sat_id for row in dd.rows)
            for row in dd.rows:
                ident = (dd.ref_sat_id, row.sat_id)
                if ident not in self.index:
                    self.index[ident] = len(self.index)
                    self.truth[ident] = row.true_dd_ambiguity
                elif self.truth[ident] != row.true_dd_ambiguity:
                    raise NumericError(
                        f"ambiguity ground truth changed for {ident} (cycle slip?)"
                    )
            if (
                current is None
                or current.ref_sat != dd.ref_sat_id
                or current.sat_ids != sat_ids
            ):
                cols = np.array(
                    [self.index[(dd.ref_sat_id, s)] for s in sat_ids], dtype=int
                )
                current = _Segment(dd.ref_sat_id, sat_ids, cols)
                segments.append(current)
            w_phase, w_code = _weights(dd, ctx.exact_dd_covariance)
            current.times.append(dd.time)
            current.ref_pos.append(dd.sat_states[dd.ref_sat_id].position_ecef)
            current.sat_pos.append(
                np.array([dd.sat_states[s].position_ecef for s in sat_ids])
            )
            current.dd_phase.append(np.array([r.dd_phase for r in dd.rows]))
            current.dd_code.append(np.array([r.dd_pseudorange for r in dd.rows]))
            current.w_phase.append(w_phase)
            current.w_code.append(w_code)
        ref_rx = np.asarray(ctx.ref_receiver_ecef, dtype=float)
        for seg in segments:
            seg.finalize(ref_rx)
        self.segments = segments
        self.t_first = epochs[0].time
        self.n_amb = len(self.index)
        self.identities = sorted(self.index, key=self.index.get)

    def _code_mask(self, seg: _Segment) -> np.ndarray:
        if self.ctx.code_schedule == "every_epoch":
            return np.ones(len(seg.times), dtype=bool)
        return np.isclose(seg.times, self.t_first)

    def accumulate(
        self,
        p: np.ndarray,
        use_phase: bool,
        use_code: bool,
        ambiguities: np.ndarray | None = None,
        estimate_ambiguities: bool = True,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Normal equations at linearization point ``p``.

        ``ambiguities`` (cycles, aligned with the identity columns) is
        subtracted from the phase right-hand side; with
        ``estimate_ambiguities`` the system keeps ambiguity-correction
        columns, otherwise only the position columns remain (fixed solve).
        Subtracting the running estimate keeps the rhs near zero, which
        avoids the catastrophic cancellation a 1e6-cycle ambiguity would
        otherwise inject into millicycle-level solves.
        """
        with_amb = use_phase and estimate_ambiguities
        n = 3 + self.n_amb if with_amb else 3
        info = np.zeros((n, n))
        vec = np.zeros(n)
        inv_lam = 1.0 / self.wavelength
        for seg in self.segments:
            d_ref = seg.ref_pos - p
            r_ref = np.linalg.norm(d_ref, axis=1)
            u_ref = d_ref / r_ref[:, None]
            d_sat = seg.sat_pos - p
            r_sat = np.linalg.norm(d_sat, axis=2)
            u_sat = d_sat / r_sat[..., None]
            g = u_ref[:, None, :] - u_sat  # (E, m, 3)
            pred = (r_sat - r_ref[:, None]) - seg.base_dd
            if use_phase:
                gl = g * inv_lam
                y = seg.dd_phase - pred * inv_lam
                if ambiguities is not None:
                    y = y - ambiguities[seg.cols]
                info[:3, :3] += np.einsum("emi,emn,enj->ij", gl, seg.w_phase, gl)
                vec[:3] += np.einsum("emi,emn,en->i", gl, seg.w_phase, y)
                if with_amb:
                    wg = np.einsum("emn,eni->mi", seg.w_phase, gl)  # (m, 3)
                    cc = 3 + seg.cols
                    info[np.ix_(cc, [0, 1, 2])] += wg
                    info[np.ix_([0, 1, 2], cc)] += wg.T
                    info[np.ix_(cc, cc)] += seg.w_phase.sum(axis=0)
                    vec[cc] += np.einsum("emn,en->m", seg.w_phase, y)
            if use_code:
                mask = self._code_mask(seg)
                if mask.any():
                    gc, wc, yc = g[mask], seg.w_code[mask], (seg.dd_code - pred)[mask]
                    info[:3, :3] += np.einsum("emi,emn,enj->ij", gc, wc, gc)
                    vec[:3] += np.einsum("emi,emn,en->i", gc, wc, yc)
        return info, vec

    def code_row_count(self) -> int:
        return sum(self._code_mask(seg).sum() * len(seg.sat_ids) for seg in self.segments)

    def truth_vector(self) -> np.ndarray:
        return np.array([self.truth[i] for i in self.identities], dtype=np.int64)


def _gauss_newton(
    window: _Window,
    p0: np.ndarray,
    use_phase: bool,
    use_code: bool,
    fixed: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Full-state Gauss-Newton: re-linearize, solve, update, until the
    position step drops below tolerance.

    Returns (position, ambiguity estimate, covariance, iterations).
    ``fixed`` holds the ambiguities at the given integers (position-only
    solve); otherwise the ambiguities are estimated jointly.
    """
    ctx = window.ctx
    p = np.asarray(p0, dtype=float).copy()
    estimate_amb = use_phase and fixed is None
    amb = np.zeros(window.n_amb) if estimate_amb else (
        fixed.astype(float) if fixed is not None else np.zeros(0)
    )
    for it in range(1, ctx.max_iterations + 1):
        info, vec = window.accumulate(
            p,
            use_phase,
            use_code,
            ambiguities=amb if (use_phase and window.n_amb) else None,
            estimate_ambiguities=estimate_amb,
        )
        try:
            sol = np.linalg.solve(info, vec)
        except np.linalg.LinAlgError as exc:
            raise NumericError("normal matrix is singular (rank-deficient model)") from exc
        p = p + sol[:3]
        if estimate_amb:
            amb = amb + sol[3:]
        if np.linalg.norm(sol[:3]) < ctx.step_tolerance:
            cov = np.linalg.inv(info)
            return p, amb, cov, it
    raise ConvergenceError(
        f"Gauss-Newton did not converge in {ctx.max_iterations} iterations",
        estimate=(p, amb),
    )


def _errors(p: np.ndarray, ctx: SolveContext) -> tuple[float, float]:
    if ctx.true_ue_ecef is None:
        return math.nan, math.nan
    truth = np.asarray(ctx.true_ue_ecef, dtype=float)
    enu = enu_matrix(ecef_to_geodetic(truth)) @ (p - truth)
    return float(np.hypot(enu[0], enu[1])), float(abs(enu[2]))


def delay_only_solve(epochs: list[DDMeasurements], ctx: SolveContext) -> PositionEstimate:
    """TDOA-style position from the DD pseudorange rows of the given epochs.

    Every given epoch's code rows are used (the caller controls the PRS
    schedule by what it passes in). Initial point: the reference receiver.
    """
    window = _Window(epochs, replace(ctx, code_schedule="every_epoch"))
    if window.code_row_count() < 3:
        raise InsufficientGeometryError(
            "delay-only solve needs at least 3 cumulative DD code rows"
        )
    p, _, cov, its = _gauss_newton(
        window, ctx.ref_receiver_ecef, use_phase=False, use_code=True
    )
    hor, vert = _errors(p, ctx)
    return PositionEstimate(
        position_ecef=p,
        covariance=cov,
        ambiguity_ids=[],
        ambiguities_float=np.array([]),
        true_ambiguities=np.array([], dtype=np.int64),
        horizontal_error=hor,
        vertical_error=vert,
        iterations=its,
    )


def solve_float(epochs: list[DDMeasurements], ctx: SolveContext) -> PositionEstimate:
    """Joint float solution: position plus real-valued DD ambiguities.

    Initial linearization point is the delay-only solution on the epochs
    the code schedule admits; phase rows from every epoch then refine
    position and estimate the ambiguities.
    """
    window = _Window(epochs, ctx)
    code_epochs = (
        epochs if ctx.code_schedule == "every_epoch" else epochs[:1]
    )
    p0 = delay_only_solve(code_epochs, ctx).position_ecef
    p, amb, cov, its = _gauss_newton(window, p0, use_phase=True, use_code=True)
    hor, vert = _errors(p, ctx)
    return PositionEstimate(
        position_ecef=p,
        covariance=cov,
        ambiguity_ids=window.identities,
        ambiguities_float=amb.copy(),
        true_ambiguities=window.truth_vector(),
        horizontal_error=hor,
        vertical_error=vert,
        iterations=its,
    )


def fix_and_solve(epochs: list[DDMeasurements], ctx: SolveContext) -> PositionEstimate:
    """Float solve, integer search, ratio-test validation, conditional re-solve.

    On acceptance the position is re-estimated with the ambiguities held at
    the fixed integers (conditional least squares, seeded at the
    conditional mean); on rejection the float solution is returned with
    ``fixed_accepted = False`` (the best integer candidate still reported).
    """
    est = solve_float(epochs, ctx)
    if len(est.ambiguities_float) == 0:
        return est
    q = est.covariance
    q_nn = q[3:, 3:]
    q_pn = q[:3, 3:]
    fa = FloatAmbiguities(values=est.ambiguities_float, covariance=0.5 * (q_nn + q_nn.T))
    candidates = ils_search(fa, n_best=2, node_cap=ctx.node_cap)
    accepted = ratio_test(candidates[0], candidates[1], ctx.ratio_threshold)
    fixed = candidates[0].values
    if not accepted:
        return replace(est, ambiguities_fixed=fixed, fixed_accepted=False)
    window = _Window(epochs, ctx)
    p_cond = est.position_ecef - q_pn @ np.linalg.solve(
        q_nn, est.ambiguities_float - fixed
    )
    p, _, cov_pos, its = _gauss_newton(
        window, p_cond, use_phase=True, use_code=True, fixed=fixed.astype(float)
    )
    hor, vert = _errors(p, ctx)
    cov = est.covariance.copy()
    cov[:3, :3] = cov_pos
    return PositionEstimate(
        position_ecef=p,
        covariance=cov,
        ambiguity_ids=est.ambiguity_ids,
        ambiguities_float=est.ambiguities_float,
        true_ambiguities=est.true_ambiguities,
        horizontal_error=hor,
        vertical_error=vert,
        ambiguities_fixed=fixed,
        fixed_accepted=True,
        iterations=its,
    )
