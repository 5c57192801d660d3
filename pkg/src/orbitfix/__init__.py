"""orbitfix: LEO vs GNSS carrier-phase positioning simulator.

A numpy library that generates satellite constellation geometry and noisy
delay/carrier-phase observations, resolves carrier-phase integer
ambiguities jointly with delay measurements, and quantifies convergence
(conditioning, ambiguity errors, position errors) over configurable
observation windows.
"""

__version__ = "0.1.0"

from .ambiguity import (
    Decorrelation,
    FloatAmbiguities,
    IntegerCandidate,
    brute_force_oracle,
    decorrelate,
    ils_search,
    ratio_test,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    GeometryError,
    InsufficientGeometryError,
    NumericError,
    OrbitfixError,
    ResourceLimitError,
)
from .linkbudget import (
    ErrorModel,
    LinkConfig,
    error_sigmas,
    free_space_path_loss,
    link_error_model,
    received_cn0,
    rms_bandwidth,
)
from .measurements import (
    ClockModel,
    DDMeasurements,
    EpochMeasurements,
    SynthScenario,
    double_difference,
    synthesize_epoch,
    synthesize_window,
)
from .orbits import (
    Constellation,
    ConstellationSpec,
    GeodeticCoord,
    KeplerianElements,
    SatelliteState,
    build_gps_nominal,
    build_walker_leo,
    ecef_to_geodetic,
    elevation_angle,
    geodetic_to_ecef,
    propagate_to_ecef,
    propagate_to_eci,
    visible_and_select,
)
from .phase import (
    DopplerSample,
    LineOfSight,
    PhaseTrace,
    doppler_phase_approx,
    doppler_state,
    line_of_sight,
    max_tolerable_frequency_error,
    phase_approx_error,
    range_to_cycles,
    true_carrier_phase,
)
from .positioning import (
    ConditionTrace,
    GeometryScenario,
    LinearizedEpoch,
    PositionEstimate,
    RwlsState,
    SolveContext,
    condition_number,
    condition_trace,
    delay_only_solve,
    fix_and_solve,
    linearize_epoch,
    rwls_update,
    schur_position_condition,
    solve_float,
)
from .scenarios import ScenarioConfig, default_config, load_config
