"""Constellation geometry: orbital elements, two-body propagation, frames,
visibility and satellite selection.

Model limits, fixed deliberately for reproducibility:

* two-body Keplerian propagation, spherical gravity (point mass MU_EARTH),
  no J2/drag — adequate for observation windows up to a few hundred seconds;
* Earth modeled as the rotating WGS-84 ellipsoid for receiver placement and
  elevation angles (geodetic, not geocentric, up-vector);
* ECEF is obtained from the inertial frame by a rotation of OMEGA_EARTH * t
  about +z, with zero rotation angle at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import MU_EARTH, OMEGA_EARTH, WGS84_A, WGS84_B, WGS84_E2
from .exceptions import ConfigError, GeometryError, NumericError

_KEPLER_TOL = 1e-12
_KEPLER_MAX_ITER = 30


@dataclass(frozen=True)
class KeplerianElements:
    """Classical orbital elements of one satellite.

    Angles are radians; ``mean_anomaly_epoch`` is the mean anomaly at
    ``epoch`` (simulation time origin, seconds).
    """

    semi_major_axis: float
    eccentricity: float
    inclination: float
    raan: float
    arg_perigee: float
    mean_anomaly_epoch: float
    epoch: float = 0.0

    def __post_init__(self):
        if self.semi_major_axis <= WGS84_A:
            raise ConfigError(
                f"semi-major axis {self.semi_major_axis} m is below Earth radius"
            )
        if not 0.0 <= self.eccentricity < 1.0:
            raise ConfigError(f"eccentricity {self.eccentricity} outside [0, 1)")
        if not 0.0 <= self.inclination <= math.pi:
            raise ConfigError(f"inclination {self.inclination} outside [0, pi]")


@dataclass(frozen=True)
class SatelliteState:
    """ECEF position/velocity of one satellite at a given time."""

    sat_id: int
    position_ecef: np.ndarray
    velocity_ecef: np.ndarray
    time: float


@dataclass(frozen=True)
class ConstellationSpec:
    """Parameters of a constellation to generate.

    ``kind`` is ``"walker_leo"`` (Walker-delta shell) or ``"gps_nominal"``
    (built-in 24-slot GPS-like layout, ignores the other fields).
    """

    kind: str
    planes: int = 0
    sats_per_plane: int = 0
    altitude: float = 0.0
    inclination: float = 0.0
    phasing_factor: int = 1


@dataclass(frozen=True)
class GeodeticCoord:
    """Geodetic latitude/longitude (radians) and altitude (meters, WGS-84)."""

    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if abs(self.latitude) > math.pi / 2:
            raise ConfigError(f"latitude {self.latitude} outside [-pi/2, pi/2]")


def build_walker_leo(spec: ConstellationSpec) -> list[KeplerianElements]:
    """Build a Walker-delta constellation of circular orbits.

    RAAN is spaced evenly over 2*pi across planes; mean anomaly is spaced
    evenly over 2*pi within a plane, with an inter-plane phase offset of
    ``phasing_factor * 2*pi / total``.
    """
    if spec.kind != "walker_leo":
        raise ConfigError(f"expected walker_leo spec, got {spec.kind!r}")
    if spec.planes < 1 or spec.sats_per_plane < 1:
        raise ConfigError("walker constellation needs planes >= 1 and sats_per_plane >= 1")
    total = spec.planes * spec.sats_per_plane
    a = WGS84_A + spec.altitude
    elements = []
    for p in range(spec.planes):
        raan = 2.0 * math.pi * p / spec.planes
        for s in range(spec.sats_per_plane):
            m0 = (
                2.0 * math.pi * s / spec.sats_per_plane
                + spec.phasing_factor * 2.0 * math.pi * p / total
            ) % (2.0 * math.pi)
            elements.append(
                KeplerianElements(
                    semi_major_axis=a,
                    eccentricity=0.0,
                    inclination=spec.inclination,
                    raan=raan,
                    arg_perigee=0.0,
                    mean_anomaly_epoch=m0,
                )
            )
    return elements


# 24-slot nominal GPS-like layout: 6 planes at 55 deg inclination, RAAN
# spaced 60 deg, four argument-of-latitude slots per plane (almanac-style
# baseline values, degrees). The exact slot values are a fixed design
# choice of this package; any table with this plane structure would do.
GPS_SEMI_MAJOR_AXIS = 26_559_710.0
_GPS_A = GPS_SEMI_MAJOR_AXIS
_GPS_INCLINATION = math.radians(55.0)
_GPS_RAAN0_DEG = 272.847
_GPS_SLOTS_DEG = (
    (268.126, 161.786, 11.676, 41.806),    # plane A
    (80.956, 173.336, 309.976, 204.376),   # plane B
    (111.876, 11.796, 339.666, 241.556),   # plane C
    (135.226, 265.446, 35.156, 167.356),   # plane D
    (197.046, 302.596, 66.066, 94.916),    # plane E
    (238.886, 345.226, 105.206, 135.346),  # plane F
)


def build_gps_nominal() -> list[KeplerianElements]:
    """Build the 24-slot nominal GPS-like MEO constellation."""
    elements = []
    for p, slots in enumerate(_GPS_SLOTS_DEG):
        raan = math.radians((_GPS_RAAN0_DEG + 60.0 * p) % 360.0)
        for slot in slots:
            elements.append(
                KeplerianElements(
                    semi_major_axis=_GPS_A,
                    eccentricity=0.0,
                    inclination=_GPS_INCLINATION,
                    raan=raan,
                    arg_perigee=0.0,
                    mean_anomaly_epoch=math.radians(slot),
                )
            )
    return elements


def _solve_kepler(mean_anomaly: float, e: float) -> float:
    """Solve E - e*sin(E) = M by Newton iteration (closed form for e = 0)."""
    if e == 0.0:
        return mean_anomaly
    m = math.fmod(mean_anomaly, 2.0 * math.pi)
    ecc_anom = m if e < 0.8 else math.pi
    for _ in range(_KEPLER_MAX_ITER):
        delta = (ecc_anom - e * math.sin(ecc_anom) - m) / (1.0 - e * math.cos(ecc_anom))
        ecc_anom -= delta
        if abs(delta) < _KEPLER_TOL:
            return ecc_anom
    raise NumericError(
        f"Kepler iteration did not converge (M={mean_anomaly}, e={e})"
    )


def _perifocal_to_eci_matrix(raan: float, inclination: float, arg_perigee: float) -> np.ndarray:
    co, so = math.cos(raan), math.sin(raan)
    ci, si = math.cos(inclination), math.sin(inclination)
    cw, sw = math.cos(arg_perigee), math.sin(arg_perigee)
    return np.array(
        [
            [co * cw - so * sw * ci, -co * sw - so * cw * ci, so * si],
            [so * cw + co * sw * ci, -so * sw + co * cw * ci, -co * si],
            [sw * si, cw * si, ci],
        ]
    )


def propagate_to_eci(elements: KeplerianElements, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-body position/velocity in the inertial frame at time ``t``."""
    a, e = elements.semi_major_axis, elements.eccentricity
    n = math.sqrt(MU_EARTH / a**3)
    mean_anom = elements.mean_anomaly_epoch + n * (t - elements.epoch)
    ecc_anom = _solve_kepler(mean_anom, e)
    ce, se = math.cos(ecc_anom), math.sin(ecc_anom)
    r = a * (1.0 - e * ce)
    pos_pf = np.array([a * (ce - e), a * math.sqrt(1.0 - e * e) * se, 0.0])
    vel_pf = (math.sqrt(MU_EARTH * a) / r) * np.array(
        [-se, math.sqrt(1.0 - e * e) * ce, 0.0]
    )
    rot = _perifocal_to_eci_matrix(elements.raan, elements.inclination, elements.arg_perigee)
    return rot @ pos_pf, rot @ vel_pf


def _eci_to_ecef(pos_eci: np.ndarray, vel_eci: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    theta = OMEGA_EARTH * t
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    pos = rot @ pos_eci
    vel = rot @ vel_eci - np.cross([0.0, 0.0, OMEGA_EARTH], pos)
    return pos, vel


def propagate_to_ecef(elements: KeplerianElements, t: float, sat_id: int = 0) -> SatelliteState:
    """Two-body ECEF state at time ``t``.

    The inertial state is rotated by the Earth rotation angle
    OMEGA_EARTH * t; the velocity includes the -omega x r correction.
    """
    pos_eci, vel_eci = propagate_to_eci(elements, t)
    pos, vel = _eci_to_ecef(pos_eci, vel_eci, t)
    return SatelliteState(sat_id=sat_id, position_ecef=pos, velocity_ecef=vel, time=t)


@dataclass
class Constellation:
    """A list of satellites with a vectorized propagation path.

    Satellite ids are the indices into ``elements``. ``states_at(t)``
    returns the same numbers as per-satellite :func:`propagate_to_ecef`
    (tested), just computed with array operations.
    """

    elements: list[KeplerianElements]
    _arrays: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        els = self.elements
        self._arrays = {
            "a": np.array([e.semi_major_axis for e in els]),
            "e": np.array([e.eccentricity for e in els]),
            "rot": np.array(
                [
                    _perifocal_to_eci_matrix(e.raan, e.inclination, e.arg_perigee)
                    for e in els
                ]
            ),
            "m0": np.array([e.mean_anomaly_epoch for e in els]),
            "epoch": np.array([e.epoch for e in els]),
        }
        self._arrays["n"] = np.sqrt(MU_EARTH / self._arrays["a"] ** 3)

    def __len__(self) -> int:
        return len(self.elements)

    def states_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """ECEF positions and velocities of all satellites, shape (N, 3)."""
        a, e = self._arrays["a"], self._arrays["e"]
        mean_anom = self._arrays["m0"] + self._arrays["n"] * (t - self._arrays["epoch"])
        if np.any(e > 0.0):
            ecc = np.mod(mean_anom, 2.0 * np.pi)
            for _ in range(_KEPLER_MAX_ITER):
                delta = (ecc - e * np.sin(ecc) - np.mod(mean_anom, 2.0 * np.pi)) / (
                    1.0 - e * np.cos(ecc)
                )
                ecc -= delta
                if np.max(np.abs(delta)) < _KEPLER_TOL:
                    break
            else:
                raise NumericError("vectorized Kepler iteration did not converge")
        else:
            ecc = mean_anom
        ce, se = np.cos(ecc), np.sin(ecc)
        r = a * (1.0 - e * ce)
        pos_pf = np.stack([a * (ce - e), a * np.sqrt(1.0 - e * e) * se, np.zeros_like(a)], axis=1)
        vf = np.sqrt(MU_EARTH * a) / r
        vel_pf = np.stack([-vf * se, vf * np.sqrt(1.0 - e * e) * ce, np.zeros_like(a)], axis=1)
        rot = self._arrays["rot"]
        pos_eci = np.einsum("nij,nj->ni", rot, pos_pf)
        vel_eci = np.einsum("nij,nj->ni", rot, vel_pf)
        theta = OMEGA_EARTH * t
        c, s = math.cos(theta), math.sin(theta)
        earth_rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
        pos = pos_eci @ earth_rot.T
        vel = vel_eci @ earth_rot.T - np.cross([0.0, 0.0, OMEGA_EARTH], pos)
        return pos, vel

    def state(self, sat_id: int, t: float) -> SatelliteState:
        return propagate_to_ecef(self.elements[sat_id], t, sat_id=sat_id)


def geodetic_to_ecef(coord: GeodeticCoord) -> np.ndarray:
    """WGS-84 geodetic coordinates to ECEF (meters)."""
    sin_lat, cos_lat = math.sin(coord.latitude), math.cos(coord.latitude)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat**2)
    return np.array(
        [
            (n + coord.altitude) * cos_lat * math.cos(coord.longitude),
            (n + coord.altitude) * cos_lat * math.sin(coord.longitude),
            (n * (1.0 - WGS84_E2) + coord.altitude) * sin_lat,
        ]
    )


def ecef_to_geodetic(ecef: np.ndarray) -> GeodeticCoord:
    """ECEF to WGS-84 geodetic coordinates (iterative latitude solve)."""
    x, y, z = float(ecef[0]), float(ecef[1]), float(ecef[2])
    lon = math.atan2(y, x)
    p = math.hypot(x, y)
    if p < 1e-9:
        # polar axis
        lat = math.copysign(math.pi / 2, z)
        return GeodeticCoord(lat, lon, abs(z) - WGS84_B)
    lat = math.atan2(z, p * (1.0 - WGS84_E2))
    for _ in range(10):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat**2)
        h = p / math.cos(lat) - n
        new_lat = math.atan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
        if abs(new_lat - lat) < 1e-14:
            lat = new_lat
            break
        lat = new_lat
    sin_lat = math.sin(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat**2)
    h = p / math.cos(lat) - n
    return GeodeticCoord(lat, lon, h)


def geodetic_up(ecef: np.ndarray) -> np.ndarray:
    """Unit geodetic (ellipsoidal-normal) up vector at an ECEF point."""
    g = ecef_to_geodetic(ecef)
    cl = math.cos(g.latitude)
    return np.array(
        [cl * math.cos(g.longitude), cl * math.sin(g.longitude), math.sin(g.latitude)]
    )


def enu_matrix(coord: GeodeticCoord) -> np.ndarray:
    """Rows are the local East, North, Up unit vectors in ECEF."""
    sl, cl = math.sin(coord.latitude), math.cos(coord.latitude)
    so, co = math.sin(coord.longitude), math.cos(coord.longitude)
    return np.array(
        [
            [-so, co, 0.0],
            [-sl * co, -sl * so, cl],
            [cl * co, cl * so, sl],
        ]
    )


def elevation_angle(ue_ecef: np.ndarray, sat_ecef: np.ndarray) -> float:
    """Elevation of a satellite above the local geodetic horizon, radians.

    Measured from the horizon plane (0 at the horizon, pi/2 at zenith,
    negative below the horizon).
    """
    los = np.asarray(sat_ecef, dtype=float) - np.asarray(ue_ecef, dtype=float)
    rng = float(np.linalg.norm(los))
    if rng < 1e-6:
        raise GeometryError("satellite and receiver positions coincide")
    if float(np.linalg.norm(ue_ecef)) < 1e-6:
        raise GeometryError("receiver at Earth center")
    up = geodetic_up(np.asarray(ue_ecef, dtype=float))
    s = float(np.dot(los / rng, up))
    return math.asin(max(-1.0, min(1.0, s)))


def elevation_angles(ue_ecef: np.ndarray, sat_positions: np.ndarray) -> np.ndarray:
    """Vectorized :func:`elevation_angle` for an (N, 3) satellite array."""
    up = geodetic_up(np.asarray(ue_ecef, dtype=float))
    los = sat_positions - np.asarray(ue_ecef, dtype=float)
    rng = np.linalg.norm(los, axis=1)
    if np.any(rng < 1e-6):
        raise GeometryError("satellite and receiver positions coincide")
    s = np.clip(los @ up / rng, -1.0, 1.0)
    return np.arcsin(s)


def visible_and_select(
    states: list[SatelliteState],
    ue_ecef: np.ndarray,
    mask: float,
    k: int,
) -> list[int]:
    """Ids of the ``k`` highest-elevation satellites above the mask.

    Sorted by descending elevation; ties broken by ascending sat_id so the
    result is deterministic. Returns fewer than ``k`` ids when fewer
    satellites are visible (the caller decides whether that is fatal).
    """
    if k < 1:
        raise ConfigError("selection count k must be >= 1")
    ranked = []
    for st in states:
        el = elevation_angle(ue_ecef, st.position_ecef)
        if el > mask:
            ranked.append((-el, st.sat_id))
    ranked.sort()
    return [sat_id for _, sat_id in ranked[:k]]


def select_from_arrays(
    sat_positions: np.ndarray,
    ue_ecef: np.ndarray,
    mask: float,
    k: int | None,
) -> list[int]:
    """Array-based satellite selection (ids are row indices).

    Same policy as :func:`visible_and_select`; ``k = None`` keeps every
    visible satellite.
    """
    els = elevation_angles(ue_ecef, sat_positions)
    visible = np.nonzero(els > mask)[0]
    order = sorted(visible, key=lambda i: (-els[i], i))
    if k is not None:
        order = order[:k]
    return [int(i) for i in order]
