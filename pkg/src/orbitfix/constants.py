"""Physical and geodetic constants used throughout the package.

All values are SI (meters, seconds, radians, kelvin) unless noted.
"""

# Speed of light [m/s]
C_LIGHT = 299_792_458.0

# Earth gravitational parameter, point-mass model [m^3/s^2]
MU_EARTH = 3.986004418e14

# Earth rotation rate [rad/s]
OMEGA_EARTH = 7.2921151467e-5

# WGS-84 ellipsoid
WGS84_A = 6_378_137.0                  # semi-major axis [m]
WGS84_F = 1.0 / 298.257223563          # flattening
WGS84_B = WGS84_A * (1.0 - WGS84_F)    # semi-minor axis [m]
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)   # first eccentricity squared

# Boltzmann constant [J/K]
BOLTZMANN = 1.380649e-23
