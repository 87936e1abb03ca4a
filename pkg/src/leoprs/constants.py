"""Physical constants shared across the package (SI units)."""

SPEED_OF_LIGHT = 299792458.0        # m/s
EARTH_RADIUS_M = 6371.0e3           # spherical Earth radius, m
EARTH_GM = 3.986004418e14           # gravitational parameter, m^3/s^2
EARTH_ROTATION_RATE = 7.2921159e-5  # rad/s
