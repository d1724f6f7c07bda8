"""Physical constants used throughout the package."""

SPEED_OF_LIGHT = 299_792_458.0
"""Vacuum speed of light [m/s], exact by definition."""

HBAR = 1.054_571_817e-34
"""Reduced Planck constant [J s], 2018 CODATA."""
