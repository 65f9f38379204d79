"""parafatou: numerical toolkit for parabolic germs and their orbits.

Fatou coordinates, dynamic/fractal theta functions with analytic
continuation, Birkhoff-Ecalle-Voronin invariants extracted two
independent ways, and fractal-string analysis of real orbits.
"""

from .series import TruncSeries, SeriesError
from .germ import ParabolicGerm, Orbit, GermError, OrbitError

__all__ = [
    "TruncSeries", "SeriesError",
    "ParabolicGerm", "Orbit", "GermError", "OrbitError",
]

__version__ = "0.1.0"
