"""Electron vortex beams from closed but non-exact electromagnetic fields.

Simulation and analysis toolkit: phase masks for magnetic monopoles and
electrostatic line-charge devices, paraxial wave propagation, off-axis
holography, and orbital-angular-momentum diagnostics, with a scenario
pipeline exposed through the `evortex` command-line tool.
"""

from .grids import ComplexField2D, Grid2D, ScalarField2D
from .physics import BeamParameters, CONSTANTS, PhysicalConstants

__version__ = "0.1.0"

__all__ = [
    "BeamParameters",
    "CONSTANTS",
    "ComplexField2D",
    "Grid2D",
    "PhysicalConstants",
    "ScalarField2D",
    "__version__",
]
