"""Downlink beamforming through stacked intelligent metasurfaces.

The package models a base-station array feeding a stack of metasurface
layers, some phase-controlled (PC) and some amplitude-controlled (AC),
and provides the optimisation machinery used to drive it: sum-rate
beamforming, zero-forcing, user scheduling and least-squares synthesis
of the layer coefficients.
"""

from simbf.errors import (
    ConfigurationError,
    DomainError,
    SimbfError,
    SingularChannelError,
    StructuralError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "SimbfError",
    "SingularChannelError",
    "StructuralError",
    "__version__",
]
