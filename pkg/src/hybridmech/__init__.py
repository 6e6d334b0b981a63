"""Coupling estimates and open-system dynamics for hybrid quantum systems
built around a mechanical oscillator.

Submodules
----------
operators   tensor-product Hilbert spaces, operators and states
couplings   closed-form single-excitation coupling rates and figures of merit
gaussian    linear (Gaussian) dynamics, Lyapunov steady states, spectra
lindblad    truncated-Fock master equations, including cascaded couplings
scenarios   frozen, provenance-tracked parameter sets for every platform
cli         the ``hybrid`` batch front end
"""

from . import constants, couplings, gaussian, lindblad, operators, scenarios
from .errors import (HybridError, InvalidDimensionError, NoSteadyStateError, PhysicsWarning, PoleError,
                     PreconditionError, SpaceMismatchError, StiffnessError, TruncationError, TruncationWarning)
from .scenarios import Scenario, builtin, builtin_names, estimate_table

__version__ = "0.1.0"

__all__ = [
    "constants", "couplings", "gaussian", "lindblad", "operators", "scenarios",
    "HybridError", "InvalidDimensionError", "NoSteadyStateError", "PhysicsWarning", "PoleError",
    "PreconditionError", "SpaceMismatchError", "StiffnessError", "TruncationError", "TruncationWarning",
    "Scenario", "builtin", "builtin_names", "estimate_table",
]
