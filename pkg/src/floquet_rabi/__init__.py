"""Floquet engineering of the quantum Rabi model in the ultrastrong coupling regime."""

__version__ = "0.1.0"

from .errors import ConfigError, SolverError, TruncationError, UnsupportedWaveformError  # noqa: E402
from .hamiltonian import ModelParams  # noqa: E402

__all__ = [
    "ConfigError",
    "ModelParams",
    "SolverError",
    "TruncationError",
    "UnsupportedWaveformError",
    "__version__",
]
