"""solvaq: sample-based quantum diagonalization with IEF-PCM continuum solvation."""

__version__ = "0.1.0"

from .errors import (
    SolvaqError,
    ParseError,
    ConfigError,
    CapacityError,
    ConvergenceError,
)

__all__ = [
    "SolvaqError",
    "ParseError",
    "ConfigError",
    "CapacityError",
    "ConvergenceError",
    "__version__",
]
