"""Two-community noisy Kuramoto model: stationary theory, bifurcations and simulation."""

__version__ = "0.1.0"

from .coupling import CouplingConfig, SymmetricCoupling
from .errors import ConvergenceError, DomainError, NotApplicable

__all__ = [
    "CouplingConfig",
    "SymmetricCoupling",
    "ConvergenceError",
    "DomainError",
    "NotApplicable",
    "__version__",
]
