"""Exception types shared by the numerical modules and the CLI."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(RuntimeError):
    """An iterative method (root finder, quadrature, integrator) failed."""


class NotApplicable(Exception):
    """A check was requested on input that does not meet its preconditions."""
