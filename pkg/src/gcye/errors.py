"""Exception types shared across the package."""


class GCyEError(Exception):
    """Base class for all library errors."""


class DomainError(GCyEError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PoleError(DomainError):
    """Evaluation at a pole of the gamma function."""


class NumericalError(GCyEError, ArithmeticError):
    """A computed value violates an internal consistency check."""


class NoConvergence(NumericalError):
    """An iterative or adaptive procedure exhausted its budget."""


class IllConditioned(NumericalError):
    """An interpolant could not resolve the data to the requested accuracy."""


class DegenerateChain(NumericalError):
    """A Markov chain mixed too poorly (or too trivially) to be trusted."""


class TruncationWarning(UserWarning):
    """A truncated series stopped while its last term was still large."""
