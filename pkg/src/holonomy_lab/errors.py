"""Exception hierarchy shared by every module."""


class HolonomyLabError(Exception):
    """Base class for all library errors."""


class DomainError(HolonomyLabError, ValueError):
    """A parameter lies outside its admissible range."""


class CornerError(HolonomyLabError, ValueError):
    """Two-sided derivative requested at a corner."""


class IncompatibleLoopsError(HolonomyLabError, ValueError):
    """Loops live in different spaces or have different basepoints."""


class InvalidReparamError(HolonomyLabError, ValueError):
    """Reparametrization is not monotone or does not fix the endpoints."""


class InvalidLoopError(HolonomyLabError, ValueError):
    """Loop data violates continuity or basepoint constraints."""


class PolicyError(HolonomyLabError, ValueError):
    """Turning points could not be isolated inside a segment."""


class SpecError(HolonomyLabError, ValueError):
    """Counterexample sequence data is not admissible."""


class DivergenceError(HolonomyLabError, ArithmeticError):
    """Numerical integration produced non-finite values."""


class SingularityError(HolonomyLabError, ArithmeticError):
    """Connection evaluated inside its exclusion radius."""


class UnsupportedLoopError(HolonomyLabError):
    """A partial algorithm refuses the given input."""
