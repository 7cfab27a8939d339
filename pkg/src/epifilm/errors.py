"""Exception hierarchy shared by the analysis modules."""


class EpifilmError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(EpifilmError):
    """Invalid or inconsistent configuration."""


class ParseError(EpifilmError):
    """Malformed input file. Carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(loc + message)


class NoMatchError(EpifilmError):
    """No coincident supercell pair satisfies the tolerances."""


class NonConvergenceError(EpifilmError):
    """Iterative fit failed to converge."""


class IllPosedError(EpifilmError):
    """Fit problem is degenerate (no peak, peak at window edge, too few points)."""


class DegenerateBreadthError(EpifilmError):
    """Breadth component is zero within uncertainty; size or strain undefined."""


class WindowTooShortError(EpifilmError):
    """Decay trace does not cover enough lifetimes for a stable fit."""


class MonotonicityViolationError(EpifilmError):
    """Depth profile is not step-like across the interface region."""


class AllZeroChannelError(EpifilmError):
    """A profile channel contains no positive counts."""


class StabilityViolationError(EpifilmError):
    """Explicit time step exceeds the diffusion stability bound."""


class DegenerateGridError(EpifilmError):
    """Height map too small or not rectangular."""


class OutOfDomainError(EpifilmError):
    """Growth record falls outside the phase rule's declared domain."""


class SchemaMismatchError(EpifilmError):
    """Result table does not match the requested plot schema."""
