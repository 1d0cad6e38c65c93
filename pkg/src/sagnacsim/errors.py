"""Exception hierarchy shared by all simulator modules."""
from __future__ import annotations


class SagnacSimError(Exception):
    """Base class for all simulator errors."""


class NoSignalError(SagnacSimError):
    """Both output ports are dark; visibility and error rate are undefined."""


class InsufficientDataError(SagnacSimError):
    """A statistic was requested from too few samples or an empty window."""


class AliasingError(SagnacSimError):
    """Requested sample rate cannot represent the disturbance bandwidth."""


class ReciprocalDisturbanceError(SagnacSimError):
    """A quasi-static disturbance carries no nonreciprocal phase signature."""


class OutOfLoopError(SagnacSimError):
    """A null frequency maps to a position outside the fiber loop."""


class UndefinedResolutionError(SagnacSimError):
    """Resolution is undefined when the null frequency is at or below the
    instrument frequency resolution."""


class HarmonicAmbiguityError(SagnacSimError):
    """Detected spectral notches cannot be assigned consistent harmonic
    indices."""


class OutOfBranchError(SagnacSimError):
    """A contrast ratio lies outside the invertible working branch."""


class ZeroWorkingPointError(SagnacSimError):
    """The offset intensity equals the calibrated minimum, so the contrast
    ratio denominator vanishes."""


class ProtocolViolationError(SagnacSimError):
    """An event is not legal in the current controller mode."""

    def __init__(self, mode, event_kind):
        self.mode = mode
        self.event_kind = event_kind
        super().__init__(f"event {event_kind!r} is not legal in mode {mode!r}")


class ConfigError(SagnacSimError):
    """One or more configuration entries failed validation.

    Carries the full list of problems, not just the first one found.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
