"""Exception hierarchy shared by all lampwalk modules."""

from __future__ import annotations


class LampwalkError(Exception):
    """Base class for every error raised by this package."""


class EncodingError(LampwalkError, ValueError):
    """A vertex or state encoding is malformed for its graph family."""


class FamilyMismatchError(LampwalkError, TypeError):
    """An operation was called on a graph family that does not support it."""


class GraphMismatchError(LampwalkError, ValueError):
    """Two states live over different base graphs."""


class ParameterError(LampwalkError, ValueError):
    """A constructor parameter is outside its admissible range."""


class DeterminismError(LampwalkError, ValueError):
    """Word counting was requested on a nondeterministic labelled graph."""


class ConnectivityError(LampwalkError, ValueError):
    """A labelled graph is not strongly connected."""


class DistanceError(LampwalkError, ValueError):
    """Forward distance requested between mutually unreachable vertices."""


class IrreducibilityError(LampwalkError, ValueError):
    """A matrix handed to the Perron solver is reducible."""


class ConvergenceError(LampwalkError, RuntimeError):
    """An iterative or extrapolated computation had nothing to work with."""


class MemoryGuardError(LampwalkError, MemoryError):
    """A truncated state space outgrew the configured limit."""


class PresentationError(LampwalkError, ValueError):
    """A semigroup presentation does not generate its group."""


class HorizonError(LampwalkError, ValueError):
    """A count was requested beyond the trust horizon of a truncated graph."""


class HypothesisViolation(LampwalkError):
    """One or more certifications required by a result failed.

    ``failures`` lists the names of the failed certifications, e.g.
    ``["uniformly_connected", "relatively_dense"]``.
    """

    def __init__(self, failures: list[str], detail: str = ""):
        self.failures = list(failures)
        msg = "hypothesis violated: " + ", ".join(self.failures)
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
