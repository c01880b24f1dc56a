"""Exception types shared across the library.

Class names match the error tokens used in the public contracts, so callers
can catch precisely the failure they care about.
"""


class GflowlabError(Exception):
    """Base class for all library errors."""


class SinkHasNoActions(GflowlabError):
    pass


class InvalidAction(GflowlabError, ValueError):
    pass


class NoParents(GflowlabError):
    pass


class NotTerminable(GflowlabError):
    pass


class NotEnumerable(GflowlabError):
    pass


class StateSpaceTooLarge(GflowlabError):
    def __init__(self, count, cap):
        super().__init__(f"state space has {count} states, cap is {cap}")
        self.count = count
        self.cap = cap


class DomainError(GflowlabError, ValueError):
    pass


class ShapeMismatch(GflowlabError, ValueError):
    pass


class TrajectoryOverrun(GflowlabError):
    pass


class ConfigMismatch(GflowlabError, ValueError):
    pass


class ConfigError(GflowlabError, ValueError):
    pass


class NonFiniteLoss(GflowlabError):
    """Raised when a training loss stops being finite.

    Carries the partial run log (when available) on the ``runlog`` attribute.
    """

    def __init__(self, message, runlog=None):
        super().__init__(message)
        self.runlog = runlog


class DomainMismatch(GflowlabError, ValueError):
    pass


class SizeMismatch(GflowlabError, ValueError):
    pass


class DegenerateLabels(GflowlabError, ValueError):
    pass


class InsufficientSamples(GflowlabError, ValueError):
    pass


class MissingMetrics(GflowlabError):
    pass


class OutOfGrid(GflowlabError, ValueError):
    pass


class InvalidBase(GflowlabError, ValueError):
    pass


class IncompleteSequence(GflowlabError, ValueError):
    pass


class SingularCovariance(GflowlabError, ValueError):
    pass
