class MaccError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(MaccError, ValueError):
    pass


class InvalidSubset(MaccError, ValueError):
    pass


class DuplicateSubset(MaccError, ValueError):
    pass


class CyclicRequiresKEqualsC(MaccError, ValueError):
    pass


class SubsetTooSmall(MaccError, ValueError):
    pass


class IncompleteDemandVector(MaccError, ValueError):
    pass


class WrongAccessDegree(MaccError, ValueError):
    pass


class RequiresDistinctDemands(MaccError, ValueError):
    pass


class InstanceMismatch(MaccError, ValueError):
    pass


class UnknownExample(MaccError, KeyError):
    pass


class ConfigError(MaccError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DecodingFailure(MaccError):
    """A user could not decode part of its demand.

    ``subset``/``slot`` identify the transmission that was missing or
    unusable, ``term`` the XOR term that could not be stripped (None when
    the transmission itself is absent or lacks the user's own term).
    """

    def __init__(self, user, subset, slot, term=None, reason=""):
        self.user = user
        self.subset = subset
        self.slot = slot
        self.term = term
        self.reason = reason
        super().__init__(f"user {user}: transmission (S=0x{subset:x}, l={slot}): {reason}")
