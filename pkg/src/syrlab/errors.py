"""Exception hierarchy shared by every module."""


class SyracuseError(ValueError):
    """Base class for all library errors."""


class EvenParameter(SyracuseError):
    pass


class NonPositiveSum(SyracuseError):
    pass


class NotACycle(SyracuseError):
    pass


class BudgetTooSmall(SyracuseError):
    pass


class NonPositiveB(SyracuseError):
    pass


class InconclusivePrecision(SyracuseError):
    """Raised when interval refinement hits its precision cap undecided."""


class MuTooSmall(SyracuseError):
    pass


class DegenerateA(SyracuseError):
    pass


class RelationViolation(SyracuseError):
    """An identity that must hold exactly did not; indicates a bug."""


class NoOscillation(SyracuseError):
    """Cycle lacks an odd or an even element, so it has no rise/fall split."""


class WrongFamily(SyracuseError):
    pass


class BadNu(SyracuseError):
    pass


class ConfigMismatch(SyracuseError):
    """Checkpoint was written for a different sweep configuration."""
