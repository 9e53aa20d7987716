"""Exception types raised across the package."""


class MWUError(Exception):
    """Base class for all package errors."""


class DomainError(MWUError, ValueError):
    """A parameter or state lies outside the domain of an operation."""


class PreconditionError(MWUError, ValueError):
    """A numerical precondition of an analysis does not hold (e.g. ``a <= 4``)."""


class CascadeError(MWUError, RuntimeError):
    """The period-doubling cascade could not be followed to the requested depth."""

    def __init__(self, message: str, last_level: int):
        super().__init__(f"{message} (last resolved level n={last_level})")
        self.last_level = last_level
