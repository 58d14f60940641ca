"""Exception types shared across the package."""


class CloError(Exception):
    """Base class for all errors raised by clobench."""


class ParameterError(CloError, ValueError):
    """Parameters outside the documented range."""


class ScaleError(CloError):
    """An exact enumeration would exceed the configured cap."""


class SideMismatchError(CloError, TypeError):
    """A U-side set expression was applied to a V-side member or vice versa."""


class AssumptionError(CloError):
    """The overlap assumption A_d does not hold for a rectangle family."""


class NormalFormError(CloError):
    """The normal form disagreed with the circuit (should never happen for correct CLOs)."""


class SchemaError(CloError):
    """A circuit or rectangle file is malformed."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
