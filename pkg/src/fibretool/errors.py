"""Exception hierarchy shared by every fibretool module."""


class FibreToolError(Exception):
    """Base class for all errors raised by fibretool."""


class NotCoprime(FibreToolError, ValueError):
    pass


class DegenerateSurgery(FibreToolError, ValueError):
    pass


class NotPrimitive(FibreToolError, ValueError):
    pass


class NotOnBoundary(FibreToolError, ValueError):
    pass


class DimensionMismatch(FibreToolError, ValueError):
    pass


class StepTooLarge(FibreToolError, ValueError):
    pass


class EmptyFiber(FibreToolError):
    pass


class ToleranceTooCoarse(FibreToolError):
    pass


class NonTransverseSlice(FibreToolError):
    pass


class MultiComponent(FibreToolError):
    pass


class InvalidMultiplicity(FibreToolError, ValueError):
    pass


class ConfigParse(FibreToolError):
    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
