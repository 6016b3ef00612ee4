"""Exception types shared by every module."""


class QuasiQuantError(Exception):
    pass


class ConfigurationError(QuasiQuantError):
    """Mismatched orders, bad permutations, incompatible objects."""


class NotInvertible(QuasiQuantError):
    pass


class InputError(QuasiQuantError):
    """Input data violates a documented precondition (antisymmetry, counit, ...)."""


class PreconditionError(QuasiQuantError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class UnsupportedDegree(QuasiQuantError):
    pass


class InternalConsistencyError(QuasiQuantError):
    """A structure the engine built failed its own verification."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TruncationError(QuasiQuantError):
    pass
