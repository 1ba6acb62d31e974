"""Exception types raised across the package."""


class SrriskError(Exception):
    pass


class ConfigurationError(SrriskError, ValueError):
    pass


class ShapeError(SrriskError, ValueError):
    pass


class DomainError(SrriskError, ValueError):
    pass


class NumericError(SrriskError, ArithmeticError):
    pass


class NonDifferentiableLossError(SrriskError, ValueError):
    pass


class CapabilityError(SrriskError, ValueError):
    pass


class FormatError(SrriskError, ValueError):
    pass


class LengthError(FormatError):
    pass
