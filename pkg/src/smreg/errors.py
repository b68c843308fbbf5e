"""Exception hierarchy shared across the package."""


class SmregError(Exception):
    """Base class for all errors raised by :mod:`smreg`."""


class ShapeError(SmregError, ValueError):
    """Operand dimensions do not agree."""


class NotHermitianError(SmregError, ValueError):
    """A Hermitian matrix was required."""


class ConvergenceError(SmregError, RuntimeError):
    """An iterative decomposition exhausted its sweep budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularMatrixError(SmregError, ArithmeticError):
    """Matrix (or rank-one update) is numerically singular."""


class DivergenceError(SmregError, RuntimeError):
    """Hotelling-Bodewig residuals grew instead of shrinking."""

    def __init__(self, message, omega=None, residuals=()):
        super().__init__(message)
        self.omega = omega
        self.residuals = list(residuals)


class DegenerateSpectrumError(SmregError, ValueError):
    """Spectrum violates a strict ordering the analysis relies on."""


class InternalConsistencyError(SmregError, ArithmeticError):
    """A closed form produced a value that is analytically impossible."""


class GeometryError(SmregError, ValueError):
    """Invalid array/user geometry."""


class ConfigError(SmregError, ValueError):
    """Invalid simulation config; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.reason = message
        self.key = key
        self.line = line
