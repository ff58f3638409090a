"""Exception and warning types shared across the package."""


class BackboneError(Exception):
    """Base class for all errors raised by this package."""


# data ------------------------------------------------------------------------


class ZeroVarianceColumn(BackboneError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance; drop it before standardizing")


class ParseError(BackboneError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = f" (row {row}, column {column})" if row is not None else ""
        super().__init__(message + where)


class MissingValue(ParseError):
    pass


# generators ------------------------------------------------------------------


class DegenerateSignal(BackboneError, ValueError):
    pass


class InfeasibleConfig(BackboneError, ValueError):
    pass


# solvers ---------------------------------------------------------------------


class LinearSolveFailure(BackboneError, ArithmeticError):
    pass


class TooLarge(BackboneError, ValueError):
    pass


class InvalidGrid(BackboneError, ValueError):
    pass


class FeatureIndexOutOfRange(BackboneError, IndexError):
    pass


# orchestration ---------------------------------------------------------------


class ContractViolation(BackboneError, RuntimeError):
    pass


# metrics ---------------------------------------------------------------------


class ConstantResponse(BackboneError, ValueError):
    pass


class SingleClass(BackboneError, ValueError):
    pass


# configuration ---------------------------------------------------------------


class ConfigError(BackboneError, ValueError):
    pass


class DuplicateKey(ConfigError):
    def __init__(self, key, line):
        self.key = key
        self.line = line
        super().__init__(f"duplicate key {key!r} on line {line}")


class UnknownKey(ConfigError):
    def __init__(self, key, line=None):
        self.key = key
        self.line = line
        where = f" on line {line}" if line is not None else ""
        super().__init__(f"unknown key {key!r}{where}")


class MissingRequired(ConfigError):
    def __init__(self, keys):
        self.keys = list(keys)
        super().__init__("missing required keys: " + ", ".join(self.keys))


# non-fatal conditions, reported through the warnings module -------------------


class BackboneWarning(UserWarning):
    pass


class NewtonDivergence(BackboneWarning):
    """Univariate logistic fit did not converge (typically perfect separation)."""


class AllZeroUtilities(BackboneWarning):
    """All candidate utilities are zero; sampling fell back to uniform weights."""


class NonConvergence(BackboneWarning):
    """An iterative solver hit its iteration cap before meeting its tolerance."""


class EmptyBackbone(BackboneWarning):
    """No subproblem selected any feature; the top screened features were used."""
