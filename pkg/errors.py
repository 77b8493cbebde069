"""Exception types for the ITS lower-bound analyzer."""


class AnalysisError(Exception):
    """Base class for every error raised by the analyzer."""


# arith
class NonIntegerExponent(AnalysisError):
    pass


class NegativeExponent(AnalysisError):
    pass


class NotPolynomial(AnalysisError):
    pass


# program / interp
class NotSimpleLoop(AnalysisError):
    pass


class GuardViolated(AnalysisError):
    pass


class NoMatch(AnalysisError):
    pass


# smt
class BackendUnavailable(AnalysisError):
    pass


class SmtUnsupported(AnalysisError):
    """Raised when a formula uses a construct the backends cannot encode."""


# metering
class NonLinearInput(AnalysisError):
    pass


class NotLinearizable(AnalysisError):
    pass


# recurrence
class Unsolvable(AnalysisError):
    pass


class DegreeTooHigh(AnalysisError):
    pass


# transform
class IntegralityUnprovable(AnalysisError):
    pass


class NotTemporary(AnalysisError):
    pass


class RootMismatch(AnalysisError):
    pass


class NotPresent(AnalysisError):
    pass


class NotStrictSubset(AnalysisError):
    pass


# asymptotics
class NotTrivial(AnalysisError):
    pass


class NotUnivariate(AnalysisError):
    pass


class SizeNotPolynomial(AnalysisError):
    pass


# cli
class ItsSyntaxError(AnalysisError):
    """Malformed input, with the 1-based position of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SemanticError(AnalysisError):
    pass


class AnalysisTimeout(AnalysisError):
    pass
