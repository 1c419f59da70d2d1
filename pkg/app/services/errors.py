# app/services/errors.py
"""Exception hierarchy.

``InputError`` subclasses signal malformed input or usage (CLI exit 1).
``HypothesisError`` subclasses signal that a hypothesis of the construction
failed at the requested point (CLI exit 2).
"""
from typing import Optional, Sequence


class PFactorError(Exception):
    pass


class InputError(PFactorError):
    pass


class HypothesisError(PFactorError):
    pass


class DimensionError(InputError):
    pass


class EvalError(InputError):
    pass


class EmptySetError(InputError):
    pass


class EnumerationLimitError(InputError):
    pass


class InvalidBasePoint(InputError):
    pass


class DegenerateDirectionError(InputError):
    pass


class UnknownFixtureError(InputError):
    pass


class ProblemSyntaxError(InputError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class BanachConditionFails(HypothesisError):
    pass


class NotRegularError(HypothesisError):
    pass


class NotInvertible(NotRegularError):
    def __init__(self, message: str, degenerate_faces: Optional[Sequence] = None):
        super().__init__(message)
        self.degenerate_faces = list(degenerate_faces or [])


class NoContractionError(HypothesisError):
    pass


class NonConvergence(HypothesisError):
    pass


class NotInKernel(HypothesisError):
    pass


class NotDegenerateError(HypothesisError):
    pass


class OrderTooLowError(HypothesisError):
    pass


class InsufficientSamples(HypothesisError):
    pass
