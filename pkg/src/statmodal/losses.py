"""Built-in loss functions for expected-loss bounds.

A loss takes (actual, predicted) values and returns a nonnegative rational.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import IncompatibleValues
from .values import Label, Value


def zero_one(actual: Value, predicted: Value) -> Fraction:
    """1 when the prediction misses, 0 when it matches."""
    return Fraction(0) if actual == predicted else Fraction(1)


def label_distance(actual: Value, predicted: Value) -> Fraction:
    """Absolute difference between numerically named labels."""
    def as_number(v: Value) -> Fraction:
        if not isinstance(v, Label):
            raise IncompatibleValues("label_distance expects label values")
        try:
            return Fraction(v.symbol)
        except ValueError:
            raise IncompatibleValues(
                f"label {v.symbol!r} is not numeric") from None
    return abs(as_number(actual) - as_number(predicted))


def builtin_losses():
    return {"zero_one": zero_one, "label_distance": label_distance}
