"""Exception types shared across the package.

Every error raised on a user-facing path derives from StatModalError so the
CLI can map any of them to a single "error" exit code.
"""

from __future__ import annotations


class StatModalError(Exception):
    """Base class for all errors raised by this package."""


# -- world construction ------------------------------------------------------

class EmptyWorld(StatModalError):
    """A world must contain at least one row."""


class SchemaMismatch(StatModalError):
    """Rows or files disagree on the variable set or feature layout."""


class UnknownVariable(StatModalError):
    """A measurement variable was referenced that no state carries."""


# -- metrics and divergences -------------------------------------------------

class IncompatibleValues(StatModalError):
    """Two values cannot be compared under the requested ground metric."""


# -- formula syntax ----------------------------------------------------------

class FormulaError(StatModalError):
    """Base class for problems with formula text or structure."""


class FormulaSyntaxError(FormulaError):
    """Malformed formula text; carries line and column of the offence."""

    def __init__(self, message: str, line: int = 1, column: int = 1,
                 expected: str | None = None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} (line {line}, column {column}"
        if expected:
            detail += f"; expected {expected}"
        detail += ")"
        super().__init__(detail)


class UnknownSymbol(FormulaError):
    """A predicate, group, relation, transform, loss or label is undeclared."""


class ArityMismatch(FormulaError):
    """An atom applies a predicate to the wrong number of arguments."""


class MalformedInterval(FormulaError):
    """Interval text could not be read as a probability interval."""


class OverlappingIntervals(FormulaError):
    """The intervals of one probability bound must be pairwise disjoint."""


class OutOfRange(FormulaError):
    """A probability endpoint fell outside [0, 1]."""


# -- evaluation --------------------------------------------------------------

class UnknownPredicate(UnknownSymbol):
    pass


class UnknownRelation(UnknownSymbol):
    pass


class UnknownTransform(UnknownSymbol):
    pass


class UnknownLoss(UnknownSymbol):
    pass


class UnknownGroup(UnknownSymbol):
    pass


class UnknownLabel(StatModalError):
    """A label fell outside the declared alphabet."""


class UnknownKind(StatModalError):
    """An unrecognised template kind was requested."""


class UnknownWorld(StatModalError):
    """A world name not present in the model was referenced."""


# -- data interchange --------------------------------------------------------

class ParseError(StatModalError):
    """A data file could not be read; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None,
                 path: str | None = None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class AdapterCrashed(StatModalError):
    """The external classifier or oracle process exited non-zero."""


class ProtocolViolation(StatModalError):
    """The adapter reply did not line up with the requests sent."""


class MissingAdapter(StatModalError):
    """An operation needed an adapter command that was not configured."""


class MissingPredictions(StatModalError):
    """A prediction-dependent formula met a world without predictions."""


class IncompatibleFeature(StatModalError):
    """A transform was asked to act on a feature it cannot handle."""
