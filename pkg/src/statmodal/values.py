"""Measurement values and per-row states.

A state is one dataset row: a total assignment of measurement variables to
values.  Values are either vectors of exact rationals (feature vectors) or
symbolic labels (class names, categorical inputs).  Everything here is
immutable and hashable so that worlds can merge duplicate rows by counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import UnknownVariable

LABEL_CHARS = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.-")


def is_valid_label(symbol: str) -> bool:
    return bool(symbol) and all(c in LABEL_CHARS for c in symbol)


def render_rational(q: Fraction) -> str:
    """Render a rational exactly: as an integer or terminating decimal when
    possible, otherwise as num/den."""
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        if digits <= 27:
            scaled = q.numerator * 10 ** digits // q.denominator
            sign = "-" if scaled < 0 else ""
            text = str(abs(scaled)).rjust(digits + 1, "0")
            return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Read a rational literal: integer, decimal, or num/den."""
    return Fraction(text.strip())


@dataclass(frozen=True)
class NumVec:
    """A tuple of exact rational components."""

    components: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components",
                           tuple(Fraction(c) for c in self.components))

    @property
    def dim(self) -> int:
        return len(self.components)

    def sort_key(self):
        return (0, self.components)

    def render(self) -> str:
        return "(" + ", ".join(render_rational(c) for c in self.components) + ")"


@dataclass(frozen=True)
class Label:
    """A symbol drawn from a finite alphabet."""

    symbol: str

    def __post_init__(self) -> None:
        if not is_valid_label(self.symbol):
            raise ValueError(f"invalid label symbol: {self.symbol!r}")

    def sort_key(self):
        return (1, self.symbol)

    def render(self) -> str:
        return self.symbol


Value = NumVec | Label


def numvec(*components) -> NumVec:
    return NumVec(tuple(Fraction(c) for c in components))


def value_sort_key(v: Value):
    return v.sort_key()


@dataclass(frozen=True)
class State:
    """A total assignment of measurement variables to values.

    Stored as a name-sorted tuple of pairs so that equal assignments are
    structurally equal and hash alike regardless of construction order.
    """

    items: tuple[tuple[str, Value], ...]

    @classmethod
    def of(cls, assignment: Mapping[str, Value]) -> State:
        return cls(tuple(sorted(assignment.items())))

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.items)

    def value_of(self, var: str) -> Value:
        for name, value in self.items:
            if name == var:
                return value
        raise UnknownVariable(f"state has no variable {var!r}")

    def has(self, var: str) -> bool:
        return any(name == var for name, _ in self.items)

    def replaced(self, var: str, value: Value) -> State:
        """A copy with one variable rebound (adding it if absent)."""
        out = dict(self.items)
        out[var] = value
        return State.of(out)

    def dropped(self, var: str) -> State:
        return State(tuple(p for p in self.items if p[0] != var))

    def sort_key(self):
        return tuple((name, value.sort_key()) for name, value in self.items)

    def render(self) -> str:
        inner = ", ".join(f"{n}={v.render()}" for n, v in self.items)
        return "{" + inner + "}"


def state(**assignment: Value) -> State:
    """Keyword convenience constructor, mostly for tests."""
    return State.of(assignment)


def shared_variables(states: Iterable[State]) -> tuple[str, ...]:
    """The common variable tuple of the given states; raises if they differ."""
    it = iter(states)
    try:
        first = next(it)
    except StopIteration:
        return ()
    vars0 = first.variables
    for s in it:
        if s.variables != vars0:
            from .errors import SchemaMismatch
            raise SchemaMismatch(
                f"states disagree on variables: {vars0} vs {s.variables}")
    return vars0
