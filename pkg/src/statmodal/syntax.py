"""Formula abstract syntax and the canonical printer.

The language is two-level.  Row formulas (the Static* family plus Atom) are
classical propositional formulas read against one dataset row.  Dataset
formulas are read against a whole world: probability bounds over a row
formula, conditioning, indistinguishability, transform and knowledge
modalities, and an expected-loss bound.  Only the core connectives are kept
as nodes; or, implication, iff and the possibility modality are definitional
sugar expanded at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .divergence import DivergenceSpec
from .errors import MalformedInterval, OutOfRange, OverlappingIntervals
from .values import render_rational


# -- probability intervals ---------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """One nonempty subinterval of [0, 1] with rational endpoints."""

    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not (0 <= self.lo <= 1 and 0 <= self.hi <= 1):
            raise OutOfRange(
                f"interval endpoints must lie in [0,1]: {self.render()}")
        if self.lo > self.hi:
            raise MalformedInterval(f"empty interval: {self.render()}")
        if self.lo == self.hi and (self.lo_open or self.hi_open):
            raise MalformedInterval(f"empty interval: {self.render()}")

    def contains(self, p: Fraction) -> bool:
        if self.lo < p < self.hi:
            return True
        if p == self.lo and not self.lo_open:
            return True
        if p == self.hi and not self.hi_open:
            return True
        return False

    def is_point(self) -> bool:
        return self.lo == self.hi

    def render(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{render_rational(self.lo)},{render_rational(self.hi)}{right}"


def point(c) -> Interval:
    return Interval(Fraction(c), Fraction(c))


@dataclass(frozen=True)
class IntervalSet:
    """A union of pairwise disjoint intervals, kept sorted by lower end."""

    intervals: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if not self.intervals:
            raise MalformedInterval("interval set must contain an interval")
        ordered = tuple(sorted(self.intervals,
                               key=lambda iv: (iv.lo, iv.lo_open, iv.hi)))
        object.__setattr__(self, "intervals", ordered)
        for a, b in zip(ordered, ordered[1:]):
            if b.lo < a.hi:
                raise OverlappingIntervals(
                    f"intervals overlap: {a.render()} and {b.render()}")
            if b.lo == a.hi and not a.hi_open and not b.lo_open:
                raise OverlappingIntervals(
                    f"intervals overlap at {render_rational(b.lo)}: "
                    f"{a.render()} and {b.render()}")

    def contains(self, p: Fraction) -> bool:
        return any(iv.contains(p) for iv in self.intervals)

    def render(self) -> str:
        if len(self.intervals) == 1 and self.intervals[0].is_point():
            return "=" + render_rational(self.intervals[0].lo)
        return " u ".join(iv.render() for iv in self.intervals)


def interval_set(*intervals: Interval) -> IntervalSet:
    return IntervalSet(tuple(intervals))


FULL = IntervalSet((Interval(Fraction(0), Fraction(1)),))


# -- row formulas ------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """A declared predicate applied to measurement variables."""

    symbol: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class StaticNot:
    sub: "StaticFormula"


@dataclass(frozen=True)
class StaticAnd:
    left: "StaticFormula"
    right: "StaticFormula"


@dataclass(frozen=True)
class StaticTrue:
    pass


@dataclass(frozen=True)
class StaticFalse:
    pass


StaticFormula = Atom | StaticNot | StaticAnd | StaticTrue | StaticFalse

TRUE = StaticTrue()
FALSE = StaticFalse()


def static_or(a: StaticFormula, b: StaticFormula) -> StaticFormula:
    return StaticNot(StaticAnd(StaticNot(a), StaticNot(b)))


def static_implies(a: StaticFormula, b: StaticFormula) -> StaticFormula:
    return static_or(StaticNot(a), b)


def static_iff(a: StaticFormula, b: StaticFormula) -> StaticFormula:
    return StaticAnd(static_implies(a, b), static_implies(b, a))


def static_and_all(parts: list[StaticFormula]) -> StaticFormula:
    """Left-nested conjunction of one or more row formulas."""
    out = parts[0]
    for part in parts[1:]:
        out = StaticAnd(out, part)
    return out


# -- dataset formulas --------------------------------------------------------

@dataclass(frozen=True)
class Prob:
    """The fraction of rows satisfying the row formula lies in the set."""

    intervals: IntervalSet
    sub: StaticFormula


@dataclass(frozen=True)
class Not:
    sub: "DatasetFormula"


@dataclass(frozen=True)
class And:
    left: "DatasetFormula"
    right: "DatasetFormula"


@dataclass(frozen=True)
class Trans:
    """The formula holds on the image of the world under a named transform."""

    transform: str
    sub: "DatasetFormula"


@dataclass(frozen=True)
class Cond:
    """The restriction to rows satisfying the guard is defined and satisfies
    the body there."""

    given: StaticFormula
    sub: "DatasetFormula"


@dataclass(frozen=True)
class Indist:
    """Both restrictions are defined and the divergence between their
    marginals on one variable stays within epsilon."""

    left: StaticFormula
    right: StaticFormula
    var: str
    epsilon: Fraction
    div: DivergenceSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon < 0:
            raise OutOfRange(f"negative tolerance {self.epsilon}")


@dataclass(frozen=True)
class Know:
    """The body holds at every world reachable over a named relation."""

    relation: str
    sub: "DatasetFormula"


@dataclass(frozen=True)
class ExpLoss:
    """Expected loss over the observed (actual, predicted) pairs is at most
    the bound."""

    loss: str
    bound: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "bound", Fraction(self.bound))


DatasetFormula = Prob | Not | And | Trans | Cond | Indist | Know | ExpLoss


def dataset_or(a: DatasetFormula, b: DatasetFormula) -> DatasetFormula:
    return Not(And(Not(a), Not(b)))


def dataset_implies(a: DatasetFormula, b: DatasetFormula) -> DatasetFormula:
    return dataset_or(Not(a), b)


def dataset_iff(a: DatasetFormula, b: DatasetFormula) -> DatasetFormula:
    return And(dataset_implies(a, b), dataset_implies(b, a))


def possibly(relation: str, sub: DatasetFormula) -> DatasetFormula:
    return Not(Know(relation, Not(sub)))


def dataset_true() -> DatasetFormula:
    return Prob(FULL, TRUE)


def dataset_false() -> DatasetFormula:
    return Not(dataset_true())


def and_all(parts: list[DatasetFormula]) -> DatasetFormula:
    out = parts[0]
    for part in parts[1:]:
        out = And(out, part)
    return out


# -- canonical printing ------------------------------------------------------
#
# Precedence, loosest first:
#   0  ~>  ~[..]~            (right-associative; operands one level up)
#   1  &                     (left-associative)
#   2  !  K{a}  Dia{a}  <T:name>  P<intervals>
#   3  atoms, true, false, ExpLoss, parenthesised formulas
#
# A node is parenthesised when its own level is below what the position
# requires, so parse(format_formula(f)) rebuilds exactly f.

def _static_level(f: StaticFormula) -> int:
    if isinstance(f, StaticAnd):
        return 1
    if isinstance(f, StaticNot):
        return 2
    return 3


def _format_static(f: StaticFormula, need: int) -> str:
    if isinstance(f, Atom):
        if f.args:
            return f"{f.symbol}({','.join(f.args)})"
        return f.symbol
    if isinstance(f, StaticTrue):
        return "true"
    if isinstance(f, StaticFalse):
        return "false"
    if isinstance(f, StaticNot):
        text = "!" + _format_static(f.sub, 2)
    elif isinstance(f, StaticAnd):
        text = (_format_static(f.left, 1) + " & "
                + _format_static(f.right, 2))
    else:
        raise TypeError(f"not a row formula: {f!r}")
    if _static_level(f) < need:
        return f"({text})"
    return text


def _dataset_level(f: DatasetFormula) -> int:
    if isinstance(f, (Cond, Indist)):
        return 0
    if isinstance(f, And):
        return 1
    if isinstance(f, (Not, Know, Trans, Prob)):
        return 2
    return 3


def _format_dataset(f: DatasetFormula, need: int) -> str:
    if isinstance(f, ExpLoss):
        return f"ExpLoss{{{f.loss}}} <= {render_rational(f.bound)}"
    if isinstance(f, Prob):
        text = f"P{f.intervals.render()} {_format_static(f.sub, 2)}"
    elif isinstance(f, Not):
        text = "!" + _format_dataset(f.sub, 2)
    elif isinstance(f, And):
        text = (_format_dataset(f.left, 1) + " & "
                + _format_dataset(f.right, 2))
    elif isinstance(f, Trans):
        text = f"<T:{f.transform}> {_format_dataset(f.sub, 2)}"
    elif isinstance(f, Know):
        text = f"K{{{f.relation}}} {_format_dataset(f.sub, 2)}"
    elif isinstance(f, Cond):
        text = (_format_static(f.given, 1) + " ~> "
                + _format_dataset(f.sub, 0))
    elif isinstance(f, Indist):
        text = (_format_static(f.left, 1)
                + f" ~[{f.var}; {render_rational(f.epsilon)}; {f.div.render()}]~ "
                + _format_static(f.right, 1))
    else:
        raise TypeError(f"not a dataset formula: {f!r}")
    if _dataset_level(f) < need:
        return f"({text})"
    return text


def format_formula(f) -> str:
    """Canonical text for a formula at either level."""
    if isinstance(f, (Atom, StaticNot, StaticAnd, StaticTrue, StaticFalse)):
        return _format_static(f, 0)
    return _format_dataset(f, 0)
