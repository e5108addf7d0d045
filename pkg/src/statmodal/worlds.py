"""Worlds as finite multisets of states, and the distributions they induce.

A world is a dataset: a finite multiset of rows.  Row order never matters;
duplicate rows are merged into multiplicities at construction.  The sampling
distribution of a world assigns each distinct row its relative frequency as
an exact rational, so every probability produced downstream is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import EmptyWorld, SchemaMismatch, UnknownVariable
from .values import State, Value


class _UndefinedType:
    """Sentinel for the undefined result of restricting away every row."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNDEFINED"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _UndefinedType()


@dataclass(frozen=True)
class Distribution:
    """A finitely supported probability distribution with rational masses.

    Keys are values for a single-variable marginal and tuples of values for
    a joint marginal.  Masses are positive and sum to exactly one.
    """

    masses: tuple[tuple[object, Fraction], ...]

    @classmethod
    def of(cls, mapping: dict) -> Distribution:
        total = Fraction(0)
        for key, mass in mapping.items():
            mass = Fraction(mass)
            if mass <= 0:
                raise ValueError(f"non-positive mass {mass} for {key!r}")
            total += mass
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        items = sorted(mapping.items(), key=lambda kv: _dist_key(kv[0]))
        return cls(tuple((k, Fraction(m)) for k, m in items))

    def as_dict(self) -> dict:
        return dict(self.masses)

    def support(self) -> tuple:
        return tuple(k for k, _ in self.masses)

    def mass(self, key) -> Fraction:
        for k, m in self.masses:
            if k == key:
                return m
        return Fraction(0)

    def __len__(self) -> int:
        return len(self.masses)


def _dist_key(key):
    if isinstance(key, tuple):
        return tuple(v.sort_key() for v in key)
    return key.sort_key()


@dataclass(frozen=True)
class World:
    """A named finite multiset of states.

    entries holds (state, multiplicity) pairs in canonical state order, so
    structurally equal datasets compare equal and iterate deterministically.
    """

    name: str
    entries: tuple[tuple[State, int], ...] = field(compare=True)

    def __post_init__(self) -> None:
        if not self.entries:
            raise EmptyWorld(f"world {self.name!r} has no rows")
        for s, count in self.entries:
            if count <= 0:
                raise ValueError(f"non-positive multiplicity {count}")
        shared = self.entries[0][0].variables
        for s, _ in self.entries[1:]:
            if s.variables != shared:
                raise SchemaMismatch(
                    f"world {self.name!r}: rows disagree on variables "
                    f"({shared} vs {s.variables})")

    @property
    def size(self) -> int:
        """Total number of rows, multiplicities included."""
        return sum(count for _, count in self.entries)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.entries[0][0].variables

    def has_variable(self, var: str) -> bool:
        return var in self.variables

    def multiplicity(self, s: State) -> int:
        for other, count in self.entries:
            if other == s:
                return count
        return 0

    def prob(self, s: State) -> Fraction:
        """Sampling probability of one row: multiplicity over size."""
        return Fraction(self.multiplicity(s), self.size)

    def states(self) -> tuple[State, ...]:
        return tuple(s for s, _ in self.entries)

    def rows(self) -> Iterable[State]:
        """Every row in canonical order, duplicates expanded."""
        for s, count in self.entries:
            for _ in range(count):
                yield s

    def same_rows(self, other: World) -> bool:
        """Multiset equality of rows, ignoring the world names."""
        return self.entries == other.entries

    def renamed(self, name: str) -> World:
        return World(name, self.entries)


def world_from_rows(name: str, rows: Sequence[State]) -> World:
    """Build a world from rows in any order, merging duplicates by count."""
    counts: dict[State, int] = {}
    for s in rows:
        counts[s] = counts.get(s, 0) + 1
    return world_from_counts(name, counts)


def world_from_counts(name: str, counts: dict[State, int]) -> World:
    entries = tuple(sorted(counts.items(), key=lambda kv: kv[0].sort_key()))
    return World(name, entries)


def marginal(w: World, variables: Sequence[str]) -> Distribution:
    """Observed distribution of one or more variables over the world's rows.

    A single variable yields a distribution over values; several variables
    yield the joint over value tuples in the given variable order.
    """
    if not variables:
        raise UnknownVariable("marginal needs at least one variable")
    for var in variables:
        if not w.has_variable(var):
            raise UnknownVariable(
                f"world {w.name!r} has no variable {var!r}")
    single = len(variables) == 1
    acc: dict[object, Fraction] = {}
    n = w.size
    for s, count in w.entries:
        if single:
            key: object = s.value_of(variables[0])
        else:
            key = tuple(s.value_of(v) for v in variables)
        acc[key] = acc.get(key, Fraction(0)) + Fraction(count, n)
    return Distribution.of(acc)


def restrict_world(w: World, keep: Callable[[State], bool]):
    """Restriction of a world to the rows a predicate keeps.

    Multiplicities of surviving rows are kept as they are; probabilities
    renormalise automatically because the size shrinks.  Returns UNDEFINED
    when no row survives; downstream conditional operators treat that case
    explicitly rather than catching exceptions.
    """
    kept = tuple((s, count) for s, count in w.entries if keep(s))
    if not kept:
        return UNDEFINED
    return World(w.name, kept)
