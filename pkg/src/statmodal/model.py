"""The model a formula is checked against: worlds, relations, vocabulary.

A model bundles the declared universe of worlds (each a dataset over the
variables x, y and optionally yhat), accessibility relations between world
names, the predicate vocabulary, group definitions, the label alphabet, the
ground metric on inputs, and registries of transforms and loss functions.

Knowledge modalities are sound only relative to this declared, finite
universe: a world reached by restriction or transformation is treated as a
member of the universe exactly when it is row-for-row equal to a declared
world, and otherwise has no outgoing edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, TYPE_CHECKING

from .divergence import MetricSpec
from .errors import (SchemaMismatch, UnknownLabel, UnknownRelation,
                     UnknownWorld)
from .expressions import BoolExpr, parse_bool_expr
from .values import Label, NumVec, State, Value, is_valid_label
from .worlds import World

if TYPE_CHECKING:
    from .transforms import TransformSpec

VAR_X = "x"
VAR_Y = "y"
VAR_YHAT = "yhat"

# names the formula tokenizer claims for itself
RESERVED_WORDS = {"P", "K", "Dia", "ExpLoss", "true", "false", "u", "in"}


@dataclass(frozen=True)
class Schema:
    """Layout of the input variable x: a vector of named rational features,
    or a single categorical value."""

    kind: str                            # "vector" | "categorical"
    components: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "vector":
            if not self.components:
                raise ValueError("vector schema needs component names")
            if len(set(self.components)) != len(self.components):
                raise ValueError("duplicate feature component names")
        elif self.kind == "categorical":
            if self.components:
                raise ValueError("categorical schema takes no components")
        else:
            raise ValueError(f"unknown schema kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return len(self.components)

    def component_map(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.components)}

    def accepts(self, v: Value) -> bool:
        if self.kind == "vector":
            return isinstance(v, NumVec) and v.dim == self.dim
        return isinstance(v, Label)


@dataclass(frozen=True)
class PredicateDef:
    """One entry of the predicate vocabulary.

    kind is one of:
      expr              user-defined body over formal parameters
      classifier        the recorded prediction equals the second argument
      oracle            the recorded actual label equals the second argument
      classifier_label  the recorded prediction is a fixed label
      oracle_label      the recorded actual label is a fixed label
      group             the argument's value belongs to a declared group
    """

    symbol: str
    kind: str
    arity: int
    label: str | None = None
    group: str | None = None
    body: BoolExpr | None = None


@dataclass(frozen=True)
class GroupDef:
    """A named subset of input values, given by a membership expression over
    the single parameter v."""

    name: str
    body: BoolExpr


LossFn = Callable[[Value, Value], Fraction]


@dataclass
class DistributionalModel:
    worlds: dict[str, World]
    relations: dict[str, frozenset[tuple[str, str]]]
    predicates: dict[str, PredicateDef]
    groups: dict[str, GroupDef]
    labels: frozenset[str]
    schema: Schema
    metric: MetricSpec | None = None
    transforms: dict[str, "TransformSpec"] = field(default_factory=dict)
    losses: dict[str, LossFn] = field(default_factory=dict)
    classifier_cmd: str | None = None
    oracle_cmd: str | None = None

    def world(self, name: str) -> World:
        try:
            return self.worlds[name]
        except KeyError:
            raise UnknownWorld(f"model declares no world named {name!r}") from None

    def relation(self, name: str) -> frozenset[tuple[str, str]]:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownRelation(
                f"model declares no relation named {name!r}") from None

    def accessible_from(self, relation: str, w: World) -> list[str]:
        """Names of worlds reachable from w, resolving w into the declared
        universe by row-for-row equality."""
        edges = self.relation(relation)
        sources = [name for name, other in sorted(self.worlds.items())
                   if other.entries == w.entries]
        out = sorted({dst for src, dst in edges if src in sources})
        return out

    def component_map(self) -> dict[str, int]:
        return self.schema.component_map()


def _check_label_value(model_labels: frozenset[str], var: str, v: Value,
                       where: str) -> None:
    if not isinstance(v, Label):
        raise SchemaMismatch(f"{where}: variable {var} must hold a label")
    if v.symbol not in model_labels:
        raise UnknownLabel(
            f"{where}: label {v.symbol!r} outside the declared alphabet")


def validate_world(w: World, schema: Schema, labels: frozenset[str]) -> None:
    """Check one world against the model's variable layout and alphabet."""
    variables = set(w.variables)
    if VAR_X not in variables or VAR_Y not in variables:
        raise SchemaMismatch(
            f"world {w.name!r} must carry variables {VAR_X} and {VAR_Y}")
    extra = variables - {VAR_X, VAR_Y, VAR_YHAT}
    if extra:
        raise SchemaMismatch(
            f"world {w.name!r} carries unknown variables {sorted(extra)}")
    for s, _ in w.entries:
        xv = s.value_of(VAR_X)
        if not schema.accepts(xv):
            raise SchemaMismatch(
                f"world {w.name!r}: input value {xv!r} does not fit the "
                f"declared {schema.kind} schema")
        _check_label_value(labels, VAR_Y, s.value_of(VAR_Y), f"world {w.name!r}")
        if s.has(VAR_YHAT):
            _check_label_value(labels, VAR_YHAT, s.value_of(VAR_YHAT),
                               f"world {w.name!r}")


def _builtin_predicates(labels: frozenset[str],
                        groups: dict[str, GroupDef]) -> dict[str, PredicateDef]:
    out: dict[str, PredicateDef] = {
        "psi": PredicateDef("psi", "classifier", 2),
        "h": PredicateDef("h", "oracle", 2),
    }
    for symbol in sorted(labels):
        out[f"psi_{symbol}"] = PredicateDef(
            f"psi_{symbol}", "classifier_label", 1, label=symbol)
        out[f"h_{symbol}"] = PredicateDef(
            f"h_{symbol}", "oracle_label", 1, label=symbol)
    for name in sorted(groups):
        out[f"eta_{name}"] = PredicateDef(
            f"eta_{name}", "group", 1, group=name)
    return out


def build_model(*,
                labels,
                schema: Schema,
                worlds: dict[str, World] | None = None,
                relations: dict[str, set[tuple[str, str]]] | None = None,
                predicates: dict[str, tuple[list[str], str]] | None = None,
                groups: dict[str, str] | None = None,
                metric: MetricSpec | None = None,
                transforms: dict | None = None,
                losses: dict[str, LossFn] | None = None,
                classifier_cmd: str | None = None,
                oracle_cmd: str | None = None,
                validate_labels: bool = True) -> DistributionalModel:
    """Assemble and validate a model.

    predicates maps a symbol to (parameter names, body expression text);
    groups maps a group name to a membership expression over v.  The
    classifier, oracle, per-label and per-group predicates are declared
    automatically.
    """
    label_set = frozenset(labels)
    if not label_set:
        raise ValueError("the label alphabet must not be empty")
    for symbol in label_set:
        if not is_valid_label(symbol):
            raise ValueError(f"invalid label {symbol!r}")

    components = schema.component_map()
    group_defs: dict[str, GroupDef] = {}
    for name, expr_text in sorted((groups or {}).items()):
        if not name.isidentifier():
            raise ValueError(f"invalid group name {name!r}")
        group_defs[name] = GroupDef(
            name, parse_bool_expr(expr_text, ["v"], components))

    predicate_defs = _builtin_predicates(label_set, group_defs)
    for symbol, (params, expr_text) in sorted((predicates or {}).items()):
        if not symbol.isidentifier() or symbol in RESERVED_WORDS:
            raise ValueError(f"invalid predicate symbol {symbol!r}")
        if symbol in predicate_defs:
            raise ValueError(
                f"predicate {symbol!r} collides with a built-in name")
        body = parse_bool_expr(expr_text, list(params), components)
        predicate_defs[symbol] = PredicateDef(
            symbol, "expr", len(params), body=body)

    world_map = dict(worlds or {})
    for name, w in world_map.items():
        if name == "all":
            raise ValueError("world name 'all' is reserved")
        if w.name != name:
            raise ValueError(
                f"world registered as {name!r} but named {w.name!r}")
        if validate_labels:
            validate_world(w, schema, label_set)

    relation_map: dict[str, frozenset[tuple[str, str]]] = {}
    for name, pairs in sorted((relations or {}).items()):
        for src, dst in pairs:
            if src not in world_map or dst not in world_map:
                raise UnknownWorld(
                    f"relation {name!r} mentions undeclared world "
                    f"{src if src not in world_map else dst!r}")
        relation_map[name] = frozenset((src, dst) for src, dst in pairs)

    if metric is not None and schema.kind == "categorical":
        if metric.kind != "discrete":
            raise SchemaMismatch(
                "a categorical input only supports the discrete metric")

    from .losses import builtin_losses
    loss_map = dict(builtin_losses())
    loss_map.update(losses or {})

    return DistributionalModel(
        worlds=world_map,
        relations=relation_map,
        predicates=predicate_defs,
        groups=group_defs,
        labels=label_set,
        schema=schema,
        metric=metric,
        transforms=dict(transforms or {}),
        losses=loss_map,
        classifier_cmd=classifier_cmd,
        oracle_cmd=oracle_cmd,
    )
