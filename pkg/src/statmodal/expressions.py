"""A small expression language for predicate bodies and feature maps.

Predicate and group definitions in a model file are boolean expressions over
formal parameters; feature maps are value expressions.  Parameters are bound
to measurement values when an atom is evaluated.  Arithmetic is exact: all
numbers are Fractions, and 1/3 really is one third.

Grammar (loosest first):
    bool:   or  over  and  over  not  over  comparison
    value:  additive  over  multiplicative  over  unary minus  over
            indexing  over  primaries
    comparison:  value (= | != | < | <= | > | >=) value  |  value in {items}
    primary:     number, 'quoted or bare label, parameter, (value, ...) vector,
                 parenthesised expression
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import FormulaSyntaxError, IncompatibleValues, UnknownSymbol
from .values import Label, NumVec, Value, is_valid_label

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<quoted>'[^']*')
  | (?P<op><=|>=|!=|[=<>!&|()\[\]{},+\-*/])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(
                f"unexpected character {text[pos]!r} in expression",
                column=pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


# -- expression nodes --------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: object          # Fraction or Label


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Index:
    base: object
    index: int


@dataclass(frozen=True)
class VecLit:
    items: tuple


@dataclass(frozen=True)
class Arith:
    op: str                # + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    sub: object


@dataclass(frozen=True)
class Cmp:
    op: str                # = != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class InSet:
    item: object
    members: tuple


@dataclass(frozen=True)
class BNot:
    sub: object


@dataclass(frozen=True)
class BAnd:
    left: object
    right: object


@dataclass(frozen=True)
class BOr:
    left: object
    right: object


class _Parser:
    def __init__(self, text: str, params: list[str],
                 components: Mapping[str, int] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = list(params)
        self.components = dict(components or {})

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        kind, got, pos = self.take()
        if got != text:
            raise FormulaSyntaxError(
                f"expected {text!r} in expression, got {got or 'end'!r}",
                column=pos + 1, expected=text)

    def fail(self, message: str) -> FormulaSyntaxError:
        _, _, pos = self.peek()
        return FormulaSyntaxError(message + " in expression", column=pos + 1)

    # boolean level

    def bool_expr(self):
        node = self.bool_term()
        while self.peek()[1] == "|":
            self.take()
            node = BOr(node, self.bool_term())
        return node

    def bool_term(self):
        node = self.bool_factor()
        while self.peek()[1] == "&":
            self.take()
            node = BAnd(node, self.bool_factor())
        return node

    def bool_factor(self):
        kind, text, pos = self.peek()
        if text == "!":
            nxt = self.tokens[self.i + 1]
            if nxt[1] != "=":
                self.take()
                return BNot(self.bool_factor())
        if text == "(":
            # may open a parenthesised boolean or a value expression; try
            # boolean first and fall back on the comparison path
            saved = self.i
            try:
                self.take()
                node = self.bool_expr()
                self.expect(")")
                if self.peek()[1] in ("=", "!=", "<", "<=", ">", ">=", "in"):
                    raise FormulaSyntaxError("comparison of boolean", column=pos)
                return node
            except FormulaSyntaxError:
                self.i = saved
        return self.comparison()

    def comparison(self):
        left = self.value_expr()
        kind, text, pos = self.peek()
        if text in ("=", "!=", "<", "<=", ">", ">="):
            self.take()
            right = self.value_expr()
            return Cmp(text, left, right)
        if kind == "ident" and text == "in":
            self.take()
            self.expect("{")
            members = [self.value_expr()]
            while self.peek()[1] == ",":
                self.take()
                members.append(self.value_expr())
            self.expect("}")
            return InSet(left, tuple(members))
        raise self.fail("expected a comparison operator")

    # value level

    def value_expr(self):
        node = self.value_term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Arith(op, node, self.value_term())
        return node

    def value_term(self):
        node = self.value_unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = Arith(op, node, self.value_unary())
        return node

    def value_unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.value_unary())
        return self.value_postfix()

    def value_postfix(self):
        node = self.value_primary()
        while self.peek()[1] == "[":
            self.take()
            kind, text, pos = self.take()
            if kind == "num" and "." not in text:
                index = int(text)
            elif kind == "ident":
                if text not in self.components:
                    raise UnknownSymbol(f"unknown feature component {text!r}")
                index = self.components[text]
            else:
                raise FormulaSyntaxError(
                    "expected a component index", column=pos + 1)
            self.expect("]")
            node = Index(node, index)
        return node

    def value_primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Lit(Fraction(text))
        if kind == "quoted":
            symbol = text[1:-1]
            if not is_valid_label(symbol):
                raise FormulaSyntaxError(
                    f"invalid label literal {symbol!r}", column=pos + 1)
            return Lit(Label(symbol))
        if kind == "ident":
            if text in self.params:
                return Param(text)
            if text == "in":
                raise FormulaSyntaxError("misplaced 'in'", column=pos + 1)
            if is_valid_label(text):
                return Lit(Label(text))
            raise UnknownSymbol(f"unknown name {text!r} in expression")
        if text == "(":
            items = [self.value_expr()]
            while self.peek()[1] == ",":
                self.take()
                items.append(self.value_expr())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return VecLit(tuple(items))
        raise FormulaSyntaxError(
            f"unexpected token {text or 'end'!r} in expression",
            column=pos + 1)


# -- evaluation --------------------------------------------------------------

def _eval_value(node, env: Mapping[str, Value]):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Param):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownSymbol(f"unbound parameter {node.name!r}") from None
    if isinstance(node, Index):
        base = _eval_value(node.base, env)
        if not isinstance(base, NumVec):
            raise IncompatibleValues("indexing a non-vector value")
        if not (0 <= node.index < base.dim):
            raise IncompatibleValues(
                f"component {node.index} out of range for dim {base.dim}")
        return base.components[node.index]
    if isinstance(node, VecLit):
        parts = []
        for item in node.items:
            v = _eval_value(item, env)
            if not isinstance(v, Fraction):
                raise IncompatibleValues("vector components must be numeric")
            parts.append(v)
        return NumVec(tuple(parts))
    if isinstance(node, Neg):
        v = _eval_value(node.sub, env)
        if not isinstance(v, Fraction):
            raise IncompatibleValues("negating a non-numeric value")
        return -v
    if isinstance(node, Arith):
        a = _eval_value(node.left, env)
        b = _eval_value(node.right, env)
        if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
            raise IncompatibleValues("arithmetic on non-numeric values")
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0:
            raise IncompatibleValues("division by zero in expression")
        return a / b
    raise TypeError(f"not a value expression: {node!r}")


def _eval_bool(node, env: Mapping[str, Value]) -> bool:
    if isinstance(node, BNot):
        return not _eval_bool(node.sub, env)
    if isinstance(node, BAnd):
        return _eval_bool(node.left, env) and _eval_bool(node.right, env)
    if isinstance(node, BOr):
        return _eval_bool(node.left, env) or _eval_bool(node.right, env)
    if isinstance(node, Cmp):
        a = _eval_value(node.left, env)
        b = _eval_value(node.right, env)
        if node.op == "=":
            return a == b
        if node.op == "!=":
            return a != b
        if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
            raise IncompatibleValues("ordering non-numeric values")
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[node.op]
    if isinstance(node, InSet):
        item = _eval_value(node.item, env)
        return any(item == _eval_value(m, env) for m in node.members)
    raise TypeError(f"not a boolean expression: {node!r}")


@dataclass(frozen=True)
class BoolExpr:
    """A compiled boolean expression over named parameters."""

    source: str
    params: tuple[str, ...]
    root: object

    def evaluate(self, bindings: Mapping[str, Value]) -> bool:
        return _eval_bool(self.root, bindings)


@dataclass(frozen=True)
class ValueExpr:
    """A compiled value expression over named parameters."""

    source: str
    params: tuple[str, ...]
    root: object

    def evaluate(self, bindings: Mapping[str, Value]):
        """The raw result: a Fraction, Label or NumVec.  Callers mapping a
        vector variable wrap bare scalars as one-component vectors."""
        return _eval_value(self.root, bindings)


def parse_bool_expr(text: str, params: list[str],
                    components: Mapping[str, int] | None = None) -> BoolExpr:
    parser = _Parser(text, params, components)
    root = parser.bool_expr()
    if parser.peek()[0] != "end":
        raise parser.fail("trailing input")
    return BoolExpr(text, tuple(params), root)


def parse_value_expr(text: str, params: list[str],
                     components: Mapping[str, int] | None = None) -> ValueExpr:
    parser = _Parser(text, params, components)
    root = parser.value_expr()
    if parser.peek()[0] != "end":
        raise parser.fail("trailing input")
    return ValueExpr(text, tuple(params), root)
