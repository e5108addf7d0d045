"""Concrete formula syntax: tokenizer, parser, and interval reader.

Operator tokens, loosest binding first:

    ->   <->   ~>   ~[var; eps; div]~        right-associative
    |                                        left-associative
    &                                        left-associative
    !   K{rel}   Dia{rel}   <T:name>   P<intervals>      prefix
    atoms, true, false, ExpLoss{loss} <= bound, ( ... )

Probability bounds follow P directly: P[a,b], P(a,b], P=c, and unions like
P[0,0.1] u [0.9,1].  Numeric literals are integers, decimals, or num/den;
all are read as exact rationals.

Parsing happens in two steps.  The grammar above is first read into a
surface tree without caring which level each connective lives on; a lowering
pass then types every position as a row formula or a dataset formula against
the model's vocabulary, expands or/implies/iff/Dia into core connectives,
and reports unknown symbols and arity errors with positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import syntax
from .divergence import DivergenceSpec
from .errors import (ArityMismatch, FormulaSyntaxError, MalformedInterval,
                     UnknownLoss, UnknownPredicate, UnknownRelation,
                     UnknownSymbol, UnknownTransform)
from .model import VAR_X, VAR_Y, VAR_YHAT, DistributionalModel
from .syntax import (Atom, Cond, DatasetFormula, ExpLoss, Indist, Interval,
                     IntervalSet, Know, Prob, StaticFormula, Trans,
                     dataset_false, dataset_true, possibly)

VARIABLES = (VAR_X, VAR_Y, VAR_YHAT)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|~>|~\[|\]~|<=|<T:|∪|[()\[\]{}<>,;=!&|/])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str          # num | ident | op | end
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(
                f"unexpected character {text[pos]!r}",
                line=line, column=pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


# -- surface tree ------------------------------------------------------------

@dataclass(frozen=True)
class Surf:
    """An untyped parse node; `kind` decides which fields are meaningful."""

    kind: str
    line: int
    column: int
    a: object = None
    b: object = None
    symbol: str = ""
    args: tuple[str, ...] = ()
    intervals: IntervalSet | None = None
    var: str = ""
    eps: Fraction | None = None
    div: str = ""
    bound: Fraction | None = None


class _FormulaParser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None,
              expected: str | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(message, line=tok.line, column=tok.column,
                                  expected=expected)

    def expect(self, text: str) -> Token:
        tok = self.take()
        if tok.text != text:
            raise self.error(f"expected {text!r}, got {tok.text or 'end of input'!r}",
                             tok, expected=text)
        return tok

    def expect_ident(self, what: str) -> Token:
        tok = self.take()
        if tok.kind != "ident":
            raise self.error(f"expected {what}, got {tok.text or 'end of input'!r}",
                             tok, expected=what)
        return tok

    # literals ----------------------------------------------------------

    def rational(self) -> Fraction:
        tok = self.take()
        if tok.kind != "num":
            raise self.error("expected a number", tok, expected="number")
        value = Fraction(tok.text)
        if self.peek().text == "/":
            self.take()
            den_tok = self.take()
            if den_tok.kind != "num" or "." in den_tok.text or "." in tok.text:
                raise self.error("malformed rational literal", den_tok)
            den = int(den_tok.text)
            if den == 0:
                raise self.error("zero denominator", den_tok)
            value = Fraction(int(tok.text), den)
        return value

    # intervals ---------------------------------------------------------

    def interval_atom(self) -> Interval:
        tok = self.peek()
        if tok.text == "=":
            self.take()
            c = self.rational()
            return Interval(c, c)
        if tok.text in ("[", "("):
            self.take()
            lo = self.rational()
            self.expect(",")
            hi = self.rational()
            close = self.take()
            if close.text not in ("]", ")"):
                raise self.error("expected ']' or ')'", close)
            return Interval(lo, hi, lo_open=(tok.text == "("),
                            hi_open=(close.text == ")"))
        raise self.error("expected an interval", tok, expected="[, ( or =")

    def interval_set(self) -> IntervalSet:
        parts = [self.interval_atom()]
        while True:
            tok = self.peek()
            if tok.text in ("u", "∪") and self.peek(1).text in ("[", "(", "="):
                self.take()
                parts.append(self.interval_atom())
            else:
                break
        return IntervalSet(tuple(parts))

    # formula levels ----------------------------------------------------

    def level0(self) -> Surf:
        left = self.level1()
        tok = self.peek()
        if tok.text in ("->", "<->", "~>"):
            self.take()
            right = self.level0()
            kind = {"->": "implies", "<->": "iff", "~>": "cond"}[tok.text]
            return Surf(kind, tok.line, tok.column, a=left, b=right)
        if tok.text == "~[":
            self.take()
            var = self.expect_ident("a variable name").text
            self.expect(";")
            eps = self.rational()
            self.expect(";")
            div = self.expect_ident("a divergence name").text
            self.expect("]~")
            right = self.level0()
            return Surf("indist", tok.line, tok.column, a=left, b=right,
                        var=var, eps=eps, div=div)
        return left

    def level1(self) -> Surf:
        node = self.level2()
        while self.peek().text == "|":
            tok = self.take()
            node = Surf("or", tok.line, tok.column, a=node, b=self.level2())
        return node

    def level2(self) -> Surf:
        node = self.level3()
        while self.peek().text == "&":
            tok = self.take()
            node = Surf("and", tok.line, tok.column, a=node, b=self.level3())
        return node

    def level3(self) -> Surf:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return Surf("not", tok.line, tok.column, a=self.level3())
        if tok.kind == "ident" and tok.text in ("K", "Dia"):
            self.take()
            self.expect("{")
            rel = self.expect_ident("a relation name").text
            self.expect("}")
            sub = self.level3()
            return Surf("know" if tok.text == "K" else "dia",
                        tok.line, tok.column, a=sub, symbol=rel)
        if tok.text == "<T:":
            self.take()
            name = self.expect_ident("a transform name").text
            self.expect(">")
            sub = self.level3()
            return Surf("trans", tok.line, tok.column, a=sub, symbol=name)
        if tok.kind == "ident" and tok.text == "P":
            self.take()
            intervals = self.interval_set()
            sub = self.level3()
            return Surf("prob", tok.line, tok.column, a=sub,
                        intervals=intervals)
        return self.level4()

    def level4(self) -> Surf:
        tok = self.take()
        if tok.text == "(":
            node = self.level0()
            self.expect(")")
            return node
        if tok.kind == "ident":
            if tok.text == "true":
                return Surf("true", tok.line, tok.column)
            if tok.text == "false":
                return Surf("false", tok.line, tok.column)
            if tok.text == "ExpLoss":
                self.expect("{")
                loss = self.expect_ident("a loss name").text
                self.expect("}")
                self.expect("<=")
                bound = self.rational()
                return Surf("exploss", tok.line, tok.column, symbol=loss,
                            bound=bound)
            args: tuple[str, ...] = ()
            if self.peek().text == "(":
                self.take()
                names = []
                if self.peek().text != ")":
                    names.append(self.expect_ident("a variable name").text)
                    while self.peek().text == ",":
                        self.take()
                        names.append(self.expect_ident("a variable name").text)
                self.expect(")")
                args = tuple(names)
            return Surf("atom", tok.line, tok.column, symbol=tok.text,
                        args=args)
        raise self.error(
            f"expected a formula, got {tok.text or 'end of input'!r}", tok)


# -- lowering ----------------------------------------------------------------

def _err_at(cls, message: str, node: Surf):
    if issubclass(cls, FormulaSyntaxError):
        # the class renders its own position suffix
        return cls(message, line=node.line, column=node.column)
    return cls(f"{message} (line {node.line}, column {node.column})")


def _lower_atom(node: Surf, model: DistributionalModel) -> Atom:
    pdef = model.predicates.get(node.symbol)
    if pdef is None:
        raise _err_at(UnknownPredicate,
                      f"unknown predicate {node.symbol!r}", node)
    if len(node.args) != pdef.arity:
        raise _err_at(ArityMismatch,
                      f"predicate {node.symbol!r} takes {pdef.arity} "
                      f"argument(s), got {len(node.args)}", node)
    for arg in node.args:
        if arg not in VARIABLES:
            raise _err_at(UnknownSymbol,
                          f"unknown measurement variable {arg!r}", node)
    if pdef.kind in ("classifier", "oracle", "classifier_label",
                     "oracle_label") and node.args[0] != VAR_X:
        raise _err_at(ArityMismatch,
                      f"predicate {node.symbol!r} applies to the input "
                      f"variable {VAR_X}, got {node.args[0]!r}", node)
    return Atom(node.symbol, node.args)


def lower_static(node: Surf, model: DistributionalModel) -> StaticFormula:
    kind = node.kind
    if kind == "atom":
        return _lower_atom(node, model)
    if kind == "true":
        return syntax.TRUE
    if kind == "false":
        return syntax.FALSE
    if kind == "not":
        return syntax.StaticNot(lower_static(node.a, model))
    if kind == "and":
        return syntax.StaticAnd(lower_static(node.a, model),
                                lower_static(node.b, model))
    if kind == "or":
        return syntax.static_or(lower_static(node.a, model),
                                lower_static(node.b, model))
    if kind == "implies":
        return syntax.static_implies(lower_static(node.a, model),
                                     lower_static(node.b, model))
    if kind == "iff":
        return syntax.static_iff(lower_static(node.a, model),
                                 lower_static(node.b, model))
    raise _err_at(FormulaSyntaxError,
                  "dataset-level operator inside a row formula", node)


def _lower_divergence(node: Surf, model: DistributionalModel) -> DivergenceSpec:
    if node.div == "tv":
        return DivergenceSpec("tv")
    if node.div == "winf":
        if model.metric is None:
            raise _err_at(UnknownSymbol,
                          "divergence winf needs a ground metric declared "
                          "in the model", node)
        return DivergenceSpec("winf", model.metric)
    raise _err_at(UnknownSymbol, f"unknown divergence {node.div!r}", node)


def lower_dataset(node: Surf, model: DistributionalModel) -> DatasetFormula:
    kind = node.kind
    if kind == "prob":
        return Prob(node.intervals, lower_static(node.a, model))
    if kind == "not":
        return syntax.Not(lower_dataset(node.a, model))
    if kind == "and":
        return syntax.And(lower_dataset(node.a, model),
                          lower_dataset(node.b, model))
    if kind == "or":
        return syntax.dataset_or(lower_dataset(node.a, model),
                                 lower_dataset(node.b, model))
    if kind == "implies":
        return syntax.dataset_implies(lower_dataset(node.a, model),
                                      lower_dataset(node.b, model))
    if kind == "iff":
        return syntax.dataset_iff(lower_dataset(node.a, model),
                                  lower_dataset(node.b, model))
    if kind == "cond":
        return Cond(lower_static(node.a, model),
                    lower_dataset(node.b, model))
    if kind == "indist":
        if node.var not in VARIABLES:
            raise _err_at(UnknownSymbol,
                          f"unknown measurement variable {node.var!r}", node)
        return Indist(lower_static(node.a, model),
                      lower_static(node.b, model),
                      node.var, node.eps, _lower_divergence(node, model))
    if kind == "know":
        if node.symbol not in model.relations:
            raise _err_at(UnknownRelation,
                          f"unknown relation {node.symbol!r}", node)
        return Know(node.symbol, lower_dataset(node.a, model))
    if kind == "dia":
        if node.symbol not in model.relations:
            raise _err_at(UnknownRelation,
                          f"unknown relation {node.symbol!r}", node)
        return possibly(node.symbol, lower_dataset(node.a, model))
    if kind == "trans":
        if node.symbol not in model.transforms:
            raise _err_at(UnknownTransform,
                          f"unknown transform {node.symbol!r}", node)
        return Trans(node.symbol, lower_dataset(node.a, model))
    if kind == "exploss":
        if node.symbol not in model.losses:
            raise _err_at(UnknownLoss, f"unknown loss {node.symbol!r}", node)
        return ExpLoss(node.symbol, node.bound)
    if kind == "true":
        return dataset_true()
    if kind == "false":
        return dataset_false()
    if kind == "atom":
        raise _err_at(FormulaSyntaxError,
                      f"row formula {node.symbol!r} cannot stand alone at "
                      "dataset level; wrap it in a probability bound such "
                      "as P[1,1]", node)
    raise _err_at(FormulaSyntaxError, f"unexpected node {kind}", node)


def _parse_surface(text: str) -> Surf:
    parser = _FormulaParser(text)
    node = parser.level0()
    tail = parser.peek()
    if tail.kind != "end":
        raise parser.error(f"trailing input {tail.text!r}", tail)
    return node


def parse_formula(text: str, model: DistributionalModel) -> DatasetFormula:
    """Read a dataset formula against a model's vocabulary."""
    return lower_dataset(_parse_surface(text), model)


def parse_static(text: str, model: DistributionalModel) -> StaticFormula:
    """Read a row formula (used by filters and conditioning guards)."""
    return lower_static(_parse_surface(text), model)


def parse_interval(text: str) -> IntervalSet:
    """Read an interval set such as "[0,0.1] u [0.9,1]" or "=0.2"."""
    parser = _FormulaParser(text)
    try:
        out = parser.interval_set()
    except FormulaSyntaxError as exc:
        raise MalformedInterval(str(exc)) from None
    tail = parser.peek()
    if tail.kind != "end":
        raise MalformedInterval(f"trailing input {tail.text!r}")
    return out
