"""Evaluation of formulas against worlds.

Row formulas are checked per row; dataset formulas are checked against a
world's exact sampling distribution.  All probabilities, expectations and
divergences are computed as rationals, so a verdict never depends on
floating point.

Conditioning and indistinguishability treat an empty restriction explicitly:
when no row satisfies a guard, the conditional is false (never an error),
and the trace says so.  Knowledge is checked by walking the declared
accessibility relation; a world reached by restriction or transformation
belongs to the universe only if it is row-for-row equal to a declared world,
so knowledge verdicts are sound relative to the declared universe only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .divergence import divergence, within
from .errors import (MissingPredictions, UnknownLoss, UnknownPredicate,
                     UnknownTransform)
from .model import VAR_X, VAR_Y, VAR_YHAT, DistributionalModel
from .syntax import (And, Atom, Cond, DatasetFormula, ExpLoss, Indist, Know,
                     Not, Prob, StaticAnd, StaticFalse, StaticFormula,
                     StaticNot, StaticTrue, Trans, format_formula)
from .values import Label, State
from .worlds import UNDEFINED, World, marginal, restrict_world


# -- row-level truth ---------------------------------------------------------

def eval_static(model: DistributionalModel, s: State,
                f: StaticFormula) -> bool:
    """Truth of a row formula at one row."""
    if isinstance(f, StaticTrue):
        return True
    if isinstance(f, StaticFalse):
        return False
    if isinstance(f, StaticNot):
        return not eval_static(model, s, f.sub)
    if isinstance(f, StaticAnd):
        return (eval_static(model, s, f.left)
                and eval_static(model, s, f.right))
    if isinstance(f, Atom):
        return _eval_atom(model, s, f)
    raise TypeError(f"not a row formula: {f!r}")


def _recorded(model: DistributionalModel, s: State, var: str):
    if var == VAR_YHAT and not s.has(VAR_YHAT):
        raise MissingPredictions(
            "this formula depends on predictions, but the world carries "
            "none; provide a yhat column or configure a classifier adapter")
    return s.value_of(var)


def _eval_atom(model: DistributionalModel, s: State, f: Atom) -> bool:
    pdef = model.predicates.get(f.symbol)
    if pdef is None:
        raise UnknownPredicate(f"unknown predicate {f.symbol!r}")
    if len(f.args) != pdef.arity:
        from .errors import ArityMismatch
        raise ArityMismatch(
            f"predicate {f.symbol!r} takes {pdef.arity} argument(s)")
    if pdef.kind == "classifier":
        return _recorded(model, s, VAR_YHAT) == _recorded(model, s, f.args[1])
    if pdef.kind == "oracle":
        return s.value_of(VAR_Y) == _recorded(model, s, f.args[1])
    if pdef.kind == "classifier_label":
        return _recorded(model, s, VAR_YHAT) == Label(pdef.label)
    if pdef.kind == "oracle_label":
        return s.value_of(VAR_Y) == Label(pdef.label)
    if pdef.kind == "group":
        body = model.groups[pdef.group].body
        return body.evaluate({"v": _recorded(model, s, f.args[0])})
    assert pdef.kind == "expr" and pdef.body is not None
    bindings = {param: _recorded(model, s, arg)
                for param, arg in zip(pdef.body.params, f.args)}
    return pdef.body.evaluate(bindings)


# -- world-level quantities --------------------------------------------------

def prob_of(model: DistributionalModel, w: World,
            f: StaticFormula) -> Fraction:
    """Exact fraction of rows satisfying a row formula."""
    hits = sum(count for s, count in w.entries if eval_static(model, s, f))
    return Fraction(hits, w.size)


def restrict(model: DistributionalModel, w: World, f: StaticFormula):
    """The world narrowed to rows satisfying f, or UNDEFINED when none do."""
    return restrict_world(w, lambda s: eval_static(model, s, f))


def expected_loss(model: DistributionalModel, w: World,
                  loss_name: str) -> Fraction:
    loss = model.losses.get(loss_name)
    if loss is None:
        raise UnknownLoss(f"unknown loss {loss_name!r}")
    if not w.has_variable(VAR_YHAT):
        raise MissingPredictions(
            "expected loss needs predictions; provide a yhat column or "
            "configure a classifier adapter")
    joint = marginal(w, [VAR_Y, VAR_YHAT])
    acc = Fraction(0)
    for (actual, predicted), mass in joint.masses:
        acc += mass * loss(actual, predicted)
    return acc


# -- verdicts ----------------------------------------------------------------

@dataclass
class TraceNode:
    formula: str
    world: str
    holds: bool
    quantity: object = None      # Fraction | Distance | None
    note: str | None = None
    children: list["TraceNode"] = field(default_factory=list)


@dataclass
class Verdict:
    holds: bool
    formula: str
    world: str
    trace: TraceNode | None = None
    failing_world: str | None = None
    universe_relative: bool = False


def mentions_knowledge(f: DatasetFormula) -> bool:
    if isinstance(f, Know):
        return True
    if isinstance(f, (Not, Trans, Cond)):
        return mentions_knowledge(f.sub)
    if isinstance(f, And):
        return mentions_knowledge(f.left) or mentions_knowledge(f.right)
    return False


class _Evaluator:
    def __init__(self, model: DistributionalModel, want_trace: bool):
        self.model = model
        self.want_trace = want_trace

    def node(self, f, w: World, holds: bool, quantity=None, note=None,
             children=None) -> TraceNode | None:
        if not self.want_trace:
            return None
        return TraceNode(format_formula(f), w.name, holds, quantity, note,
                         children or [])

    def eval(self, w: World, f: DatasetFormula) -> tuple[bool, TraceNode | None]:
        model = self.model
        if isinstance(f, Prob):
            p = prob_of(model, w, f.sub)
            holds = f.intervals.contains(p)
            return holds, self.node(f, w, holds, quantity=p)
        if isinstance(f, Not):
            sub_holds, sub_trace = self.eval(w, f.sub)
            holds = not sub_holds
            return holds, self.node(f, w, holds,
                                    children=_kids(sub_trace))
        if isinstance(f, And):
            l_holds, l_trace = self.eval(w, f.left)
            r_holds, r_trace = self.eval(w, f.right)
            holds = l_holds and r_holds
            return holds, self.node(f, w, holds,
                                    children=_kids(l_trace, r_trace))
        if isinstance(f, Cond):
            restricted = restrict(model, w, f.given)
            if restricted is UNDEFINED:
                return False, self.node(
                    f, w, False,
                    note="empty conditioning cell: no row satisfies "
                         + format_formula(f.given))
            sub_holds, sub_trace = self.eval(restricted, f.sub)
            note = (f"conditioned on {format_formula(f.given)}: "
                    f"{restricted.size} of {w.size} row(s)")
            return sub_holds, self.node(f, w, sub_holds, note=note,
                                        children=_kids(sub_trace))
        if isinstance(f, Indist):
            return self.eval_indist(w, f)
        if isinstance(f, Trans):
            return self.eval_trans(w, f)
        if isinstance(f, Know):
            return self.eval_know(w, f)
        if isinstance(f, ExpLoss):
            e = expected_loss(model, w, f.loss)
            holds = e <= f.bound
            return holds, self.node(f, w, holds, quantity=e)
        raise TypeError(f"not a dataset formula: {f!r}")

    def eval_indist(self, w: World, f: Indist):
        model = self.model
        sides = []
        for side in (f.left, f.right):
            restricted = restrict(model, w, side)
            if restricted is UNDEFINED:
                return False, self.node(
                    f, w, False,
                    note="empty conditioning cell: no row satisfies "
                         + format_formula(side))
            sides.append(restricted)
        if f.var == VAR_YHAT and not w.has_variable(VAR_YHAT):
            raise MissingPredictions(
                "indistinguishability over yhat needs predictions")
        mu0 = marginal(sides[0], [f.var])
        mu1 = marginal(sides[1], [f.var])
        d = divergence(f.div, mu0, mu1)
        holds = within(d, f.epsilon)
        return holds, self.node(f, w, holds, quantity=d)

    def eval_trans(self, w: World, f: Trans):
        model = self.model
        spec = model.transforms.get(f.transform)
        if spec is None:
            raise UnknownTransform(f"unknown transform {f.transform!r}")
        from .transforms import apply_transform
        image = apply_transform(spec, w, model)
        if image is UNDEFINED:
            return False, self.node(
                f, w, False,
                note=f"transform {f.transform!r} leaves no rows")
        sub_holds, sub_trace = self.eval(image, f.sub)
        return sub_holds, self.node(f, w, sub_holds,
                                    note=f"after transform {f.transform!r}",
                                    children=_kids(sub_trace))

    def eval_know(self, w: World, f: Know):
        model = self.model
        names = model.accessible_from(f.relation, w)
        holds = True
        children = []
        for name in names:
            sub_holds, sub_trace = self.eval(model.worlds[name], f.sub)
            if sub_trace is not None:
                children.append(sub_trace)
            if not sub_holds:
                holds = False
        note = (f"relative to the declared universe; {len(names)} "
                f"accessible world(s) over {f.relation!r}")
        if not names:
            note += "; holds vacuously"
        return holds, self.node(f, w, holds, note=note, children=children)


def _kids(*traces) -> list[TraceNode]:
    return [t for t in traces if t is not None]


def evaluate(model: DistributionalModel, world: World | str,
             f: DatasetFormula, trace: bool = False) -> Verdict:
    """Check a dataset formula at one world."""
    w = model.world(world) if isinstance(world, str) else world
    holds, trace_root = _Evaluator(model, trace).eval(w, f)
    return Verdict(holds=holds, formula=format_formula(f), world=w.name,
                   trace=trace_root,
                   universe_relative=mentions_knowledge(f))


def evaluate_all(model: DistributionalModel, f: DatasetFormula,
                 trace: bool = False) -> Verdict:
    """Check a dataset formula at every declared world (name order)."""
    ev = _Evaluator(model, trace)
    holds = True
    failing = None
    children = []
    for name in sorted(model.worlds):
        sub_holds, sub_trace = ev.eval(model.worlds[name], f)
        if sub_trace is not None:
            children.append(sub_trace)
        if not sub_holds and failing is None:
            failing = name
            holds = False
        elif not sub_holds:
            holds = False
    root = None
    if trace:
        note = "over all declared worlds"
        if failing is not None:
            note += f"; first failing world: {failing}"
        root = TraceNode(format_formula(f), "all", holds, None, note,
                         children)
    return Verdict(holds=holds, formula=format_formula(f), world="all",
                   trace=root, failing_world=failing,
                   universe_relative=mentions_knowledge(f))
