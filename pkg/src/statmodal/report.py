"""Descriptive summaries: confusion quantities and fairness gaps.

Everything here is computed exactly; rendering produces both the exact
rational and a 12-significant-digit decimal so reports stay auditable.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction

from .divergence import Distance, DivergenceSpec, divergence
from .errors import UnknownGroup, UnknownLabel
from .evaluate import eval_static, restrict
from .model import VAR_Y, VAR_YHAT, DistributionalModel
from .syntax import Atom, StaticAnd, StaticNot, static_iff
from .templates import CONFUSION_KINDS
from .worlds import UNDEFINED, World, marginal

_TV = DivergenceSpec("tv")

SIG_DIGITS = 12


def render_decimal(value, digits: int = SIG_DIGITS) -> str:
    """A `digits`-significant-digit decimal for a Fraction or Distance."""
    if isinstance(value, Distance):
        exact = value.exact_value()
        if exact is not None:
            value = exact
        else:
            with decimal.localcontext() as ctx:
                ctx.prec = digits + 8
                base = (decimal.Decimal(value.power.numerator)
                        / decimal.Decimal(value.power.denominator))
                approx = base ** (decimal.Decimal(1)
                                  / decimal.Decimal(value.p))
            return str(_round_sig(approx, digits))
    value = Fraction(value)
    with decimal.localcontext() as ctx:
        ctx.prec = digits + 8
        approx = (decimal.Decimal(value.numerator)
                  / decimal.Decimal(value.denominator))
    return str(_round_sig(approx, digits))


def _round_sig(value: decimal.Decimal, digits: int) -> decimal.Decimal:
    if value == 0:
        return decimal.Decimal(0)
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        rounded = +value
    return rounded.normalize()


def render_quantity(value) -> str:
    """`exact (~ decimal)` for non-terminating values, else the exact form."""
    if isinstance(value, Distance):
        exact = value.exact_value()
        if exact is not None:
            return render_quantity(exact)
        return f"{value.render()} (~ {render_decimal(value)})"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    exact = f"{value.numerator}/{value.denominator}"
    return f"{exact} ({render_decimal(value)})"


def _ratio(model: DistributionalModel, w: World, guard, body):
    cell = w if guard is None else restrict(model, w, guard)
    if cell is UNDEFINED:
        return None
    hits = sum(count for s, count in cell.entries
               if eval_static(model, s, body))
    return Fraction(hits, cell.size)


@dataclass(frozen=True)
class ConfusionReport:
    label: str
    quantities: dict  # kind -> Fraction | None (None: empty cell)


def confusion_quantities(model: DistributionalModel, w: World,
                         label: str) -> ConfusionReport:
    """All ten per-label rates on one dataset; None where undefined."""
    if label not in model.labels:
        raise UnknownLabel(f"unknown label {label!r}")
    psi_l = Atom(f"psi_{label}", ("x",))
    h_l = Atom(f"h_{label}", ("x",))
    out = {}
    out["accuracy"] = _ratio(model, w, None, static_iff(psi_l, h_l))
    out["prevalence"] = _ratio(model, w, None, h_l)
    out["precision"] = _ratio(model, w, psi_l, h_l)
    out["fdr"] = _ratio(model, w, psi_l, StaticNot(h_l))
    out["recall"] = _ratio(model, w, h_l, psi_l)
    out["missrate"] = _ratio(model, w, h_l, StaticNot(psi_l))
    out["npv"] = _ratio(model, w, StaticNot(psi_l), StaticNot(h_l))
    out["for"] = _ratio(model, w, StaticNot(psi_l), h_l)
    out["specificity"] = _ratio(model, w, StaticNot(h_l), StaticNot(psi_l))
    out["fallout"] = _ratio(model, w, StaticNot(h_l), psi_l)
    assert set(out) == set(CONFUSION_KINDS)
    return ConfusionReport(label, out)


@dataclass(frozen=True)
class FairnessReport:
    group0: str
    group1: str
    independence: object          # Fraction | None
    separation: dict              # true label -> Fraction | None
    sufficiency: dict             # predicted label -> Fraction | None


def _group_guard(model: DistributionalModel, ref: str):
    name = ref.lstrip("!")
    if name not in model.groups:
        raise UnknownGroup(f"unknown group {name!r}")
    atom = Atom(f"eta_{name}", ("x",))
    return StaticNot(atom) if ref.startswith("!") else atom


def _tv_between(model: DistributionalModel, w: World, guard0, guard1,
                var: str):
    cell0 = restrict(model, w, guard0)
    cell1 = restrict(model, w, guard1)
    if cell0 is UNDEFINED or cell1 is UNDEFINED:
        return None
    return divergence(_TV, marginal(cell0, (var,)), marginal(cell1, (var,)))


def fairness_quantities(model: DistributionalModel, w: World, group0: str,
                        group1: str) -> FairnessReport:
    """Group gaps on one dataset, measured as total variation.

    independence: gap between prediction distributions of the two groups.
    separation: per true label, the gap after conditioning on that label
    (equalized-odds cells).  sufficiency: per predicted label, the gap in
    true-label distributions (calibration cells).  None marks an empty
    conditioning cell.
    """
    g0 = _group_guard(model, group0)
    g1 = _group_guard(model, group1)
    psi = Atom("psi", ("x", "yhat"))
    h = Atom("h", ("x", "y"))
    independence = _tv_between(model, w, StaticAnd(g0, psi),
                               StaticAnd(g1, psi), VAR_YHAT)
    separation = {}
    for label in sorted(model.labels):
        h_l = Atom(f"h_{label}", ("x",))
        separation[label] = _tv_between(
            model, w, StaticAnd(StaticAnd(g0, psi), h_l),
            StaticAnd(StaticAnd(g1, psi), h_l), VAR_YHAT)
    sufficiency = {}
    for label in sorted(model.labels):
        psi_l = Atom(f"psi_{label}", ("x",))
        sufficiency[label] = _tv_between(
            model, w, StaticAnd(StaticAnd(g0, psi_l), h),
            StaticAnd(StaticAnd(g1, psi_l), h), VAR_Y)
    return FairnessReport(group0, group1, independence, separation,
                          sufficiency)
