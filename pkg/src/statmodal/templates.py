"""Ready-made formulas for the standard classifier properties.

Confusion-style performance statements, expected-loss generalization bounds,
robustness statements (knowledge over a perturbation relation), and the
three dataset fairness families.  Each constructor returns a plain dataset
formula; nothing here extends the evaluator, so a template means exactly
what its printed formula says.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import UnknownGroup, UnknownKind, UnknownLabel, UnknownRelation
from .model import VAR_X, VAR_Y, VAR_YHAT, DistributionalModel
from .divergence import DivergenceSpec
from .parser import parse_interval
from .syntax import (And, Atom, Cond, DatasetFormula, ExpLoss, Indist,
                     Interval, IntervalSet, Know, Prob, StaticAnd,
                     StaticFormula, StaticNot, and_all, static_and_all,
                     static_iff)

CONFUSION_KINDS = ("precision", "recall", "accuracy", "prevalence", "fdr",
                   "for", "npv", "fallout", "specificity", "missrate")

_TV = DivergenceSpec("tv")


def _intervals(spec) -> IntervalSet:
    if isinstance(spec, IntervalSet):
        return spec
    if isinstance(spec, Interval):
        return IntervalSet((spec,))
    if isinstance(spec, str):
        return parse_interval(spec)
    raise TypeError(f"cannot read {spec!r} as an interval set")


def _check_label(label: str, model: DistributionalModel | None) -> None:
    if model is not None and label not in model.labels:
        raise UnknownLabel(f"label {label!r} outside the declared alphabet")


def _check_relation(relation: str, model: DistributionalModel | None) -> None:
    if model is not None and relation not in model.relations:
        raise UnknownRelation(f"unknown relation {relation!r}")


def _group_atom(ref: str, model: DistributionalModel | None) -> StaticFormula:
    """A group membership literal; a leading '!' takes the complement."""
    negated = ref.startswith("!")
    name = ref[1:] if negated else ref
    if model is not None and name not in model.groups:
        raise UnknownGroup(f"unknown group {name!r}")
    atom = Atom(f"eta_{name}", (VAR_X,))
    return StaticNot(atom) if negated else atom


def _psi_l(label: str) -> Atom:
    return Atom(f"psi_{label}", (VAR_X,))


def _h_l(label: str) -> Atom:
    return Atom(f"h_{label}", (VAR_X,))


_PSI = Atom("psi", (VAR_X, VAR_YHAT))
_H = Atom("h", (VAR_X, VAR_Y))


# -- performance -------------------------------------------------------------

def confusion(kind: str, label: str, intervals,
              model: DistributionalModel | None = None) -> DatasetFormula:
    """One of the ten confusion-style statements for a label.

    Conditional kinds say: the guarded cell is nonempty and the probability
    of the body within it lies in the interval set.  accuracy and prevalence
    are unconditional probability bounds.
    """
    _check_label(label, model)
    iset = _intervals(intervals)
    psi_l, h_l = _psi_l(label), _h_l(label)
    guards_and_bodies = {
        "precision":   (psi_l, h_l),
        "recall":      (h_l, psi_l),
        "fdr":         (psi_l, StaticNot(h_l)),
        "for":         (StaticNot(psi_l), h_l),
        "npv":         (StaticNot(psi_l), StaticNot(h_l)),
        "fallout":     (StaticNot(h_l), psi_l),
        "specificity": (StaticNot(h_l), StaticNot(psi_l)),
        "missrate":    (h_l, StaticNot(psi_l)),
    }
    if kind == "accuracy":
        return Prob(iset, static_iff(psi_l, h_l))
    if kind == "prevalence":
        return Prob(iset, h_l)
    if kind in guards_and_bodies:
        guard, body = guards_and_bodies[kind]
        return Cond(guard, Prob(iset, body))
    raise UnknownKind(f"unknown confusion kind {kind!r}; "
                      f"expected one of {', '.join(CONFUSION_KINDS)}")


def generalization_error(loss: str, bound) -> DatasetFormula:
    """Expected loss over labelled, classified rows stays within the bound."""
    return Cond(StaticAnd(_H, _PSI), ExpLoss(loss, Fraction(bound)))


# -- robustness --------------------------------------------------------------

def target_robust(label: str, target: str, intervals, relation: str,
                  model: DistributionalModel | None = None) -> DatasetFormula:
    """In every reachable world, rows actually labelled `label` are
    predicted as `target` with probability in the interval set."""
    _check_label(label, model)
    _check_label(target, model)
    _check_relation(relation, model)
    body = Cond(_h_l(label), Prob(_intervals(intervals),
                                  StaticNot(_psi_l(target))))
    return Know(relation, body)


def total_robust(label: str, intervals, relation: str,
                 model: DistributionalModel | None = None) -> DatasetFormula:
    """Recall for the label holds in every reachable world."""
    _check_relation(relation, model)
    return Know(relation, confusion("recall", label, intervals, model))


def robust_variant(kind: str, label: str, intervals, relation: str,
                   model: DistributionalModel | None = None) -> DatasetFormula:
    """Any confusion-style statement wrapped in knowledge over a relation."""
    _check_relation(relation, model)
    return Know(relation, confusion(kind, label, intervals, model))


# -- fairness ----------------------------------------------------------------

def group_fairness(g0: str, g1: str, epsilon,
                   model: DistributionalModel | None = None) -> DatasetFormula:
    """Predictions for classified members of two groups are distributed
    alike, up to epsilon in total variation (independence)."""
    left = StaticAnd(_group_atom(g0, model), _PSI)
    right = StaticAnd(_group_atom(g1, model), _PSI)
    return Indist(left, right, VAR_YHAT, Fraction(epsilon), _TV)


def _separation_cell(ref: str, label: str,
                     model: DistributionalModel | None) -> StaticFormula:
    return static_and_all(
        [_group_atom(ref, model), _PSI, _h_l(label)])


def equalized_odds(g0: str, g1: str, epsilon,
                   labels=None,
                   model: DistributionalModel | None = None) -> DatasetFormula:
    """Per actual label, predictions for classified members of two groups
    are distributed alike up to epsilon (separation)."""
    labels = _label_list(labels, model)
    eps = Fraction(epsilon)
    parts: list[DatasetFormula] = []
    for label in labels:
        _check_label(label, model)
        parts.append(Indist(_separation_cell(g0, label, model),
                            _separation_cell(g1, label, model),
                            VAR_YHAT, eps, _TV))
    return and_all(parts)


def equal_opportunity(g0: str, label: str,
                      model: DistributionalModel | None = None) -> DatasetFormula:
    """Separation for one label, exactly (epsilon 0), against the
    complement of the group."""
    return equalized_odds(g0, "!" + g0.lstrip("!"), 0, [label], model)


def sufficiency(g0: str, g1: str, epsilon,
                labels=None,
                model: DistributionalModel | None = None) -> DatasetFormula:
    """Per predicted label, actual labels for labelled members of two
    groups are distributed alike up to epsilon."""
    labels = _label_list(labels, model)
    eps = Fraction(epsilon)
    parts: list[DatasetFormula] = []
    for label in labels:
        _check_label(label, model)
        left = static_and_all([_group_atom(g0, model), _psi_l(label), _H])
        right = static_and_all([_group_atom(g1, model), _psi_l(label), _H])
        parts.append(Indist(left, right, VAR_Y, eps, _TV))
    return and_all(parts)


def _label_list(labels, model: DistributionalModel | None) -> list[str]:
    if labels is not None:
        out = list(labels)
        if not out:
            raise UnknownLabel("an explicit label subset must not be empty")
        return out
    if model is None:
        raise UnknownLabel("no label subset given and no model to take the "
                           "alphabet from")
    return sorted(model.labels)


# -- registry for configuration files ----------------------------------------

def build_template(spec: dict, model: DistributionalModel) -> DatasetFormula:
    """Instantiate a template from a configuration mapping.

    The mapping carries `kind` plus the parameters that kind needs, for
    example {kind: recall, label: pos, interval: "[0.9,1]"}.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind is None:
        raise UnknownKind("template needs a kind")

    def need(key: str):
        if key not in spec:
            raise UnknownKind(f"template kind {kind!r} needs {key!r}")
        return spec.pop(key)

    def groups_pair() -> tuple[str, str]:
        pair = need("groups")
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise UnknownGroup("groups must list exactly two group names")
        return str(pair[0]), str(pair[1])

    if kind in CONFUSION_KINDS:
        out = confusion(kind, str(need("label")), str(need("interval")), model)
    elif kind == "generalization_error":
        out = generalization_error(str(need("loss")),
                                   Fraction(str(need("bound"))))
        if out.sub.loss not in model.losses:
            from .errors import UnknownLoss
            raise UnknownLoss(f"unknown loss {out.sub.loss!r}")
    elif kind == "target_robust":
        out = target_robust(str(need("label")), str(need("target")),
                            str(need("interval")), str(need("relation")),
                            model)
    elif kind == "total_robust":
        out = total_robust(str(need("label")), str(need("interval")),
                           str(need("relation")), model)
    elif kind == "robust_variant":
        out = robust_variant(str(need("of")), str(need("label")),
                             str(need("interval")), str(need("relation")),
                             model)
    elif kind == "group_fairness":
        g0, g1 = groups_pair()
        out = group_fairness(g0, g1, Fraction(str(need("epsilon"))), model)
    elif kind == "equalized_odds":
        g0, g1 = groups_pair()
        out = equalized_odds(g0, g1, Fraction(str(need("epsilon"))),
                             spec.pop("labels", None), model)
    elif kind == "equal_opportunity":
        out = equal_opportunity(str(need("group")), str(need("label")), model)
    elif kind == "sufficiency":
        g0, g1 = groups_pair()
        out = sufficiency(g0, g1, Fraction(str(need("epsilon"))),
                          spec.pop("labels", None), model)
    else:
        raise UnknownKind(f"unknown template kind {kind!r}")
    if spec:
        raise UnknownKind(
            f"template kind {kind!r} does not take {sorted(spec)}")
    return out
