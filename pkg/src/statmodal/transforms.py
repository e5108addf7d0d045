"""Dataset transforms and the perturbation-based accessibility relation.

Transforms are declared once in the model file and applied either to
materialise derived worlds or on the fly by the transform modality.  Every
seeded transform is a pure function of (seed, input world): rows are always
visited in the world's canonical order, so re-running a transform yields a
row-for-row equal world.

Perturbation keeps the actual label of each row and re-fills predictions
through the classifier adapter when one is configured; without an adapter
the stale predictions are dropped, and prediction-dependent formulas on the
result raise MissingPredictions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .dataio import fill_predictions
from .divergence import MetricSpec, wasserstein_inf
from .errors import IncompatibleFeature, UnknownVariable
from .expressions import parse_value_expr
from .model import VAR_X, VAR_Y, VAR_YHAT, DistributionalModel
from .values import Label, NumVec, State, Value
from .worlds import UNDEFINED, World, marginal, world_from_rows

# granularity of the noise grid: perturbation offsets are multiples of
# bound/1000, so they stay rational and within the bound exactly
NOISE_STEPS = 1000


@dataclass(frozen=True)
class TransformSpec:
    """One declared transform.

    kind "filter":    keep rows satisfying a row formula (`where`)
    kind "subsample": draw `n` rows without replacement (`seed`)
    kind "perturb":   add bounded rational noise to features (`bound`, one
                      value or one per component), or flip a categorical
                      input with probability `flip`; `seed`
    kind "map":       replace the input by a feature expression (`expr`)
    """

    name: str
    kind: str
    where: str | None = None
    n: int | None = None
    seed: int | None = None
    bound: tuple[Fraction, ...] | None = None
    flip: Fraction | None = None
    expr: str | None = None

    def with_seed(self, seed: int) -> "TransformSpec":
        if self.kind in ("subsample", "perturb"):
            return TransformSpec(self.name, self.kind, self.where, self.n,
                                 seed, self.bound, self.flip, self.expr)
        return self


def apply_transform(spec: TransformSpec, w: World,
                    model: DistributionalModel):
    """The image of a world under a transform, named after both.

    Returns UNDEFINED when a filter keeps no rows.
    """
    name = f"{w.name}~{spec.name}"
    if spec.kind == "filter":
        from .evaluate import restrict
        from .parser import parse_static
        guard = parse_static(spec.where, model)
        out = restrict(model, w, guard)
        if out is UNDEFINED:
            return UNDEFINED
        return out.renamed(name)
    if spec.kind == "subsample":
        return _subsample(spec, w).renamed(name)
    if spec.kind == "perturb":
        return _perturb(spec, w, model).renamed(name)
    if spec.kind == "map":
        return _map_features(spec, w, model).renamed(name)
    raise IncompatibleFeature(f"unknown transform kind {spec.kind!r}")


def _subsample(spec: TransformSpec, w: World) -> World:
    rows = list(w.rows())
    if spec.n is None or not (1 <= spec.n <= len(rows)):
        raise IncompatibleFeature(
            f"subsample size {spec.n!r} outside 1..{len(rows)}")
    rng = random.Random(spec.seed)
    return world_from_rows(w.name, rng.sample(rows, spec.n))


def _noise_bounds(spec: TransformSpec, dim: int) -> tuple[Fraction, ...]:
    assert spec.bound is not None
    if len(spec.bound) == 1:
        return spec.bound * dim
    if len(spec.bound) != dim:
        raise IncompatibleFeature(
            f"{len(spec.bound)} noise bound(s) for {dim} component(s)")
    return spec.bound


def _perturb(spec: TransformSpec, w: World,
             model: DistributionalModel) -> World:
    rng = random.Random(spec.seed)
    rows = list(w.rows())
    first_x = rows[0].value_of(VAR_X)
    new_xs: list[Value] = []
    if isinstance(first_x, NumVec):
        if spec.bound is None:
            raise IncompatibleFeature(
                "perturbing a vector input needs a noise bound")
        bounds = _noise_bounds(spec, first_x.dim)
        for s in rows:
            xv = s.value_of(VAR_X)
            comps = []
            for c, b in zip(xv.components, bounds):
                step = rng.randint(-NOISE_STEPS, NOISE_STEPS)
                comps.append(c + b * Fraction(step, NOISE_STEPS))
            new_xs.append(NumVec(tuple(comps)))
    else:
        if spec.flip is None:
            raise IncompatibleFeature(
                "perturbing a categorical input needs a flip probability")
        pool = sorted({s.value_of(VAR_X).symbol for s in rows})
        p = float(spec.flip)
        for s in rows:
            current = s.value_of(VAR_X).symbol
            others = [sym for sym in pool if sym != current]
            if others and rng.random() < p:
                new_xs.append(Label(rng.choice(others)))
            else:
                new_xs.append(s.value_of(VAR_X))
    return _rebuild(w, rows, new_xs, model)


def _map_features(spec: TransformSpec, w: World,
                  model: DistributionalModel) -> World:
    assert spec.expr is not None
    params = [VAR_X, VAR_Y] + ([VAR_YHAT] if w.has_variable(VAR_YHAT) else [])
    compiled = parse_value_expr(spec.expr, params, model.component_map())
    rows = list(w.rows())
    new_xs: list[Value] = []
    for s in rows:
        bindings = {var: s.value_of(var) for var in params}
        v = compiled.evaluate(bindings)
        if isinstance(v, Fraction):
            v = NumVec((v,))
        if not model.schema.accepts(v):
            raise IncompatibleFeature(
                f"mapped value {v!r} does not fit the declared "
                f"{model.schema.kind} schema")
        new_xs.append(v)
    return _rebuild(w, rows, new_xs, model)


def _rebuild(w: World, rows: list[State], new_xs: list[Value],
             model: DistributionalModel) -> World:
    """Reassemble rows after the input changed: actual labels are kept
    unless an oracle adapter overrides them, and predictions are refreshed
    by the classifier adapter or dropped as stale."""
    if model.oracle_cmd:
        from .dataio import run_adapter
        new_ys = run_adapter(model.oracle_cmd, new_xs, alphabet=model.labels)
    else:
        new_ys = [s.value_of(VAR_Y) for s in rows]
    new_rows = [State.of({VAR_X: xv, VAR_Y: yv})
                for xv, yv in zip(new_xs, new_ys)]
    out = world_from_rows(w.name, new_rows)
    if model.classifier_cmd:
        return fill_predictions(out, model.classifier_cmd,
                                alphabet=model.labels)
    return out


def build_robustness_relation(worlds: dict[str, World], epsilon,
                              metric: MetricSpec) -> frozenset[tuple[str, str]]:
    """All ordered world pairs whose input marginals lie within epsilon in
    the transport distance.  Reflexive pairs are always included; the
    result is symmetric because the distance is."""
    epsilon = Fraction(epsilon)
    names = sorted(worlds)
    for name in names:
        if not worlds[name].has_variable(VAR_X):
            raise UnknownVariable(f"world {name!r} has no input variable")
    margins = {name: marginal(worlds[name], [VAR_X]) for name in names}
    pairs: set[tuple[str, str]] = {(name, name) for name in names}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if margins[a] == margins[b]:
                close = True
            else:
                close = wasserstein_inf(margins[a], margins[b],
                                        metric) <= epsilon
            if close:
                pairs.add((a, b))
                pairs.add((b, a))
    return frozenset(pairs)
