"""Model files: one YAML document declaring the whole checking context.

Example:

    labels: [l, nl]
    input: {kind: vector, components: [f0, f1]}
    metric: l1
    worlds:
      test: worlds/test.csv
      shaken: {transform: jiggle, of: test}
    transforms:
      jiggle: {kind: perturb, bound: "0.05", seed: 11}
      clear:  {kind: filter, where: "sunny(x)"}
    relations:
      rob: {robustness: {epsilon: "0.05", among: [test, shaken]}}
      hops: {pairs: [[test, shaken]]}
    predicates:
      sunny: {params: [a], body: "a[f1] = 1"}
    groups:
      G0: "v[f0] <= 0.5"
    classifier: "python3 classify.py"

Numbers that must stay exact (epsilon, bounds, noise) are written as
strings like "0.05" or "1/20"; plain YAML integers are accepted, and plain
floats are read back through their shortest decimal form.

File worlds are loaded first (missing predictions are filled through the
classifier adapter when one is configured), transform worlds are
materialised in dependency order, and robustness relations are computed
last over the declared universe.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import yaml

from .dataio import fill_predictions, load_world
from .divergence import MetricSpec, metric_from_name
from .errors import ParseError, StatModalError, UnknownWorld
from .model import (VAR_YHAT, DistributionalModel, Schema, build_model)
from .transforms import TransformSpec, apply_transform, \
    build_robustness_relation
from .worlds import UNDEFINED


def config_rational(value, where: str) -> Fraction:
    """An exact rational from a config scalar.

    Strings parse directly ("0.05", "1/20"); ints are exact; floats go
    through repr, which recovers the decimal the author wrote for the
    common short cases.
    """
    try:
        if isinstance(value, bool):
            raise ValueError("boolean")
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(repr(value))
        if isinstance(value, str):
            return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        pass
    raise ParseError(f"{where}: cannot read {value!r} as a rational")


def _expect_map(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(f"{where}: expected a mapping, got "
                         f"{type(value).__name__}")
    return value


def _transform_spec(name: str, raw: dict) -> TransformSpec:
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind == "filter":
        where = raw.pop("where", None)
        if not isinstance(where, str):
            raise ParseError(f"transform {name!r}: filter needs a 'where' "
                             f"formula")
        spec = TransformSpec(name, "filter", where=where)
    elif kind == "subsample":
        n = raw.pop("n", None)
        seed = raw.pop("seed", 0)
        if not isinstance(n, int) or isinstance(n, bool):
            raise ParseError(f"transform {name!r}: subsample needs an "
                             f"integer 'n'")
        spec = TransformSpec(name, "subsample", n=n, seed=int(seed))
    elif kind == "perturb":
        seed = raw.pop("seed", 0)
        bound = raw.pop("bound", None)
        flip = raw.pop("flip", None)
        bounds = None
        if bound is not None:
            if isinstance(bound, (list, tuple)):
                bounds = tuple(config_rational(b, f"transform {name!r} bound")
                               for b in bound)
            else:
                bounds = (config_rational(bound, f"transform {name!r} bound"),)
            if any(b < 0 for b in bounds):
                raise ParseError(f"transform {name!r}: negative noise bound")
        flip_q = None
        if flip is not None:
            flip_q = config_rational(flip, f"transform {name!r} flip")
            if not (0 <= flip_q <= 1):
                raise ParseError(f"transform {name!r}: flip probability "
                                 f"outside [0,1]")
        if bounds is None and flip_q is None:
            raise ParseError(f"transform {name!r}: perturb needs 'bound' "
                             f"or 'flip'")
        spec = TransformSpec(name, "perturb", seed=int(seed), bound=bounds,
                             flip=flip_q)
    elif kind == "map":
        expr = raw.pop("expr", None)
        if not isinstance(expr, str):
            raise ParseError(f"transform {name!r}: map needs an 'expr'")
        spec = TransformSpec(name, "map", expr=expr)
    else:
        raise ParseError(f"transform {name!r}: unknown kind {kind!r}")
    if raw:
        raise ParseError(f"transform {name!r}: unknown key(s) {sorted(raw)}")
    return spec


def load_model(path, seed: int | None = None) -> DistributionalModel:
    """Load a model file; `seed` overrides every seeded transform."""
    path = Path(path)
    base_dir = path.parent
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read model file: {exc}", path=str(path))
    except yaml.YAMLError as exc:
        raise ParseError(f"bad YAML: {exc}", path=str(path))
    doc = _expect_map(doc, str(path))
    known = {"labels", "input", "metric", "worlds", "transforms",
             "relations", "predicates", "groups", "classifier", "oracle"}
    unknown = set(doc) - known
    if unknown:
        raise ParseError(f"unknown top-level key(s) {sorted(unknown)}",
                         path=str(path))

    labels = doc.get("labels")
    if not isinstance(labels, list) or not labels:
        raise ParseError("a non-empty 'labels' list is required",
                         path=str(path))
    labels = [str(symbol) for symbol in labels]

    input_decl = doc.get("input")
    if isinstance(input_decl, dict):
        kind = input_decl.get("kind", "vector")
        if kind == "vector":
            comps = input_decl.get("components")
            if not isinstance(comps, list) or not comps:
                raise ParseError("vector input needs 'components'",
                                 path=str(path))
            schema = Schema("vector", tuple(str(c) for c in comps))
        elif kind == "categorical":
            schema = Schema("categorical")
        else:
            raise ParseError(f"unknown input kind {kind!r}", path=str(path))
    elif input_decl == "categorical":
        schema = Schema("categorical")
    else:
        raise ParseError("an 'input' declaration is required", path=str(path))

    metric = None
    if doc.get("metric") is not None:
        try:
            metric = metric_from_name(str(doc["metric"]))
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path)) from None

    transforms = {}
    for name, raw in _expect_map(doc.get("transforms", {}) or {},
                                 "transforms").items():
        spec = _transform_spec(str(name), _expect_map(raw, f"transform {name}"))
        if seed is not None:
            spec = spec.with_seed(seed)
        transforms[str(name)] = spec

    predicates = {}
    for name, raw in _expect_map(doc.get("predicates", {}) or {},
                                 "predicates").items():
        raw = _expect_map(raw, f"predicate {name}")
        params = raw.get("params", [])
        body = raw.get("body")
        if not isinstance(params, list) or not isinstance(body, str):
            raise ParseError(f"predicate {name!r} needs 'params' and 'body'",
                             path=str(path))
        predicates[str(name)] = ([str(p) for p in params], body)

    groups = {}
    for name, raw in _expect_map(doc.get("groups", {}) or {},
                                 "groups").items():
        if not isinstance(raw, str):
            raise ParseError(f"group {name!r} needs a membership expression",
                             path=str(path))
        groups[str(name)] = raw

    classifier = doc.get("classifier")
    oracle = doc.get("oracle")
    for label_, cmd in (("classifier", classifier), ("oracle", oracle)):
        if cmd is not None and not isinstance(cmd, str):
            raise ParseError(f"{label_} must be a command string",
                             path=str(path))

    # worlds: files first, then transform-derived ones in dependency order
    world_decls = _expect_map(doc.get("worlds", {}) or {}, "worlds")
    if not world_decls:
        raise ParseError("at least one world is required", path=str(path))
    file_worlds = {}
    derived: dict[str, tuple[str, str]] = {}
    for name, raw in world_decls.items():
        name = str(name)
        if isinstance(raw, str):
            file_worlds[name] = raw
        else:
            raw = dict(_expect_map(raw, f"world {name}"))
            if "file" in raw:
                file_worlds[name] = str(raw.pop("file"))
            elif "transform" in raw:
                derived[name] = (str(raw.pop("transform")),
                                 str(raw.pop("of", "")))
            else:
                raise ParseError(f"world {name!r} needs 'file' or "
                                 f"'transform'", path=str(path))
            if raw:
                raise ParseError(f"world {name!r}: unknown key(s) "
                                 f"{sorted(raw)}", path=str(path))

    alphabet = frozenset(labels)
    worlds = {}
    for name, rel_path in file_worlds.items():
        w = load_world(base_dir / rel_path, name=name, schema=schema,
                       alphabet=alphabet)
        if classifier and not w.has_variable(VAR_YHAT):
            w = fill_predictions(w, classifier, alphabet=alphabet)
        worlds[name] = w

    def interim() -> DistributionalModel:
        return build_model(labels=labels, schema=schema, worlds=dict(worlds),
                           predicates=predicates, groups=groups,
                           metric=metric, transforms=transforms,
                           classifier_cmd=classifier, oracle_cmd=oracle)

    pending = dict(derived)
    while pending:
        progressed = False
        for name in sorted(pending):
            tname, of = pending[name]
            if of in pending:
                continue
            if of not in worlds:
                raise UnknownWorld(
                    f"world {name!r} is derived from undeclared world "
                    f"{of!r}")
            if tname not in transforms:
                raise ParseError(f"world {name!r} uses unknown transform "
                                 f"{tname!r}", path=str(path))
            image = apply_transform(transforms[tname], worlds[of], interim())
            if image is UNDEFINED:
                raise ParseError(
                    f"world {name!r}: transform {tname!r} leaves no rows",
                    path=str(path))
            worlds[name] = image.renamed(name)
            del pending[name]
            progressed = True
        if not progressed:
            raise ParseError(
                f"circular transform worlds: {sorted(pending)}",
                path=str(path))

    relations = {}
    for name, raw in _expect_map(doc.get("relations", {}) or {},
                                 "relations").items():
        name = str(name)
        raw = dict(_expect_map(raw, f"relation {name}"))
        if "pairs" in raw:
            pairs = raw.pop("pairs")
            if not isinstance(pairs, list):
                raise ParseError(f"relation {name!r}: 'pairs' must be a "
                                 f"list", path=str(path))
            out = set()
            for pair in pairs:
                if (not isinstance(pair, (list, tuple)) or len(pair) != 2):
                    raise ParseError(f"relation {name!r}: each pair is "
                                     f"[from, to]", path=str(path))
                out.add((str(pair[0]), str(pair[1])))
            relations[name] = out
        elif "robustness" in raw:
            rob = dict(_expect_map(raw.pop("robustness"),
                                   f"relation {name} robustness"))
            eps = config_rational(rob.pop("epsilon", None),
                                  f"relation {name!r} epsilon")
            rmetric = metric
            if "metric" in rob:
                try:
                    rmetric = metric_from_name(str(rob.pop("metric")))
                except ValueError as exc:
                    raise ParseError(str(exc), path=str(path)) from None
            if rmetric is None:
                raise ParseError(f"relation {name!r}: no metric declared",
                                 path=str(path))
            among = rob.pop("among", None)
            if rob:
                raise ParseError(f"relation {name!r}: unknown key(s) "
                                 f"{sorted(rob)}", path=str(path))
            if among is None:
                subset = dict(worlds)
            else:
                subset = {}
                for wname in among:
                    wname = str(wname)
                    if wname not in worlds:
                        raise UnknownWorld(
                            f"relation {name!r} mentions undeclared world "
                            f"{wname!r}")
                    subset[wname] = worlds[wname]
            relations[name] = set(build_robustness_relation(subset, eps,
                                                            rmetric))
        else:
            raise ParseError(f"relation {name!r} needs 'pairs' or "
                             f"'robustness'", path=str(path))
        if raw:
            raise ParseError(f"relation {name!r}: unknown key(s) "
                             f"{sorted(raw)}", path=str(path))

    try:
        return build_model(labels=labels, schema=schema, worlds=worlds,
                           relations=relations, predicates=predicates,
                           groups=groups, metric=metric,
                           transforms=transforms, classifier_cmd=classifier,
                           oracle_cmd=oracle)
    except ValueError as exc:
        raise ParseError(str(exc), path=str(path)) from None
