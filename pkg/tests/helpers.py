"""Shared test utilities: brute-force oracles and random generators.

The oracles are deliberately naive, definition-shaped re-implementations.
They exist so the fast production algorithms have something independent to
disagree with; keep them dumb.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from statmodal import (Distance, Distribution, Label, MetricSpec, Schema,
                       build_model, ground_metric, numvec, state,
                       world_from_rows)

# -- oracles -----------------------------------------------------------------


def tv_oracle(mu0: Distribution, mu1: Distribution) -> Fraction:
    """Total variation as the literal sup over all events.

    Every subset of the union support is tried.  Points where both
    distributions agree are left out (they never change an event's gap),
    and the per-point gaps are pre-scaled to one integer denominator so
    the enumeration fits the acceptance-suite budget.
    """
    m0, m1 = mu0.as_dict(), mu1.as_dict()
    gaps = [m0.get(k, Fraction(0)) - m1.get(k, Fraction(0))
            for k in set(m0) | set(m1)]
    gaps = [g for g in gaps if g]
    if not gaps:
        return Fraction(0)
    den = math.lcm(*(g.denominator for g in gaps))
    scaled = [int(g * den) for g in gaps]
    best = 0
    for mask in range(1 << len(scaled)):
        total = 0
        for i, g in enumerate(scaled):
            if mask >> i & 1:
                total += g
        best = max(best, abs(total))
    return Fraction(best, den)


def hall_feasible(powers: list[list[Fraction]], m0: list[Fraction],
                  m1: list[Fraction], threshold: Fraction) -> bool:
    """Deficiency check for the transportation problem: mass can move only
    along pairs with distance power <= threshold iff every source subset has
    enough reachable demand."""
    n0, n1 = len(m0), len(m1)
    for mask in range(1, 1 << n0):
        src = [i for i in range(n0) if mask >> i & 1]
        reach = {j for i in src for j in range(n1)
                 if powers[i][j] <= threshold}
        if sum((m0[i] for i in src), Fraction(0)) > \
                sum((m1[j] for j in reach), Fraction(0)):
            return False
    return True


def winf_oracle(mu0: Distribution, mu1: Distribution,
                metric: MetricSpec) -> Distance:
    """Least pairwise-distance threshold at which transport is possible,
    found by linear scan with the subset-deficiency feasibility test."""
    s0, s1 = mu0.support(), mu1.support()
    m0 = [mu0.mass(k) for k in s0]
    m1 = [mu1.mass(k) for k in s1]
    powers = [[ground_metric(metric, a, b).power for b in s1] for a in s0]
    p = metric.p if metric.kind == "lp" else 1
    for t in sorted({q for row in powers for q in row}):
        if hall_feasible(powers, m0, m1, t):
            return Distance(t, p)
    raise AssertionError("complete transport must be feasible")


def cond_prob_oracle(rows, guard, body):
    """Conditional probability by literally counting rows; None when the
    guard matches nothing.  guard/body are plain state predicates."""
    kept = [s for s in rows if guard(s)]
    if not kept:
        return None
    hits = sum(1 for s in kept if body(s))
    return Fraction(hits, len(kept))


# -- random generators -------------------------------------------------------


def rand_fraction(rng: random.Random, max_den: int = 12) -> Fraction:
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(0, 4 * den), den)


def rand_dist(rng: random.Random, values, max_support: int | None = None,
              max_weight: int = 20) -> Distribution:
    """A random distribution over a sample of the given distinct values."""
    values = list(values)
    cap = len(values) if max_support is None else min(max_support, len(values))
    chosen = rng.sample(values, rng.randint(1, cap))
    weights = [rng.randint(1, max_weight) for _ in chosen]
    total = sum(weights)
    return Distribution.of(
        {v: Fraction(wt, total) for v, wt in zip(chosen, weights)})


def scalar_pool(count: int = 12) -> list:
    """Distinct one-component vectors with small rational values."""
    out = []
    seen = set()
    for num in range(count * 3):
        q = Fraction(num, 3)
        if q not in seen:
            seen.add(q)
            out.append(numvec(q))
        if len(out) == count:
            break
    return out


def plane_pool(count: int = 10) -> list:
    """Distinct two-component vectors on a small integer grid."""
    out = []
    side = 1
    while side * side < count:
        side += 1
    for a in range(side):
        for b in range(side):
            out.append(numvec(a, b))
            if len(out) == count:
                return out
    return out


def label_pool(symbols=("a", "b", "c", "d", "e", "f")) -> list:
    return [Label(s) for s in symbols]


def rand_row(rng: random.Random, labels, n_features: int = 1,
             with_yhat: bool = True, span: int = 3):
    x = numvec(*[Fraction(rng.randint(0, span)) for _ in range(n_features)])
    kw = {"x": x, "y": Label(rng.choice(labels))}
    if with_yhat:
        kw["yhat"] = Label(rng.choice(labels))
    return state(**kw)


def rand_world(rng: random.Random, name: str, n_rows: int, labels,
               n_features: int = 1, with_yhat: bool = True, span: int = 3):
    rows = [rand_row(rng, labels, n_features, with_yhat, span)
            for _ in range(n_rows)]
    return world_from_rows(name, rows)


def model_of(worlds, labels=("l", "nl"), n_features: int = 1,
             relations=None, metric=None, predicates=None, groups=None,
             transforms=None, classifier_cmd=None, oracle_cmd=None):
    """Assemble a model around prebuilt worlds with a vector input schema."""
    schema = Schema("vector", tuple(f"f{i}" for i in range(n_features)))
    return build_model(
        labels=list(labels), schema=schema,
        worlds={w.name: w for w in worlds},
        relations=relations or {}, predicates=predicates or {},
        groups=groups or {}, metric=metric, transforms=transforms or {},
        classifier_cmd=classifier_cmd, oracle_cmd=oracle_cmd)


def row(f0, y, yhat=None):
    """One vector-input row with optional prediction; f0 may be a tuple."""
    x = numvec(*f0) if isinstance(f0, tuple) else numvec(f0)
    kw = {"x": x, "y": Label(y)}
    if yhat is not None:
        kw["yhat"] = Label(yhat)
    return state(**kw)


def std_model(metric_name: str = "l1"):
    """A model declaring one of everything, for parser and evaluator tests."""
    from statmodal import TransformSpec, metric_from_name
    w1 = world_from_rows("w1", counted_rows((3, 0, "l", "l"),
                                            (1, 1, "l", "nl"),
                                            (2, 2, "nl", "nl")))
    w2 = world_from_rows("w2", counted_rows((2, 0, "l", "l"),
                                            (2, 3, "nl", "l")))
    return model_of(
        [w1, w2],
        labels=("l", "nl"),
        metric=metric_from_name(metric_name),
        relations={"rob": {("w1", "w1"), ("w1", "w2"), ("w2", "w2")},
                   "near": {("w1", "w2")}},
        predicates={"sunny": (["a"], "a[f0] <= 1")},
        groups={"G0": "v[f0] <= 1", "G1": "v[f0] > 1"},
        transforms={"T1": TransformSpec("T1", "filter", where="true"),
                    "T2": TransformSpec("T2", "subsample", n=2, seed=5)})


# -- random formula ASTs -----------------------------------------------------


def rand_interval_set(rng: random.Random):
    from statmodal import Interval, interval_set, point
    if rng.random() < 0.3:
        return interval_set(point(Fraction(rng.randint(0, 12), 12)))
    k = rng.choice([1, 1, 1, 2])
    pts = sorted(rng.sample(range(13), 2 * k))
    ivs = []
    for i in range(k):
        lo = Fraction(pts[2 * i], 12)
        hi = Fraction(pts[2 * i + 1], 12)
        ivs.append(Interval(lo, hi, rng.random() < 0.5, rng.random() < 0.5))
    return interval_set(*ivs)


_STATIC_ATOMS = (("psi", ("x", "yhat")), ("h", ("x", "y")),
                 ("psi_l", ("x",)), ("h_l", ("x",)),
                 ("psi_nl", ("x",)), ("h_nl", ("x",)),
                 ("eta_G0", ("x",)), ("eta_G1", ("x",)),
                 ("sunny", ("x",)))


def rand_static(rng: random.Random, depth: int = 3):
    from statmodal import FALSE, TRUE, Atom, StaticAnd, StaticNot
    if depth <= 0 or rng.random() < 0.4:
        roll = rng.random()
        if roll < 0.1:
            return TRUE
        if roll < 0.2:
            return FALSE
        symbol, args = rng.choice(_STATIC_ATOMS)
        return Atom(symbol, args)
    if rng.random() < 0.5:
        return StaticNot(rand_static(rng, depth - 1))
    return StaticAnd(rand_static(rng, depth - 1), rand_static(rng, depth - 1))


def rand_dataset(rng: random.Random, model, depth: int = 3):
    from statmodal import (And, Cond, DivergenceSpec, ExpLoss, Indist, Know,
                           Not, Prob, Trans)
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            # zero_one only: label_distance needs numeric label alphabets
            return ExpLoss("zero_one", Fraction(rng.randint(0, 24), 12))
        return Prob(rand_interval_set(rng), rand_static(rng, 2))
    roll = rng.randrange(6)
    if roll == 0:
        return Not(rand_dataset(rng, model, depth - 1))
    if roll == 1:
        return And(rand_dataset(rng, model, depth - 1),
                   rand_dataset(rng, model, depth - 1))
    if roll == 2:
        return Trans(rng.choice(["T1", "T2"]),
                     rand_dataset(rng, model, depth - 1))
    if roll == 3:
        return Cond(rand_static(rng, 2), rand_dataset(rng, model, depth - 1))
    if roll == 4:
        return Know(rng.choice(["rob", "near"]),
                    rand_dataset(rng, model, depth - 1))
    var = rng.choice(["x", "y", "yhat"])
    # transport over a vector metric only makes sense for the input variable
    if var == "x" and model.metric is not None and rng.random() < 0.5:
        div = DivergenceSpec("winf", model.metric)
    else:
        div = DivergenceSpec("tv")
    return Indist(rand_static(rng, 2), rand_static(rng, 2), var,
                  Fraction(rng.randint(0, 12), 12), div)


def counted_rows(*triples):
    """Expand (count, f0, y, yhat) tuples into a flat row list."""
    rows = []
    for count, f0, y, yhat in triples:
        rows.extend([row(f0, y, yhat)] * count)
    return rows
