"""Ground metrics on values and divergences between finite distributions.

Arithmetic stays exact throughout.  Distances under an l^p metric are kept
as their p-th powers, which are rational, so ordering and thresholding never
touch floating point; a Distance carries (power, p) and only renders an
approximate decimal on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import IncompatibleValues
from .values import Label, NumVec, Value

INF = "inf"


@dataclass(frozen=True)
class MetricSpec:
    """Ground metric on input values: l^p for integer p >= 1, l^inf, or the
    discrete metric.  Non-integer p is rejected because its distances are
    irrational even in p-th power."""

    kind: str                 # "lp" | "linf" | "discrete"
    p: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "lp":
            if not isinstance(self.p, int) or self.p < 1:
                raise ValueError(f"lp metric needs integer p >= 1, got {self.p!r}")
        elif self.kind in ("linf", "discrete"):
            if self.p is not None:
                raise ValueError(f"{self.kind} metric takes no p")
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")

    def render(self) -> str:
        if self.kind == "lp":
            return f"l{self.p}"
        return {"linf": "linf", "discrete": "discrete"}[self.kind]


def metric_from_name(name: str) -> MetricSpec:
    """Read a metric name: discrete, linf, or l<p> with integer p >= 1."""
    name = name.strip().lower()
    if name == "discrete":
        return MetricSpec("discrete")
    if name in ("linf", "loo"):
        return MetricSpec("linf")
    if name.startswith("l"):
        try:
            p = int(name[1:])
        except ValueError:
            raise ValueError(f"unknown metric {name!r}") from None
        return MetricSpec("lp", p)
    raise ValueError(f"unknown metric {name!r}")


@dataclass(frozen=True)
class Distance:
    """An exact metric value, stored as its p-th power.

    For p = 1 (which also covers l^inf and the discrete metric) the power is
    the distance itself.  Comparisons against rational thresholds compare
    power against threshold**p, which is exact.
    """

    power: Fraction
    p: int = 1

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ValueError("negative distance power")

    def exact_value(self) -> Fraction | None:
        """The distance as a rational when the p-th root is exact."""
        if self.p == 1:
            return self.power
        num = _iroot(self.power.numerator, self.p)
        den = _iroot(self.power.denominator, self.p)
        if num is None or den is None:
            return None
        return Fraction(num, den)

    def approx(self) -> float:
        if self.p == 1:
            return float(self.power)
        return float(self.power) ** (1.0 / self.p)

    def is_zero(self) -> bool:
        return self.power == 0

    def _cmp_power(self, other) -> tuple[Fraction, Fraction]:
        if isinstance(other, Distance):
            if other.p != self.p:
                raise IncompatibleValues(
                    f"cannot compare distances with p={self.p} and p={other.p}")
            return self.power, other.power
        q = Fraction(other)
        if q < 0:
            # any distance exceeds a negative threshold
            return self.power, Fraction(-1)
        return self.power, q ** self.p

    def __le__(self, other) -> bool:
        a, b = self._cmp_power(other)
        return a <= b

    def __lt__(self, other) -> bool:
        a, b = self._cmp_power(other)
        return a < b

    def __ge__(self, other) -> bool:
        a, b = self._cmp_power(other)
        return a >= b

    def __gt__(self, other) -> bool:
        a, b = self._cmp_power(other)
        return a > b

    def same_value(self, other) -> bool:
        a, b = self._cmp_power(other)
        return a == b

    def render(self) -> str:
        exact = self.exact_value()
        if exact is not None:
            from .values import render_rational
            return render_rational(exact)
        from .values import render_rational
        return f"({render_rational(self.power)})^(1/{self.p})"


def _iroot(n: int, p: int) -> int | None:
    """Exact integer p-th root of n >= 0, or None if n is not a p-th power."""
    if n in (0, 1):
        return n
    lo, hi = 1, 1
    while hi ** p < n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** p < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** p == n else None


def ground_metric(spec: MetricSpec, v0: Value, v1: Value) -> Distance:
    """Distance between two values under the given metric."""
    if spec.kind == "discrete":
        return Distance(Fraction(0 if v0 == v1 else 1), 1)
    if isinstance(v0, Label) or isinstance(v1, Label):
        raise IncompatibleValues(
            f"{spec.render()} metric needs numeric vectors, got labels")
    assert isinstance(v0, NumVec) and isinstance(v1, NumVec)
    if v0.dim != v1.dim:
        raise IncompatibleValues(
            f"vector dimensions differ: {v0.dim} vs {v1.dim}")
    deltas = [abs(a - b) for a, b in zip(v0.components, v1.components)]
    if spec.kind == "linf":
        return Distance(max(deltas, default=Fraction(0)), 1)
    p = spec.p
    assert p is not None
    if p == 1:
        return Distance(sum(deltas, Fraction(0)), 1)
    return Distance(sum((d ** p for d in deltas), Fraction(0)), p)


# -- total variation ---------------------------------------------------------

def total_variation(mu0, mu1) -> Fraction:
    """Largest discrepancy either distribution assigns to any event; computed
    as half the l1 distance between the mass functions."""
    m0 = mu0.as_dict()
    m1 = mu1.as_dict()
    keys = set(m0) | set(m1)
    acc = Fraction(0)
    for k in keys:
        acc += abs(m0.get(k, Fraction(0)) - m1.get(k, Fraction(0)))
    return acc / 2


# -- infinity-order transport distance ---------------------------------------

def _max_flow(n_nodes: int, edges: list[tuple[int, int, int]],
              source: int, sink: int) -> int:
    """Dinic's algorithm on integer capacities."""
    head: list[list[int]] = [[] for _ in range(n_nodes)]
    to: list[int] = []
    cap: list[int] = []

    def add_edge(u: int, v: int, c: int) -> None:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0)

    for u, v, c in edges:
        add_edge(u, v, c)

    flow = 0
    while True:
        level = [-1] * n_nodes
        level[source] = 0
        queue = [source]
        for u in queue:
            for eid in head[u]:
                v = to[eid]
                if cap[eid] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[sink] < 0:
            return flow
        it = [0] * n_nodes

        def augment(u: int, limit: int) -> int:
            if u == sink:
                return limit
            while it[u] < len(head[u]):
                eid = head[u][it[u]]
                v = to[eid]
                if cap[eid] > 0 and level[v] == level[u] + 1:
                    pushed = augment(v, min(limit, cap[eid]))
                    if pushed:
                        cap[eid] -= pushed
                        cap[eid ^ 1] += pushed
                        return pushed
                it[u] += 1
            level[u] = -1
            return 0

        while True:
            pushed = augment(source, 1 << 62)
            if not pushed:
                break
            flow += pushed


def _scaled_masses(mu) -> tuple[list, list[int], int]:
    """Support values and masses scaled to integers by the common denominator
    of both; returns (support, integer masses, total)."""
    items = list(mu.masses)
    denom = 1
    for _, m in items:
        denom = denom * m.denominator // gcd(denom, m.denominator)
    support = [k for k, _ in items]
    scaled = [int(m * denom) for _, m in items]
    return support, scaled, denom


def transport_feasible(powers: list[list[Fraction]],
                       supply: list[int], demand: list[int],
                       threshold: Fraction) -> bool:
    """Whether some coupling moves all mass only along pairs whose distance
    power is at most the threshold; checked by max-flow."""
    n0, n1 = len(supply), len(demand)
    total = sum(supply)
    source = n0 + n1
    sink = source + 1
    edges: list[tuple[int, int, int]] = []
    for i, s in enumerate(supply):
        edges.append((source, i, s))
    for j, d in enumerate(demand):
        edges.append((n0 + j, sink, d))
    for i in range(n0):
        row = powers[i]
        for j in range(n1):
            if row[j] <= threshold:
                edges.append((i, n0 + j, total))
    return _max_flow(sink + 1, edges, source, sink) == total


def wasserstein_inf(mu0, mu1, metric: MetricSpec) -> Distance:
    """Smallest achievable worst-case ground distance over all couplings.

    The optimum is always one of the pairwise support distances, so we sort
    those and binary-search the least threshold at which a full transport
    plan exists.  Masses are scaled to a common integer grid first; the
    feasibility check is an integer max-flow.
    """
    s0, m0, d0 = _scaled_masses(mu0)
    s1, m1, d1 = _scaled_masses(mu1)
    # put both mass vectors on one grid so supplies and demands match
    common = d0 * d1 // gcd(d0, d1)
    supply = [m * (common // d0) for m in m0]
    demand = [m * (common // d1) for m in m1]

    p = metric.p if metric.kind == "lp" else None
    powers = [[ground_metric(metric, a, b).power for b in s1] for a in s0]
    candidates = sorted({q for row in powers for q in row})

    lo, hi = 0, len(candidates) - 1
    # the largest candidate is always feasible: complete bipartite transport
    while lo < hi:
        mid = (lo + hi) // 2
        if transport_feasible(powers, supply, demand, candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return Distance(candidates[lo], p if p is not None else 1)


# -- dispatch ----------------------------------------------------------------

@dataclass(frozen=True)
class DivergenceSpec:
    """Which divergence an indistinguishability bound uses: total variation,
    or the transport distance over the model's ground metric."""

    kind: str                       # "tv" | "winf"
    metric: MetricSpec | None = None

    def __post_init__(self) -> None:
        if self.kind == "tv":
            if self.metric is not None:
                raise ValueError("tv takes no ground metric")
        elif self.kind == "winf":
            if self.metric is None:
                raise ValueError("winf needs a ground metric")
        else:
            raise ValueError(f"unknown divergence kind {self.kind!r}")

    def render(self) -> str:
        return self.kind


def divergence(spec: DivergenceSpec, mu0, mu1):
    """Evaluate a divergence; returns a Fraction for tv and a Distance for
    the transport distance."""
    if spec.kind == "tv":
        return total_variation(mu0, mu1)
    assert spec.metric is not None
    return wasserstein_inf(mu0, mu1, spec.metric)


def within(value, bound: Fraction) -> bool:
    """value <= bound for either a Fraction or a Distance."""
    if isinstance(value, Distance):
        return value <= bound
    return Fraction(value) <= bound
