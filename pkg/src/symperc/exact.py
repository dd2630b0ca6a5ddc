"""Exact joint law of the cluster intersection sizes by full enumeration.

The engine sweeps every configuration once and stores, for each outcome
(a, b) = (cluster size in v_plus, cluster size in v_minus), how many
configurations with k open units produce it.  That polynomial-in-p
representation is computed once per scenario and evaluated exactly (as
Fractions) at as many parameters as needed.

Configurations are bitmasks over the canonical unit order: edge k is bit k
for the bond and random-cluster laws, vertex k is bit k for the site law.
Everything in this module is exact: counts are Python integers,
probabilities are Fractions, and identity checks mean exact zero.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .graphs import Graph
from .groups import VertexSetPair
from .rationals import format_fraction, parse_fraction

EdgeConfig = int  # bitmask; bit k = unit k open

DEFAULT_CAP_BITS = 26

Pmf = dict[tuple[int, int], Fraction]


class CapExceeded(RuntimeError):
    """The configuration space is larger than the enumeration cap."""

    def __init__(self, units: int, cap_bits: int):
        super().__init__(
            f"enumeration needs 2^{units} configurations, cap is 2^{cap_bits}"
        )
        self.required_bits = units
        self.required_configs = 1 << units


# ---------------------------------------------------------------------------
# partition laws


@dataclass(frozen=True)
class PartitionLaw:
    """How a configuration is drawn and partitioned into clusters.

    * bond: edges open independently; clusters are components of the open
      subgraph.
    * site: vertices open independently; open vertices are partitioned by
      connectivity, closed vertices are singleton cells (so the origin's
      cluster is just the origin whenever it is closed).
    * random_cluster: edge configurations weighted by
      p^open (1-p)^closed q^(number of components, isolated vertices
      included), normalized over all configurations.
    """

    kind: str
    q: Fraction | None = None

    def __post_init__(self):
        if self.kind not in ("bond", "site", "random_cluster"):
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.kind == "random_cluster":
            if self.q is None or self.q <= 0:
                raise ValueError("random_cluster law needs q > 0")
        elif self.q is not None:
            raise ValueError(f"{self.kind} law takes no q")

    def to_json_dict(self) -> dict:
        if self.kind == "random_cluster":
            return {"kind": self.kind, "q": format_fraction(self.q)}
        return {"kind": self.kind}


BOND = PartitionLaw("bond")
SITE = PartitionLaw("site")


def random_cluster_law(q) -> PartitionLaw:
    return PartitionLaw("random_cluster", parse_fraction(q))


def parse_law(spec) -> PartitionLaw:
    """Parse "bond" | "site" | {"kind": "random_cluster", "q": "2"}."""
    if isinstance(spec, PartitionLaw):
        return spec
    if isinstance(spec, str):
        if spec == "bond":
            return BOND
        if spec == "site":
            return SITE
        if spec.startswith("rc:"):
            return random_cluster_law(spec[3:])
        raise ValueError(f"unknown law {spec!r}")
    if isinstance(spec, Mapping):
        kind = spec.get("kind")
        if kind == "random_cluster":
            return random_cluster_law(spec["q"])
        return parse_law(kind)
    raise ValueError(f"bad law spec: {spec!r}")


# ---------------------------------------------------------------------------
# the joint outcome polynomial


@dataclass(frozen=True)
class JointOutcomePolynomial:
    """Exact counts of configurations by outcome and open-unit number.

    ``counts[(a, b)]`` is the vector (n_0, ..., n_units) with n_k the number
    of configurations having k open units and outcome (a, b).  For the
    random-cluster law ``component_counts[(a, b)]`` additionally resolves
    each n_k by the number of partition cells, which is what the q-weighting
    needs at evaluation time.
    """

    units: int
    n_plus: int
    n_minus: int
    law: PartitionLaw
    counts: dict[tuple[int, int], tuple[int, ...]]
    component_counts: dict[tuple[int, int], dict[tuple[int, int], int]] | None = None

    def total_configs(self) -> int:
        return 1 << self.units

    def to_json_dict(self) -> dict:
        out = {
            "edges": self.units,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "law": self.law.to_json_dict(),
            "outcomes": [
                {"a": a, "b": b, "counts": list(vec)}
                for (a, b), vec in sorted(self.counts.items())
            ],
        }
        if self.component_counts is not None:
            out["component_counts"] = [
                {"a": a, "b": b, "k": k, "components": c, "count": cnt}
                for (a, b), sub in sorted(self.component_counts.items())
                for (k, c), cnt in sorted(sub.items())
            ]
        return out

    @staticmethod
    def from_json_dict(d: Mapping) -> "JointOutcomePolynomial":
        counts = {
            (int(o["a"]), int(o["b"])): tuple(int(x) for x in o["counts"])
            for o in d["outcomes"]
        }
        component_counts = None
        if "component_counts" in d:
            component_counts = {}
            for row in d["component_counts"]:
                key = (int(row["a"]), int(row["b"]))
                sub = component_counts.setdefault(key, {})
                sub[(int(row["k"]), int(row["components"]))] = int(row["count"])
        return JointOutcomePolynomial(
            units=int(d["edges"]),
            n_plus=int(d["n_plus"]),
            n_minus=int(d["n_minus"]),
            law=parse_law(d["law"]),
            counts=counts,
            component_counts=component_counts,
        )


# ---------------------------------------------------------------------------
# configuration sweeps (pure integer bit twiddling)


def _incidence(g: Graph) -> list[tuple[tuple[int, int], ...]]:
    """Per-vertex list of (neighbor, edge bit) pairs."""
    inc: list[list[tuple[int, int]]] = [[] for _ in range(g.n_vertices)]
    for idx, (u, v) in enumerate(g.edges):
        bit = 1 << idx
        inc[u].append((v, bit))
        inc[v].append((u, bit))
    return [tuple(x) for x in inc]


def _cluster_mask_bond(inc, mask: int, o: int) -> int:
    """Vertex bitmask of the origin's component in the open subgraph."""
    seen = 1 << o
    stack = [o]
    while stack:
        x = stack.pop()
        for w, ebit in inc[x]:
            if mask & ebit:
                wbit = 1 << w
                if not seen & wbit:
                    seen |= wbit
                    stack.append(w)
    return seen


def _component_count_bond(inc, mask: int, n: int) -> int:
    unseen = (1 << n) - 1
    count = 0
    while unseen:
        v = (unseen & -unseen).bit_length() - 1
        unseen &= ~_cluster_mask_bond(inc, mask, v)
        count += 1
    return count


def _cluster_mask_site(adjacency, open_mask: int, o: int) -> int:
    """Component of o among open vertices; o assumed open."""
    seen = 1 << o
    stack = [o]
    while stack:
        x = stack.pop()
        for w in adjacency[x]:
            wbit = 1 << w
            if open_mask & wbit and not seen & wbit:
                seen |= wbit
                stack.append(w)
    return seen


def _sweep_bond(args) -> dict:
    """Count configurations in [lo, hi) keyed by (a, b, k) or (a, b, k, c)."""
    inc, n, o, plus_mask, minus_mask, lo, hi, want_components = args
    counts: dict[tuple, int] = {}
    for mask in range(lo, hi):
        cluster = _cluster_mask_bond(inc, mask, o)
        a = (cluster & plus_mask).bit_count()
        b = (cluster & minus_mask).bit_count()
        k = mask.bit_count()
        if want_components:
            key = (a, b, k, _component_count_bond(inc, mask, n))
        else:
            key = (a, b, k)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _sweep_site(args) -> dict:
    adjacency, o, plus_mask, minus_mask, lo, hi = args
    obit = 1 << o
    counts: dict[tuple, int] = {}
    for mask in range(lo, hi):
        if mask & obit:
            cluster = _cluster_mask_site(adjacency, mask, o)
            a = (cluster & plus_mask).bit_count()
            b = (cluster & minus_mask).bit_count()
        else:
            a, b = 1, 0
        key = (a, b, mask.bit_count())
        counts[key] = counts.get(key, 0) + 1
    return counts


def _vertex_mask(vertices) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def _chunk_ranges(total: int, chunks: int) -> list[tuple[int, int]]:
    chunks = max(1, min(chunks, total))
    step = total // chunks
    bounds = [i * step for i in range(chunks)] + [total]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks)]


def _run_sweeps(fn, jobs, threads: int) -> dict:
    """Run sweep jobs over disjoint mask ranges and merge by addition.

    The merge is commutative integer addition, so the result is identical to
    the single-range sweep no matter how the ranges are scheduled.
    """
    merged: dict[tuple, int] = {}
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(job) for job in jobs]
    for part in results:
        for key, cnt in part.items():
            merged[key] = merged.get(key, 0) + cnt
    return merged


def enumerate_joint(
    g: Graph,
    pair: VertexSetPair,
    law: PartitionLaw = BOND,
    cap_bits: int = DEFAULT_CAP_BITS,
    chunks: int = 1,
    threads: int = 1,
) -> JointOutcomePolynomial:
    """Sweep all configurations and collect the exact outcome counts.

    Independent of p: the counts are binned by the number of open units, so
    one sweep serves every parameter value.
    """
    if law.kind == "site":
        units = g.n_vertices
    else:
        units = g.n_edges
    if units > cap_bits:
        raise CapExceeded(units, cap_bits)

    plus_mask = _vertex_mask(pair.v_plus)
    minus_mask = _vertex_mask(pair.v_minus)
    if threads > 1 and chunks == 1:
        chunks = threads * 4  # merge is addition, so any chunking is exact
    ranges = _chunk_ranges(1 << units, chunks)

    if law.kind == "site":
        jobs = [(list(g.adjacency), pair.origin, plus_mask, minus_mask, lo, hi)
                for lo, hi in ranges]
        raw = _run_sweeps(_sweep_site, jobs, threads)
    else:
        want_components = law.kind == "random_cluster"
        inc = _incidence(g)
        jobs = [(inc, g.n_vertices, pair.origin, plus_mask, minus_mask,
                 lo, hi, want_components) for lo, hi in ranges]
        raw = _run_sweeps(_sweep_bond, jobs, threads)

    counts: dict[tuple[int, int], list[int]] = {}
    component_counts: dict[tuple[int, int], dict[tuple[int, int], int]] | None = None
    if law.kind == "random_cluster":
        component_counts = {}
        for (a, b, k, c), cnt in raw.items():
            vec = counts.setdefault((a, b), [0] * (units + 1))
            vec[k] += cnt
            component_counts.setdefault((a, b), {})
            key = (k, c)
            sub = component_counts[(a, b)]
            sub[key] = sub.get(key, 0) + cnt
    else:
        for (a, b, k), cnt in raw.items():
            vec = counts.setdefault((a, b), [0] * (units + 1))
            vec[k] += cnt

    poly = JointOutcomePolynomial(
        units=units,
        n_plus=len(pair.v_plus),
        n_minus=len(pair.v_minus),
        law=law,
        counts={key: tuple(vec) for key, vec in sorted(counts.items())},
        component_counts=component_counts,
    )
    _check_count_conservation(poly)
    return poly


def _check_count_conservation(poly: JointOutcomePolynomial) -> None:
    # Every configuration lands in exactly one outcome bin.
    for k in range(poly.units + 1):
        total = sum(vec[k] for vec in poly.counts.values())
        if total != comb(poly.units, k):
            raise RuntimeError(
                f"count conservation broken at k={k}: {total} != "
                f"{comb(poly.units, k)}"
            )
    for (a, b), vec in poly.counts.items():
        if sum(vec) > 0 and a < 1:
            raise RuntimeError("outcome with empty origin cluster observed")


# ---------------------------------------------------------------------------
# evaluation and the exact checks


def _powers(x: Fraction, top: int) -> list[Fraction]:
    out = [Fraction(1)]
    for _ in range(top):
        out.append(out[-1] * x)
    return out


def eval_joint(poly: JointOutcomePolynomial, p,
               law: PartitionLaw | None = None) -> Pmf:
    """Exact probability of each outcome at parameter p (sums to 1)."""
    p = parse_fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    law = poly.law if law is None else law
    units = poly.units
    pk = _powers(p, units)
    qk = _powers(1 - p, units)

    pmf: Pmf = {}
    if law.kind == "random_cluster":
        if poly.component_counts is None:
            raise ValueError("polynomial lacks component counts for this law")
        q = law.q
        weights: dict[tuple[int, int], Fraction] = {}
        total = Fraction(0)
        for key, sub in poly.component_counts.items():
            w = Fraction(0)
            for (k, c), cnt in sub.items():
                w += cnt * pk[k] * qk[units - k] * q**c
            weights[key] = w
            total += w
        for key, w in weights.items():
            pmf[key] = w / total
    else:
        for key, vec in poly.counts.items():
            prob = Fraction(0)
            for k, cnt in enumerate(vec):
                if cnt:
                    prob += cnt * pk[k] * qk[units - k]
            pmf[key] = prob
    if sum(pmf.values()) != 1:
        raise RuntimeError("pmf does not sum to exactly 1")
    return pmf


def expected_sizes(pmf: Pmf) -> tuple[Fraction, Fraction]:
    """Exact expectations of the two intersection sizes."""
    e_plus = sum((prob * a for (a, _), prob in pmf.items()), Fraction(0))
    e_minus = sum((prob * b for (_, b), prob in pmf.items()), Fraction(0))
    return e_plus, e_minus


@dataclass(frozen=True)
class DominationReport:
    """Exact tail margins P(a >= t) - P(b >= t) for every threshold."""

    margins: tuple[tuple[int, Fraction], ...]
    passes: bool
    trivial_minus: bool  # the support never touches v_minus (empty set)

    def min_margin(self) -> Fraction:
        return min((m for _, m in self.margins), default=Fraction(0))

    def to_json_dict(self) -> dict:
        return {
            "margins": {str(t): format_fraction(m) for t, m in self.margins},
            "passes": self.passes,
            "trivial_minus": self.trivial_minus,
        }


def check_domination(pmf: Pmf) -> DominationReport:
    """Compare the two tail distributions at every threshold.

    Threshold indicators generate all bounded increasing functions, so
    nonnegative margins at every t are equivalent to stochastic domination.
    A negative margin is reported as-is; nothing is clamped.
    """
    max_a = max((a for (a, _) in pmf), default=0)
    max_b = max((b for (_, b) in pmf), default=0)
    t_max = max(max_a, max_b, 1)
    margins = []
    for t in range(1, t_max + 1):
        tail_a = sum((prob for (a, _), prob in pmf.items() if a >= t), Fraction(0))
        tail_b = sum((prob for (_, b), prob in pmf.items() if b >= t), Fraction(0))
        margins.append((t, tail_a - tail_b))
    return DominationReport(
        margins=tuple(margins),
        passes=all(m >= 0 for _, m in margins),
        trivial_minus=max_b == 0,
    )


TestFunction = tuple[str, Callable[[int], Fraction | int]]


def default_test_functions(pmf: Pmf) -> list[TestFunction]:
    """Threshold indicators for t = 1..(n_plus + n_minus) plus n and n^2."""
    t_max = max((a + b for (a, b) in pmf), default=1)
    fns: list[TestFunction] = []
    for t in range(1, t_max + 1):
        fns.append((f"ind_ge_{t}", lambda n, t=t: 1 if n >= t else 0))
    fns.append(("identity", lambda n: n))
    fns.append(("square", lambda n: n * n))
    return fns


def check_partition_identity(pmf: Pmf,
                             f_family: Sequence[TestFunction] | None = None,
                             ) -> dict[str, Fraction]:
    """Residual of the reweighting identity for each test function.

    Both sides are exact expectations; under the symmetry conditions the
    residual is exactly 0 for every bounded f.  The denominator a + b never
    vanishes because the origin's cluster always meets v_plus.
    """
    if f_family is None:
        f_family = default_test_functions(pmf)
    residuals: dict[str, Fraction] = {}
    for name, f in f_family:
        lhs = Fraction(0)
        rhs = Fraction(0)
        for (a, b), prob in pmf.items():
            if prob == 0:
                continue
            diff = Fraction(f(a)) - Fraction(f(b))
            lhs += prob * diff
            rhs += prob * diff * Fraction(a - b, a + b)
        residuals[name] = lhs - rhs
    return residuals


def check_ratio_identity(pmf: Pmf) -> tuple[Fraction, Fraction]:
    """Both sides of the ratio identity: E(b/a) and P(b > 0)."""
    lhs = sum((prob * Fraction(b, a) for (a, b), prob in pmf.items()),
              Fraction(0))
    rhs = sum((prob for (_, b), prob in pmf.items() if b > 0), Fraction(0))
    return lhs, rhs


# ---------------------------------------------------------------------------
# connection probabilities


def connection_counts(g: Graph, o: int,
                      targets: Sequence[int] | None = None,
                      cap_bits: int = DEFAULT_CAP_BITS,
                      ) -> dict[int, tuple[int, ...]]:
    """Per-target counts of configurations (by open-edge number) in which the
    target sits in the origin's cluster.  One sweep serves all targets."""
    units = g.n_edges
    if units > cap_bits:
        raise CapExceeded(units, cap_bits)
    if targets is None:
        targets = list(range(g.n_vertices))
    inc = _incidence(g)
    tvec = {v: [0] * (units + 1) for v in targets}
    tmasks = [(v, 1 << v) for v in targets]
    for mask in range(1 << units):
        cluster = _cluster_mask_bond(inc, mask, o)
        k = mask.bit_count()
        for v, vbit in tmasks:
            if cluster & vbit:
                tvec[v][k] += 1
    return {v: tuple(vec) for v, vec in tvec.items()}


def eval_counts(vec: Sequence[int], units: int, p) -> Fraction:
    """Evaluate a count vector as an exact probability at p."""
    p = parse_fraction(p)
    pk = _powers(p, units)
    qk = _powers(1 - p, units)
    return sum((cnt * pk[k] * qk[units - k] for k, cnt in enumerate(vec) if cnt),
               Fraction(0))


def connection_probability(g: Graph, o: int, v: int, p,
                           cap_bits: int = DEFAULT_CAP_BITS) -> Fraction:
    """Exact probability that v lies in the origin's cluster."""
    vec = connection_counts(g, o, [v], cap_bits)[v]
    return eval_counts(vec, g.n_edges, p)
