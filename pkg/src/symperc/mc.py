"""Monte Carlo estimation for graphs beyond the enumeration cap.

Randomness is counter-based: the open/closed state of edge e in sample i is
a pure function of (master seed, i, e), computed by two rounds of the
splitmix64 finalizer.  That makes every estimate bit-reproducible from the
seed alone, independent of chunking, scheduling, and of whether edges are
revealed lazily during cluster growth or drawn eagerly up front.

Verdicts about the domination margins are deliberately three-valued:
sampling cannot prove the inequality, so the vocabulary is CONSISTENT,
VIOLATION, or INCONCLUSIVE rather than a boolean.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

from .graphs import Graph
from .groups import VertexSetPair
from .rationals import parse_fraction

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

CONSISTENT = "CONSISTENT"
VIOLATION = "VIOLATION"
INCONCLUSIVE = "INCONCLUSIVE"

# A margin lives in [-1, 1]; intervals wider than this resolve nothing.
MAX_INFORMATIVE_HALF_WIDTH = 0.25

_ALLOWED_LEVELS = (0.95, 0.99)


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def unit_word(seed: int, sample_index: int, unit_index: int) -> int:
    """64-bit word for one (sample, unit) cell of one seed's stream."""
    h = _mix64((seed + (sample_index + 1) * _GOLDEN) & _MASK64)
    return _mix64((h + (unit_index + 1) * _GOLDEN) & _MASK64)


def open_threshold(p: Fraction) -> int:
    """Units are open iff their word falls below this 64-bit threshold."""
    p = parse_fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    return (p.numerator << 64) // p.denominator


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus the chunk layout used to schedule sampling.

    The layout only affects batching; results are a function of the seed and
    the sample count alone.
    """

    seed: int
    chunk_size: int = 1 << 14


@dataclass(frozen=True)
class McEstimate:
    n_samples: int
    estimate: float
    stderr: float
    level: float
    lo: float
    hi: float

    def to_json_dict(self, quantity: str, seed: int) -> dict:
        return {
            "quantity": quantity,
            "n": self.n_samples,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci": [self.lo, self.hi],
            "level": self.level,
            "seed": seed,
        }


@dataclass(frozen=True)
class EmpiricalJoint:
    """Sampled counterpart of the exact joint law: outcome -> sample count."""

    n_samples: int
    counts: dict[tuple[int, int], int]

    def __post_init__(self):
        if sum(self.counts.values()) != self.n_samples:
            raise ValueError("empirical counts do not sum to n_samples")
        if any(a < 1 for (a, _b) in self.counts):
            raise ValueError("the origin's cluster always meets v_plus")


def _z_value(level: float) -> float:
    if level not in _ALLOWED_LEVELS:
        raise ValueError(f"interval level must be one of {_ALLOWED_LEVELS}")
    return NormalDist().inv_cdf((1 + level) / 2)


def wilson_interval(hits: int, n: int, level: float) -> tuple[float, float]:
    """Wilson score interval for a Bernoulli proportion."""
    z = _z_value(level)
    phat = hits / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


# ---------------------------------------------------------------------------
# cluster sampling


def _incidence_indexed(g: Graph) -> list[tuple[tuple[int, int], ...]]:
    inc: list[list[tuple[int, int]]] = [[] for _ in range(g.n_vertices)]
    for idx, (u, v) in enumerate(g.edges):
        inc[u].append((v, idx))
        inc[v].append((u, idx))
    return [tuple(x) for x in inc]


def _sample_cluster_mask(inc, seed: int, sample_index: int, threshold: int,
                         o: int) -> int:
    """Grow the origin's cluster, revealing each edge's state on first
    contact only (the state is a pure function of the counter, so revealing
    order cannot matter)."""
    seen = 1 << o
    stack = [o]
    while stack:
        x = stack.pop()
        for w, eidx in inc[x]:
            wbit = 1 << w
            if seen & wbit:
                continue
            if unit_word(seed, sample_index, eidx) < threshold:
                seen |= wbit
                stack.append(w)
    return seen


def sample_cluster(g: Graph, o: int, p, seed: int,
                   sample_index: int = 0) -> tuple[int, ...]:
    """The origin's cluster for one sample of the edge process."""
    threshold = open_threshold(p)
    inc = _incidence_indexed(g)
    mask = _sample_cluster_mask(inc, seed, sample_index, threshold, o)
    return tuple(v for v in range(g.n_vertices) if mask >> v & 1)


def eager_cluster_mask(g: Graph, o: int, p, seed: int,
                       sample_index: int) -> int:
    """Test oracle: draw the full configuration first, then extract the
    cluster with the exact engine's traversal."""
    from .exact import _cluster_mask_bond, _incidence

    threshold = open_threshold(p)
    mask = 0
    for eidx in range(g.n_edges):
        if unit_word(seed, sample_index, eidx) < threshold:
            mask |= 1 << eidx
    return _cluster_mask_bond(_incidence(g), mask, o)


def _sample_chunk(args) -> dict:
    inc, seed, threshold, o, plus_mask, minus_mask, lo, hi = args
    counts: dict[tuple[int, int], int] = {}
    for i in range(lo, hi):
        cluster = _sample_cluster_mask(inc, seed, i, threshold, o)
        key = ((cluster & plus_mask).bit_count(),
               (cluster & minus_mask).bit_count())
        counts[key] = counts.get(key, 0) + 1
    return counts


def estimate_joint(g: Graph, pair: VertexSetPair, p, n: int, seed: int,
                   chunk_size: int | None = None,
                   threads: int = 1) -> EmpiricalJoint:
    """Bin n independent cluster samples by outcome.

    Chunk layout and threading only batch the work; sample i's outcome
    depends on (seed, i) alone, so any layout merges to the same counts.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    threshold = open_threshold(p)
    inc = _incidence_indexed(g)
    plus_mask = sum(1 << v for v in pair.v_plus)
    minus_mask = sum(1 << v for v in pair.v_minus)
    size = chunk_size or SeedSpec(seed).chunk_size
    jobs = [(inc, seed, threshold, pair.origin, plus_mask, minus_mask,
             lo, min(lo + size, n)) for lo in range(0, n, size)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(job) for job in jobs]
    counts: dict[tuple[int, int], int] = {}
    for part in parts:
        for key, cnt in part.items():
            counts[key] = counts.get(key, 0) + cnt
    return EmpiricalJoint(n_samples=n, counts=counts)


def estimate_connection(g: Graph, o: int, v: int, p, n: int, seed: int,
                        level: float = 0.95) -> McEstimate:
    """Wilson-interval estimate of the probability that v joins the
    origin's cluster."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    _z_value(level)
    if v == o:
        return McEstimate(n, 1.0, 0.0, level, 1.0, 1.0)
    threshold = open_threshold(p)
    inc = _incidence_indexed(g)
    vbit = 1 << v
    hits = 0
    for i in range(n):
        if _sample_cluster_mask(inc, seed, i, threshold, o) & vbit:
            hits += 1
    lo, hi = wilson_interval(hits, n, level)
    phat = hits / n
    stderr = math.sqrt(phat * (1 - phat) / n)
    return McEstimate(n, phat, stderr, level, lo, hi)


# ---------------------------------------------------------------------------
# summaries of an empirical joint


def empirical_expected_sizes(emp: EmpiricalJoint,
                             level: float = 0.95) -> tuple[McEstimate, McEstimate]:
    """Normal-approximation estimates of the two expected sizes."""
    z = _z_value(level)
    out = []
    n = emp.n_samples
    for coord in (0, 1):
        total = sum(key[coord] * cnt for key, cnt in emp.counts.items())
        total_sq = sum(key[coord] ** 2 * cnt for key, cnt in emp.counts.items())
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0)
        stderr = math.sqrt(var / (n - 1)) if n > 1 else 0.0
        out.append(McEstimate(n, mean, stderr, level,
                              mean - z * stderr, mean + z * stderr))
    return out[0], out[1]


def empirical_probability(emp: EmpiricalJoint, predicate,
                          level: float = 0.95) -> McEstimate:
    """Wilson estimate of P(predicate(a, b)) from the binned samples."""
    hits = sum(cnt for key, cnt in emp.counts.items() if predicate(*key))
    lo, hi = wilson_interval(hits, emp.n_samples, level)
    phat = hits / emp.n_samples
    stderr = math.sqrt(phat * (1 - phat) / emp.n_samples)
    return McEstimate(emp.n_samples, phat, stderr, level, lo, hi)


@dataclass(frozen=True)
class ThresholdVerdict:
    threshold: int
    margin: float
    lo: float
    hi: float
    verdict: str


@dataclass(frozen=True)
class DominationVerdict:
    rows: tuple[ThresholdVerdict, ...]
    level: float
    overall: str

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "overall": self.overall,
            "thresholds": [
                {"t": r.threshold, "margin": r.margin, "ci": [r.lo, r.hi],
                 "verdict": r.verdict}
                for r in self.rows
            ],
        }


def mc_domination_verdict(emp: EmpiricalJoint,
                          level: float = 0.95) -> DominationVerdict:
    """Per-threshold verdict on the tail margins.

    Margins are paired differences (both indicators from the same sample),
    with a Bonferroni union bound across thresholds so the stated level
    covers all of them jointly.  An interval entirely below zero is a
    VIOLATION; otherwise the verdict is CONSISTENT when the interval is
    narrow enough to be informative and INCONCLUSIVE when it is not.
    """
    if level not in _ALLOWED_LEVELS:
        raise ValueError(f"interval level must be one of {_ALLOWED_LEVELS}")
    n = emp.n_samples
    max_a = max((a for (a, _) in emp.counts), default=0)
    max_b = max((b for (_, b) in emp.counts), default=0)
    t_max = max(max_a, max_b, 1)
    alpha = (1 - level) / t_max
    z = NormalDist().inv_cdf(1 - alpha / 2)

    rows = []
    worst = CONSISTENT
    for t in range(1, t_max + 1):
        total = 0
        total_sq = 0
        for (a, b), cnt in emp.counts.items():
            d = (1 if a >= t else 0) - (1 if b >= t else 0)
            total += d * cnt
            total_sq += d * d * cnt
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0)
        stderr = math.sqrt(var / (n - 1)) if n > 1 else float("inf")
        half = z * stderr
        lo, hi = mean - half, mean + half
        if hi < 0:
            verdict = VIOLATION
        elif half <= MAX_INFORMATIVE_HALF_WIDTH:
            verdict = CONSISTENT
        else:
            verdict = INCONCLUSIVE
        rows.append(ThresholdVerdict(t, mean, lo, hi, verdict))
        if verdict == VIOLATION:
            worst = VIOLATION
        elif verdict == INCONCLUSIVE and worst != VIOLATION:
            worst = INCONCLUSIVE
    return DominationVerdict(rows=tuple(rows), level=level, overall=worst)
