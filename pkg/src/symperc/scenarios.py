"""Scenario harnesses: assemble a graph, the two vertex sets and a symmetry
group, run the condition check, then drive the exact or Monte Carlo pipeline
and evaluate the scenario-specific inequalities.

Reports are plain JSON-ready dicts sharing one envelope, with every exact
quantity as a "num/den" string and every Monte Carlo quantity as an estimate
record with its confidence interval.
"""

from __future__ import annotations

import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from . import exact, graphs, groups, mc
from .exact import BOND, PartitionLaw, parse_law
from .graphs import Graph, build_graph
from .groups import Perm, PermGroup, VertexSetPair
from .rationals import format_fraction, parse_probability

SCHEMA = "symperc-report/1"

PASS = "pass"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"
PRECONDITION_FAILED = "precondition_failed"

_MC_VERDICT = {
    mc.CONSISTENT: PASS,
    mc.VIOLATION: VIOLATION,
    mc.INCONCLUSIVE: INCONCLUSIVE,
}

_SEVERITY = {PASS: 0, INCONCLUSIVE: 1, VIOLATION: 2, PRECONDITION_FAILED: 3}


class ScenarioError(ValueError):
    """Unsatisfied scenario precondition (divisibility, unknown relation)."""


class ScenarioFormatError(ScenarioError):
    """Unreadable or malformed scenario input (a usage error at the CLI)."""


def worst_verdict(verdicts) -> str:
    out = PASS
    for v in verdicts:
        if _SEVERITY[v] > _SEVERITY[out]:
            out = v
    return out


# ---------------------------------------------------------------------------
# scenario documents


@dataclass(frozen=True)
class Scenario:
    name: str
    graph_spec: dict
    v_plus: tuple
    v_minus: tuple
    origin: object
    generators: tuple
    law: PartitionLaw
    p_grid: tuple[Fraction, ...]
    mode: str
    mc_n: int
    mc_seed: int
    cap_bits: int


def parse_scenario(doc: Mapping, name: str = "scenario") -> Scenario:
    try:
        graph_spec = dict(doc["graph"])
        v_plus = tuple(doc["v_plus"])
        v_minus = tuple(doc["v_minus"])
        origin = doc["origin"]
    except (KeyError, TypeError) as exc:
        raise ScenarioFormatError(f"scenario misses required field: {exc}") from None
    mode = doc.get("mode", "exact")
    if mode not in ("exact", "mc"):
        raise ScenarioFormatError(f"mode must be 'exact' or 'mc', got {mode!r}")
    law = parse_law(doc.get("law", "bond"))
    if mode == "mc" and law.kind != "bond":
        raise ScenarioFormatError("mc mode samples bond percolation only")
    p_grid = tuple(parse_probability(p) for p in doc.get("p_grid", ["1/2"]))
    if not p_grid:
        raise ScenarioFormatError("p_grid must not be empty")
    mc_doc = doc.get("mc", {})
    return Scenario(
        name=doc.get("name", name),
        graph_spec=graph_spec,
        v_plus=v_plus,
        v_minus=v_minus,
        origin=origin,
        generators=tuple(doc.get("generators", [])),
        law=law,
        p_grid=p_grid,
        mode=mode,
        mc_n=int(mc_doc.get("n", 100_000)),
        mc_seed=int(mc_doc.get("seed", 0)),
        cap_bits=int(doc.get("cap_bits", exact.DEFAULT_CAP_BITS)),
    )


def resolve_vertex(g: Graph, item) -> int:
    """A scenario may reference vertices by index or by coordinate label."""
    if isinstance(item, int):
        if not 0 <= item < g.n_vertices:
            raise ScenarioFormatError(f"vertex index {item} out of range")
        return item
    if isinstance(item, (list, tuple)):
        return g.index_of(tuple(int(x) for x in item))
    raise ScenarioFormatError(f"bad vertex reference: {item!r}")


def _materialize(sc: Scenario) -> tuple[Graph, VertexSetPair, PermGroup]:
    g = build_graph(sc.graph_spec)
    pair = groups.make_pair(
        g,
        [resolve_vertex(g, v) for v in sc.v_plus],
        [resolve_vertex(g, v) for v in sc.v_minus],
        resolve_vertex(g, sc.origin),
    )
    gens = [build_generator_spec(g, spec) for spec in sc.generators]
    grp = groups.generate_group(gens, n_points=g.n_vertices)
    return g, pair, grp


def build_generator_spec(g: Graph, spec) -> Perm:
    """Generator spec resolution, extended with {"name": "compose",
    "of": [...]} applying the listed specs right-to-left."""
    if isinstance(spec, Mapping) and spec.get("name") == "compose":
        parts = [build_generator_spec(g, s) for s in spec["of"]]
        if not parts:
            raise groups.GroupError("compose needs at least one part")
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = groups.compose(part, out)
        return out
    return groups.build_generator(g, spec)


# ---------------------------------------------------------------------------
# pipeline pieces shared by every report


def exact_p_results(
    poly: exact.JointOutcomePolynomial,
    p_grid: Sequence[Fraction],
    theorem_instance: bool,
) -> tuple[list[dict], str]:
    """Evaluate the polynomial on the grid and run the exact checks.

    When the symmetry conditions hold the verdict folds in the identity
    residuals and the expectation ordering; otherwise those fields are
    informational and only a negative margin counts as a violation.
    """
    results = []
    verdicts = []
    for p in p_grid:
        pmf = exact.eval_joint(poly, p)
        e_plus, e_minus = exact.expected_sizes(pmf)
        dom = exact.check_domination(pmf)
        residuals = exact.check_partition_identity(pmf)
        ratio_lhs, ratio_rhs = exact.check_ratio_identity(pmf)
        identity_zero = all(r == 0 for r in residuals.values())
        ratio_equal = ratio_lhs == ratio_rhs
        if theorem_instance:
            ok = (dom.passes and identity_zero and ratio_equal
                  and e_plus >= e_minus)
        else:
            ok = dom.passes
        verdict = PASS if ok else VIOLATION
        verdicts.append(verdict)
        results.append({
            "p": format_fraction(p),
            "expected_plus": format_fraction(e_plus),
            "expected_minus": format_fraction(e_minus),
            "expectation_gap": format_fraction(e_plus - e_minus),
            "domination": dom.to_json_dict(),
            "identity_residuals": {k: format_fraction(v)
                                   for k, v in residuals.items()},
            "identity_zero": identity_zero,
            "ratio_lhs": format_fraction(ratio_lhs),
            "ratio_rhs": format_fraction(ratio_rhs),
            "ratio_equal": ratio_equal,
            "verdict": verdict,
        })
    return results, worst_verdict(verdicts)


def mc_p_results(
    g: Graph,
    pair: VertexSetPair,
    p_grid: Sequence[Fraction],
    n: int,
    seed: int,
    level: float = 0.95,
    threads: int = 1,
) -> tuple[list[dict], str]:
    results = []
    verdicts = []
    for p in p_grid:
        emp = mc.estimate_joint(g, pair, p, n, seed, threads=threads)
        est_plus, est_minus = mc.empirical_expected_sizes(emp, level)
        dom = mc.mc_domination_verdict(emp, level)
        verdict = _MC_VERDICT[dom.overall]
        verdicts.append(verdict)
        results.append({
            "p": format_fraction(p),
            "expected_plus": est_plus.to_json_dict("expected_plus", seed),
            "expected_minus": est_minus.to_json_dict("expected_minus", seed),
            "domination": dom.to_json_dict(),
            "verdict": verdict,
        })
    return results, worst_verdict(verdicts)


def _envelope(kind: str, scenario_echo: dict, mode: str, verdict: str,
              started: float, **extra) -> dict:
    report = {
        "schema": SCHEMA,
        "kind": kind,
        "scenario": scenario_echo,
        "mode": mode,
        "verdict": verdict,
        "elapsed_seconds": round(time.perf_counter() - started, 6),
    }
    report.update(extra)
    return report


def run_scenario(sc: Scenario, threads: int = 1, level: float = 0.95,
                 require_conditions: bool = False) -> dict:
    """Full pipeline for one scenario document.

    ``require_conditions`` aborts after a failed symmetry check (used by the
    report subcommands that claim a theorem instance); otherwise the pipeline
    continues and the report simply records that no instance is claimed.
    """
    started = time.perf_counter()
    g, pair, grp = _materialize(sc)
    conditions = groups.check_symmetry_conditions(g, grp, pair)
    echo = scenario_echo(sc)
    if require_conditions and not conditions.ok:
        return _envelope("scenario", echo, sc.mode, PRECONDITION_FAILED,
                         started, conditions=conditions.to_json_dict(),
                         results=[])
    if sc.mode == "exact":
        poly = exact.enumerate_joint(g, pair, sc.law, cap_bits=sc.cap_bits,
                                     threads=threads)
        results, verdict = exact_p_results(poly, sc.p_grid, conditions.ok)
        extra = {
            "config_count": poly.total_configs(),
            "polynomial": poly.to_json_dict(),
        }
    else:
        results, verdict = mc_p_results(g, pair, sc.p_grid, sc.mc_n,
                                        sc.mc_seed, level, threads)
        extra = {"mc": {"n": sc.mc_n, "seed": sc.mc_seed, "level": level}}
    return _envelope("scenario", echo, sc.mode, verdict, started,
                     conditions=conditions.to_json_dict(),
                     theorem_instance=conditions.ok,
                     law=sc.law.to_json_dict(),
                     results=results, **extra)


def scenario_echo(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "graph": sc.graph_spec,
        "v_plus": list(sc.v_plus),
        "v_minus": list(sc.v_minus),
        "origin": sc.origin,
        "generators": list(sc.generators),
        "law": sc.law.to_json_dict(),
        "p_grid": [format_fraction(p) for p in sc.p_grid],
        "mode": sc.mode,
    }


def check_symmetry_report(sc: Scenario) -> dict:
    started = time.perf_counter()
    g, pair, grp = _materialize(sc)
    conditions = groups.check_symmetry_conditions(g, grp, pair)
    verdict = PASS if conditions.ok else PRECONDITION_FAILED
    return _envelope("check-symmetry", scenario_echo(sc), sc.mode, verdict,
                     started, conditions=conditions.to_json_dict())


def verify_identity_report(sc: Scenario, threads: int = 1) -> dict:
    """Exact identity residuals and the ratio identity; the symmetry
    conditions are a precondition here, not an optional extra."""
    started = time.perf_counter()
    g, pair, grp = _materialize(sc)
    conditions = groups.check_symmetry_conditions(g, grp, pair)
    echo = scenario_echo(sc)
    if not conditions.ok:
        return _envelope("verify-identity", echo, "exact",
                         PRECONDITION_FAILED, started,
                         conditions=conditions.to_json_dict(), results=[])
    poly = exact.enumerate_joint(g, pair, sc.law, cap_bits=sc.cap_bits,
                                 threads=threads)
    results = []
    verdicts = []
    for p in sc.p_grid:
        pmf = exact.eval_joint(poly, p)
        residuals = exact.check_partition_identity(pmf)
        lhs, rhs = exact.check_ratio_identity(pmf)
        ok = all(r == 0 for r in residuals.values()) and lhs == rhs
        verdicts.append(PASS if ok else VIOLATION)
        results.append({
            "p": format_fraction(p),
            "identity_residuals": {k: format_fraction(v)
                                   for k, v in residuals.items()},
            "ratio_lhs": format_fraction(lhs),
            "ratio_rhs": format_fraction(rhs),
            "exact_zero": ok,
            "verdict": verdicts[-1],
        })
    return _envelope("verify-identity", echo, "exact",
                     worst_verdict(verdicts), started,
                     conditions=conditions.to_json_dict(),
                     law=sc.law.to_json_dict(),
                     config_count=poly.total_configs(), results=results)


# ---------------------------------------------------------------------------
# built-in base symmetries


def base_generator_perms(base_spec: Mapping, base: Graph) -> list[Perm]:
    """Vertex-transitive generator sets for the named builders.

    For bases that are not vertex-transitive (paths beyond two vertices,
    explicit graphs without supplied generators) the returned set is the
    best available; the condition check downstream reports the failure.
    """
    builder = base_spec.get("builder")
    n = base.n_vertices
    if builder == "path":
        if n == 1:
            return []
        if n == 2:
            return [(1, 0)]
        return [tuple(n - 1 - i for i in range(n))]
    if builder == "cycle":
        return [
            tuple((i + 1) % n for i in range(n)),
            tuple((n - i) % n for i in range(n)),
        ]
    if builder == "complete":
        if n == 1:
            return []
        swap01 = tuple([1, 0] + list(range(2, n)))
        cyc = tuple((i + 1) % n for i in range(n))
        return [swap01, cyc]
    if builder == "hypercube":
        d = int(base_spec["d"])
        gens = [groups.axis_reflection(base, axis=i, center2=1)
                for i in range(d)]
        gens += [groups.swap_axes(base, i, i + 1) for i in range(d - 1)]
        return gens
    if builder == "torus":
        gens = [
            groups.axis_rotation(base, 0), groups.axis_rotation(base, 1),
            groups.axis_reflection(base, 0), groups.axis_reflection(base, 1),
        ]
        if int(base_spec["n"]) == int(base_spec["m"]):
            gens.append(groups.swap_axes(base, 0, 1))
        return gens
    if builder == "bunkbed":
        inner = build_graph(base_spec["base"])
        lifted = [groups.lift_first_factor(p, 2)
                  for p in base_generator_perms(base_spec["base"], inner)]
        return lifted + [groups.layer_swap(base)]
    if builder == "cylinder":
        inner = build_graph(base_spec["base"])
        m = int(base_spec["m"])
        lifted = [groups.lift_first_factor(p, m)
                  for p in base_generator_perms(base_spec["base"], inner)]
        axis = len(base.labels[0]) - 1
        return lifted + [groups.axis_rotation(base, axis),
                         groups.axis_reflection(base, axis)]
    return []


# ---------------------------------------------------------------------------
# scenario harness: bunkbed


def bunkbed_report(
    base_spec: Mapping,
    p_grid: Sequence,
    mode: str = "exact",
    law: PartitionLaw = BOND,
    cap_bits: int = exact.DEFAULT_CAP_BITS,
    mc_n: int = 100_000,
    mc_seed: int = 0,
    level: float = 0.95,
    threads: int = 1,
) -> dict:
    """Two stacked copies of the base: compare the origin's layer with the
    other layer.  Full pipeline (symmetry check, domination, expectations,
    identity residuals); halts with a diagnostic when the base symmetries do
    not act transitively."""
    started = time.perf_counter()
    base = build_graph(base_spec)
    g = graphs.bunkbed_graph(base)
    v_plus = [i * 2 for i in range(base.n_vertices)]
    v_minus = [i * 2 + 1 for i in range(base.n_vertices)]
    pair = groups.make_pair(g, v_plus, v_minus, origin=0)
    gens = [groups.lift_first_factor(p, 2)
            for p in base_generator_perms(base_spec, base)]
    gens.append(groups.layer_swap(g))
    grp = groups.generate_group(gens, n_points=g.n_vertices)
    conditions = groups.check_symmetry_conditions(g, grp, pair)
    p_grid = [parse_probability(p) for p in p_grid]
    echo = {
        "name": "bunkbed",
        "base": dict(base_spec),
        "v_plus": "base x {0}",
        "v_minus": "base x {1}",
        "origin": 0,
        "p_grid": [format_fraction(p) for p in p_grid],
    }
    if not conditions.ok:
        return _envelope("bunkbed", echo, mode, PRECONDITION_FAILED, started,
                         conditions=conditions.to_json_dict(), results=[])
    if mode == "exact":
        poly = exact.enumerate_joint(g, pair, law, cap_bits=cap_bits,
                                     threads=threads)
        results, verdict = exact_p_results(poly, p_grid, True)
        extra = {"config_count": poly.total_configs()}
    else:
        results, verdict = mc_p_results(g, pair, p_grid, mc_n, mc_seed,
                                        level, threads)
        extra = {"mc": {"n": mc_n, "seed": mc_seed, "level": level}}
    return _envelope("bunkbed", echo, mode, verdict, started,
                     conditions=conditions.to_json_dict(),
                     law=law.to_json_dict(), results=results, **extra)


# ---------------------------------------------------------------------------
# scenario harness: layered graphs realized on cylinders


def _layer_classes(m: int, choice: str, k: int, period: int | None,
                   ) -> tuple[list[int], list[int]]:
    if choice == "a":
        if not 0 < k <= m // 2 or 2 * k > m:
            raise ScenarioError(f"choice a needs 0 < k <= m/2, got k={k}, m={m}")
        return [0], [k]
    if choice == "b":
        if period is None or period < 2:
            raise ScenarioError("choice b needs a period n >= 2")
        if m % period != 0:
            raise ScenarioError(f"choice b needs n | m, got n={period}, m={m}")
        if not 1 <= k < period:
            raise ScenarioError(f"choice b needs 1 <= k < n, got k={k}")
        return ([l for l in range(m) if l % period == 0],
                [l for l in range(m) if l % period == k])
    if choice == "c":
        if period is None or period < 1:
            raise ScenarioError("choice c needs a period n >= 1")
        if m % (2 * period) != 0:
            raise ScenarioError(
                f"choice c needs 2n | m, got n={period}, m={m}")
        if not 0 < k < 2 * period or k == period:
            raise ScenarioError(
                f"choice c needs 0 < k < 2n with k != n, got k={k}")
        plus = {0, k}
        minus = {period % (2 * period), (period + k) % (2 * period)}
        return ([l for l in range(m) if l % (2 * period) in plus],
                [l for l in range(m) if l % (2 * period) in minus])
    raise ScenarioError(f"choice must be one of a, b, c; got {choice!r}")


def layered_report(
    base_spec: Mapping,
    m: int,
    choice: str,
    k: int,
    period: int | None = None,
    p_grid: Sequence = ("1/2",),
    mode: str = "exact",
    cap_bits: int = exact.DEFAULT_CAP_BITS,
    mc_n: int = 100_000,
    mc_seed: int = 0,
    level: float = 0.95,
    threads: int = 1,
) -> dict:
    """Residue-class layer comparison on the cylinder base x cycle(m).

    choice a compares layer 0 with layer k, choice b compares the residue
    classes 0 and k mod n, choice c compares {0, k} with {n, n+k} mod 2n.
    Rotations by the pattern period and the reflection through k/2 provide
    the symmetries on the cycle coordinate.
    """
    started = time.perf_counter()
    base = build_graph(base_spec)
    g = graphs.cylinder_graph(base, m)
    plus_layers, minus_layers = _layer_classes(m, choice, k, period)
    v_plus = [b * m + l for b in range(base.n_vertices) for l in plus_layers]
    v_minus = [b * m + l for b in range(base.n_vertices) for l in minus_layers]
    pair = groups.make_pair(g, v_plus, v_minus, origin=0)

    gens = [groups.lift_first_factor(p, m)
            for p in base_generator_perms(base_spec, base)]
    axis = len(g.labels[0]) - 1
    gens.append(groups.axis_reflection(g, axis, center2=k))
    if choice in ("b", "c"):
        gens.append(groups.axis_rotation(g, axis, step=period))
    grp = groups.generate_group(gens, n_points=g.n_vertices)
    conditions = groups.check_symmetry_conditions(g, grp, pair)
    p_grid = [parse_probability(p) for p in p_grid]
    echo = {
        "name": "layered",
        "base": dict(base_spec),
        "m": m,
        "choice": choice,
        "k": k,
        "period": period,
        "plus_layers": plus_layers,
        "minus_layers": minus_layers,
        "p_grid": [format_fraction(p) for p in p_grid],
    }
    if not conditions.ok:
        return _envelope("layered", echo, mode, PRECONDITION_FAILED, started,
                         conditions=conditions.to_json_dict(), results=[])
    if mode == "exact":
        poly = exact.enumerate_joint(g, pair, BOND, cap_bits=cap_bits,
                                     threads=threads)
        results, verdict = exact_p_results(poly, p_grid, True)
        extra = {"config_count": poly.total_configs()}
    else:
        results, verdict = mc_p_results(g, pair, p_grid, mc_n, mc_seed,
                                        level, threads)
        extra = {"mc": {"n": mc_n, "seed": mc_seed, "level": level}}
    return _envelope("layered", echo, mode, verdict, started,
                     conditions=conditions.to_json_dict(),
                     law=BOND.to_json_dict(), results=results, **extra)


# ---------------------------------------------------------------------------
# scenario harness: square-lattice relations on tori


def _z2_relations(g: Graph, size: int) -> list[dict]:
    diag = groups.swap_axes(g, 0, 1)
    refl_x1 = groups.axis_reflection(g, 0, center2=1)
    refl_x2 = groups.axis_reflection(g, 0, center2=2)
    # reflection across the diagonal through (1, 0): (x, y) -> (y + 1, x - 1)
    diag_shifted = groups.compose(
        groups.axis_rotation(g, 0, 1),
        groups.compose(groups.axis_rotation(g, 1, -1), diag),
    )
    return [
        {
            "name": "relation-1",
            "statement": "1 + c(1,1) >= 2 c(1,0)",
            "v_plus": [(0, 0), (1, 1)],
            "v_minus": [(1, 0), (0, 1)],
            "gens": [diag, refl_x1],
            "c_plus": (1, 1),
            "c_minus": (1, 0),
        },
        {
            "name": "relation-2",
            "statement": "1 + c(2,0) >= 2 c(1,1)",
            "v_plus": [(0, 0), (2, 0)],
            "v_minus": [(1, 1), (1, size - 1)],
            "gens": [refl_x2, diag_shifted],
            "c_plus": (2, 0),
            "c_minus": (1, 1),
        },
    ]


def z2_relation_report(
    size: int,
    p_grid: Sequence = ("1/2",),
    mode: str = "exact",
    cap_bits: int = exact.DEFAULT_CAP_BITS,
    mc_n: int = 100_000,
    mc_seed: int = 0,
    level: float = 0.95,
    threads: int = 1,
) -> dict:
    """Connection-probability relations of the square lattice, realized on
    the size x size torus.  Results are torus statements; growing the torus
    provides evidence toward, not proof of, the planar statement."""
    started = time.perf_counter()
    if size < 3:
        raise ScenarioError(f"torus size must be >= 3, got {size}")
    g = graphs.torus_graph(size, size)
    p_grid = [parse_probability(p) for p in p_grid]
    relations = []
    verdicts = []
    for rel in _z2_relations(g, size):
        pair = groups.make_pair(
            g,
            [g.index_of(lab) for lab in rel["v_plus"]],
            [g.index_of(lab) for lab in rel["v_minus"]],
            origin=g.index_of((0, 0)),
        )
        grp = groups.generate_group(rel["gens"], n_points=g.n_vertices)
        conditions = groups.check_symmetry_conditions(g, grp, pair)
        entry = {
            "name": rel["name"],
            "statement": rel["statement"],
            "v_plus": [list(lab) for lab in rel["v_plus"]],
            "v_minus": [list(lab) for lab in rel["v_minus"]],
            "conditions": conditions.to_json_dict(),
        }
        if not conditions.ok:
            entry["verdict"] = PRECONDITION_FAILED
            entry["results"] = []
            verdicts.append(PRECONDITION_FAILED)
            relations.append(entry)
            continue
        if mode == "exact":
            poly = exact.enumerate_joint(g, pair, BOND, cap_bits=cap_bits,
                                         threads=threads)
            results, verdict = exact_p_results(poly, p_grid, True)
            targets = {
                "c_plus": g.index_of(rel["c_plus"]),
                "c_minus": g.index_of(rel["c_minus"]),
            }
            counts = exact.connection_counts(
                g, pair.origin, list(targets.values()), cap_bits)
            for row, p in zip(results, p_grid):
                c_far = exact.eval_counts(counts[targets["c_plus"]],
                                          g.n_edges, p)
                c_near = exact.eval_counts(counts[targets["c_minus"]],
                                           g.n_edges, p)
                row["c_far"] = format_fraction(c_far)
                row["c_near"] = format_fraction(c_near)
                row["relation_slack"] = format_fraction(1 + c_far - 2 * c_near)
            entry["config_count"] = poly.total_configs()
        else:
            results, verdict = mc_p_results(g, pair, p_grid, mc_n, mc_seed,
                                            level, threads)
        entry["results"] = results
        entry["verdict"] = verdict
        verdicts.append(verdict)
        relations.append(entry)
    echo = {
        "name": "z2-on-torus",
        "size": size,
        "p_grid": [format_fraction(p) for p in p_grid],
        "note": "finite-torus instance; planar claims are not implied",
    }
    extra = {}
    if mode == "mc":
        extra["mc"] = {"n": mc_n, "seed": mc_seed, "level": level}
    return _envelope("z2", echo, mode, worst_verdict(verdicts), started,
                     relations=relations, **extra)


# ---------------------------------------------------------------------------
# scenario harness: hypercube connection-probability inequalities


@dataclass(frozen=True)
class CValues:
    """Connection probabilities by graph distance; index 0 is the origin."""

    d: int
    p: Fraction
    mode: str
    values: tuple  # Fractions in exact mode, McEstimates in mc mode

    def __post_init__(self):
        if len(self.values) != self.d + 1:
            raise ValueError("need one value per distance 0..d")


def _hypercube_distance_counts(d: int, cap_bits: int):
    """One sweep of the hypercube: per-distance count vectors plus the
    exact invariance check across all representatives of each distance."""
    g = graphs.hypercube_graph(d)
    counts = exact.connection_counts(g, 0, None, cap_bits)
    dist = graphs.distances_from(g, 0)
    by_distance: dict[int, list] = {}
    for v in range(g.n_vertices):
        by_distance.setdefault(dist[v], []).append(counts[v])
    invariant = all(
        all(vec == vecs[0] for vec in vecs) for vecs in by_distance.values()
    )
    reps = {i: vecs[0] for i, vecs in by_distance.items()}
    return g, reps, invariant


def hypercube_c_values(
    d: int,
    p,
    mode: str = "exact",
    cap_bits: int = exact.DEFAULT_CAP_BITS,
    mc_n: int = 100_000,
    mc_seed: int = 0,
    level: float = 0.95,
) -> CValues:
    """Connection probabilities c_0..c_d on the d-dimensional hypercube.

    Exact mode additionally asserts that every vertex at distance i yields
    the same value (coordinate permutations fix the origin, so the value can
    only depend on the distance)."""
    p = parse_probability(p)
    if mode == "exact":
        g, reps, invariant = _hypercube_distance_counts(d, cap_bits)
        if not invariant:
            raise RuntimeError("connection counts differ within a distance class")
        values = tuple(exact.eval_counts(reps[i], g.n_edges, p)
                       for i in range(d + 1))
        if values[0] != 1:
            raise RuntimeError("origin connection probability must be 1")
        return CValues(d=d, p=p, mode="exact", values=values)
    g = graphs.hypercube_graph(d)
    ests = []
    for i in range(d + 1):
        rep = g.index_of((1,) * i + (0,) * (d - i))
        ests.append(mc.estimate_connection(g, 0, rep, p, mc_n, mc_seed, level))
    return CValues(d=d, p=p, mode="mc", values=tuple(ests))


def discrete_derivative(values: Sequence, k: int, l: int):
    """k-th finite difference of the sequence at offset l."""
    if k < 0 or l < 0 or k + l > len(values) - 1:
        raise IndexError(
            f"derivative needs 0 <= k + l <= {len(values) - 1}, "
            f"got k={k}, l={l}")
    total = 0
    for i in range(k + 1):
        sign = 1 if (k - i) % 2 == 0 else -1
        total += sign * comb(k, i) * values[l + i]
    return total


def _hypercube_parity_sets(g: Graph, d: int, k: int, l: int):
    """The three set constructions behind the inequalities for one (k, l).

    Returns (construction name, v_plus, v_minus, generators) triples; the
    expectation gap of each equals a signed combination of c-values, which
    the report cross-checks exactly.
    """
    def parity(label, upto):
        return sum(label[:upto]) % 2

    out = []
    sub = [v for v in range(g.n_vertices)
           if all(c == 0 for c in g.labels[v][k + l:])]
    v_plus = [v for v in sub if parity(g.labels[v], k) == 0]
    v_minus = [v for v in sub if parity(g.labels[v], k) == 1]
    gens = [groups.axis_reflection(g, axis=i, center2=1)
            for i in range(k + l)]
    out.append(("double_sum", v_plus, v_minus, gens))

    if l >= 1:
        zero_block = [v for v in range(g.n_vertices)
                      if all(c == 0 for c in g.labels[v][k:])]
        one_block = [v for v in range(g.n_vertices)
                     if all(c == 1 for c in g.labels[v][k:k + l])
                     and all(c == 0 for c in g.labels[v][k + l:])]

        def block_flip(lab):
            return tuple(
                1 - c if k <= i < k + l else c for i, c in enumerate(lab))

        flip = groups.perm_from_label_map(g, block_flip)
        gens_b = [groups.axis_reflection(g, axis=i, center2=1)
                  for i in range(k)] + [flip]
        even0 = [v for v in zero_block if parity(g.labels[v], k) == 0]
        odd0 = [v for v in zero_block if parity(g.labels[v], k) == 1]
        even1 = [v for v in one_block if parity(g.labels[v], k) == 0]
        odd1 = [v for v in one_block if parity(g.labels[v], k) == 1]
        out.append(("alternating_block", even0 + odd1, odd0 + even1, gens_b))
        out.append(("aligned_block", even0 + even1, odd0 + odd1, gens_b))
    return out


def hypercube_inequality_report(
    d: int,
    p_grid: Sequence = ("1/2",),
    mode: str = "exact",
    cap_bits: int = exact.DEFAULT_CAP_BITS,
    mc_n: int = 100_000,
    mc_seed: int = 0,
    level: float = 0.95,
    threads: int = 1,
    cross_check: bool = True,
) -> dict:
    """All inequality families on the d-cube for every k + l <= d.

    Exact mode also rebuilds each inequality as an expectation gap of an
    explicit symmetric set pair and checks that the gap equals the c-value
    combination exactly (and that the symmetry conditions hold for it).
    """
    started = time.perf_counter()
    p_grid = [parse_probability(p) for p in p_grid]
    echo = {"name": "hypercube", "d": d,
            "p_grid": [format_fraction(p) for p in p_grid]}
    results = []
    verdicts = []
    invariance = None
    if mode == "exact":
        g, reps, invariance = _hypercube_distance_counts(d, cap_bits)
        if not invariance:
            verdicts.append(VIOLATION)
        instance_cache: dict[tuple[int, int], list] = {}
        for p in p_grid:
            c = [exact.eval_counts(reps[i], g.n_edges, p) for i in range(d + 1)]
            entry = _exact_hypercube_entry(g, d, p, c, instance_cache,
                                           cross_check, cap_bits, threads)
            verdicts.append(entry["verdict"])
            results.append(entry)
    else:
        for p in p_grid:
            cv = hypercube_c_values(d, p, "mc", cap_bits, mc_n, mc_seed, level)
            entry = _mc_hypercube_entry(d, p, cv.values, level)
            verdicts.append(entry["verdict"])
            results.append(entry)
    extra = {}
    if invariance is not None:
        extra["invariance"] = invariance
    if mode == "mc":
        extra["mc"] = {"n": mc_n, "seed": mc_seed, "level": level}
    return _envelope("hypercube", echo, mode, worst_verdict(verdicts),
                     started, results=results, **extra)


def _exact_hypercube_entry(g, d, p, c, instance_cache, cross_check,
                           cap_bits, threads) -> dict:
    rows = []
    ok = True
    for k in range(d + 1):
        for l in range(d - k + 1):
            double_sum = sum(
                (-1) ** i * comb(k, i) * comb(l, j) * c[i + j]
                for i in range(k + 1) for j in range(l + 1)
            )
            lhs = abs(discrete_derivative(c, k, 0))
            rhs = abs(discrete_derivative(c, k, l))
            row_ok = double_sum >= 0 and lhs >= rhs
            ok = ok and row_ok
            rows.append({
                "k": k, "l": l,
                "double_sum": format_fraction(double_sum),
                "abs_derivative_at_0": format_fraction(lhs),
                "abs_derivative_at_l": format_fraction(rhs),
                "pass": row_ok,
            })
    derivatives = []
    for k in range(d + 1):
        val = discrete_derivative(c, k, 0)
        sign_ok = (-1) ** k * val >= 0
        ok = ok and sign_ok
        derivatives.append({"k": k, "value": format_fraction(val),
                            "sign_ok": sign_ok})
    entry = {
        "p": format_fraction(p),
        "c_values": [format_fraction(x) for x in c],
        "rows": rows,
        "derivatives": derivatives,
    }
    if cross_check:
        instances, inst_ok = _hypercube_instances(g, d, p, c, instance_cache,
                                                  cap_bits, threads)
        entry["instances"] = instances
        ok = ok and inst_ok
    entry["verdict"] = PASS if ok else VIOLATION
    return entry


def _hypercube_instances(g, d, p, c, cache, cap_bits, threads):
    """Check each inequality as a genuine symmetric-set expectation gap."""
    instances = []
    all_ok = True
    for k in range(1, d + 1):
        for l in range(d - k + 1):
            key = (k, l)
            if key not in cache:
                built = []
                for name, v_plus, v_minus, gens in _hypercube_parity_sets(
                        g, d, k, l):
                    pair = groups.make_pair(g, v_plus, v_minus, origin=0)
                    grp = groups.generate_group(gens, n_points=g.n_vertices)
                    conditions = groups.check_symmetry_conditions(g, grp, pair)
                    poly = exact.enumerate_joint(g, pair, BOND,
                                                 cap_bits=cap_bits,
                                                 threads=threads)
                    built.append((name, conditions, poly))
                cache[key] = built
            for name, conditions, poly in cache[key]:
                pmf = exact.eval_joint(poly, p)
                e_plus, e_minus = exact.expected_sizes(pmf)
                gap = e_plus - e_minus
                dom = exact.check_domination(pmf)
                if name == "double_sum":
                    predicted = sum(
                        (-1) ** i * comb(k, i) * comb(l, j) * c[i + j]
                        for i in range(k + 1) for j in range(l + 1))
                elif name == "alternating_block":
                    predicted = sum(
                        (-1) ** i * comb(k, i) * (c[i] - c[i + l])
                        for i in range(k + 1))
                else:
                    predicted = sum(
                        (-1) ** i * comb(k, i) * (c[i] + c[i + l])
                        for i in range(k + 1))
                inst_ok = (conditions.ok and gap == predicted and gap >= 0
                           and dom.passes)
                all_ok = all_ok and inst_ok
                instances.append({
                    "k": k, "l": l, "construction": name,
                    "conditions_ok": conditions.ok,
                    "expectation_gap": format_fraction(gap),
                    "predicted_gap": format_fraction(predicted),
                    "margins_pass": dom.passes,
                    "pass": inst_ok,
                })
    return instances, all_ok


def _mc_hypercube_entry(d, p, estimates, level) -> dict:
    """Monte Carlo inequality rows with conservatively propagated errors."""
    from statistics import NormalDist

    values = [e.estimate for e in estimates]
    errs = [e.stderr for e in estimates]
    n_rows = (d + 1) * (d + 2)  # rough row count for the union bound
    z = NormalDist().inv_cdf(1 - (1 - level) / (2 * n_rows))

    def verdict_ge_zero(val, err):
        half = z * err
        if val + half < 0:
            return mc.VIOLATION
        if half <= mc.MAX_INFORMATIVE_HALF_WIDTH:
            return mc.CONSISTENT
        return mc.INCONCLUSIVE

    rows = []
    overall = mc.CONSISTENT
    for k in range(d + 1):
        for l in range(d - k + 1):
            val = sum((-1) ** i * comb(k, i) * comb(l, j) * values[i + j]
                      for i in range(k + 1) for j in range(l + 1))
            err = _rss([comb(k, i) * comb(l, j) * errs[i + j]
                              for i in range(k + 1) for j in range(l + 1)])
            lhs = discrete_derivative(values, k, 0)
            rhs = discrete_derivative(values, k, l)
            err_k = _rss([comb(k, i) * errs[i] for i in range(k + 1)])
            err_kl = _rss([comb(k, i) * errs[l + i]
                                 for i in range(k + 1)])
            v1 = verdict_ge_zero(val, err)
            v2 = verdict_ge_zero(abs(lhs) - abs(rhs), err_k + err_kl)
            for v in (v1, v2):
                if v == mc.VIOLATION:
                    overall = mc.VIOLATION
                elif v == mc.INCONCLUSIVE and overall != mc.VIOLATION:
                    overall = mc.INCONCLUSIVE
            rows.append({
                "k": k, "l": l, "double_sum": val, "double_sum_stderr": err,
                "abs_derivative_at_0": abs(lhs),
                "abs_derivative_at_l": abs(rhs),
                "double_sum_verdict": v1, "abs_compare_verdict": v2,
            })
    return {
        "p": format_fraction(p),
        "c_values": [e.to_json_dict(f"c_{i}", 0) for i, e in
                     enumerate(estimates)],
        "rows": rows,
        "verdict": _MC_VERDICT[overall],
    }


def _rss(xs) -> float:
    """Root sum of squares (error propagation for independent estimates)."""
    return math.sqrt(sum(x * x for x in xs))


# ---------------------------------------------------------------------------
# group identity battery


def _named_group(name: str):
    if name == "d4-on-c4":
        g = graphs.cycle_graph(4)
        gens = [(1, 2, 3, 0), (0, 3, 2, 1)]
        pair = groups.make_pair(g, [0, 2], [1, 3], origin=0)
        return g, gens, pair
    if name == "bunkbed-c3":
        base = graphs.cycle_graph(3)
        g = graphs.bunkbed_graph(base)
        gens = [
            groups.lift_first_factor((1, 2, 0), 2),
            groups.lift_first_factor((0, 2, 1), 2),
            groups.layer_swap(g),
        ]
        v_plus = [0, 2, 4]
        v_minus = [1, 3, 5]
        pair = groups.make_pair(g, v_plus, v_minus, origin=0)
        return g, gens, pair
    raise ScenarioFormatError(f"unknown named group {name!r}; "
                              "available: d4-on-c4, bunkbed-c3")


def group_theorem_battery(name: str, trials: int = 100, seed: int = 0) -> dict:
    """Exhaustive and sampled checks of the counting identities for one of
    the named group actions."""
    started = time.perf_counter()
    g, gens, pair = _named_group(name)
    grp = groups.generate_group(gens, n_points=g.n_vertices)
    conditions = groups.check_symmetry_conditions(g, grp, pair)

    orbit_product_failures = []
    for x in range(g.n_vertices):
        for y in range(g.n_vertices):
            lhs, rhs = groups.verify_orbit_product(grp, x, y)
            if lhs != rhs:
                orbit_product_failures.append((x, y, lhs, rhs))

    split = groups.split_group(grp, pair)
    sub = groups.PermGroup(n_points=g.n_vertices, generators=(),
                           elements=split.preservers)
    stab_failures = []
    for v in pair.v_plus:
        for w in pair.v_minus:
            if len(groups.stabilizer_orbit(sub, v, w)) != len(
                    groups.stabilizer_orbit(sub, w, v)):
                stab_failures.append((v, w))

    swap_failures = []
    for x in range(g.n_vertices):
        for y in range(g.n_vertices):
            if any(e[x] == y and e[y] == x for e in grp.elements):
                if len(groups.stabilizer_orbit(grp, x, y)) != len(
                        groups.stabilizer_orbit(grp, y, x)):
                    swap_failures.append((x, y))

    pairs = groups.random_family_pairs(pair.v_plus, pair.v_minus, trials, seed)
    o_prime = pair.v_minus[0]
    double_failures = 0
    for fp in pairs:
        lhs, rhs = groups.verify_double_counting(split.preservers, fp,
                                                 pair.origin, o_prime)
        if lhs != rhs:
            double_failures += 1

    all_exact = not (orbit_product_failures or stab_failures or swap_failures
                     or double_failures)
    return _envelope(
        "verify-group-theorem",
        {"name": name, "trials": trials, "seed": seed},
        "exact",
        PASS if all_exact else VIOLATION,
        started,
        conditions=conditions.to_json_dict(),
        group_order=grp.order,
        orbit_product_pairs=g.n_vertices ** 2,
        orbit_product_failures=len(orbit_product_failures),
        stabilizer_symmetry_failures=len(stab_failures),
        swap_symmetry_failures=len(swap_failures),
        double_counting_trials=trials,
        double_counting_failures=double_failures,
        all_exact=all_exact,
    )


# ---------------------------------------------------------------------------
# built-in scenario corpus


def builtin_scenarios() -> dict[str, dict]:
    """Named scenario documents covering the acceptance corpus, so CI runs
    need no hand-written files."""
    cyc3_rot = {"name": "base_perm", "perm": [1, 2, 0]}
    cyc3_refl = {"name": "base_perm", "perm": [0, 2, 1]}
    swap = {"name": "layer_swap"}
    bunk = lambda base: {"builder": "bunkbed", "base": base}
    out = {
        "bunkbed-path2": {
            "graph": bunk({"builder": "path", "n": 2}),
            "v_plus": [[0, 0], [1, 0]],
            "v_minus": [[0, 1], [1, 1]],
            "origin": [0, 0],
            "generators": [{"name": "base_perm", "perm": [1, 0]}, swap],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "bunkbed-cycle3": {
            "graph": bunk({"builder": "cycle", "n": 3}),
            "v_plus": [[0, 0], [1, 0], [2, 0]],
            "v_minus": [[0, 1], [1, 1], [2, 1]],
            "origin": [0, 0],
            "generators": [cyc3_rot, cyc3_refl, swap],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "bunkbed-cycle5": {
            "graph": bunk({"builder": "cycle", "n": 5}),
            "v_plus": [[i, 0] for i in range(5)],
            "v_minus": [[i, 1] for i in range(5)],
            "origin": [0, 0],
            "generators": [
                {"name": "base_perm", "perm": [1, 2, 3, 4, 0]},
                {"name": "base_perm", "perm": [0, 4, 3, 2, 1]},
                swap,
            ],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "bunkbed-path3": {
            "graph": bunk({"builder": "path", "n": 3}),
            "v_plus": [[i, 0] for i in range(3)],
            "v_minus": [[i, 1] for i in range(3)],
            "origin": [0, 0],
            "generators": [{"name": "base_perm", "perm": [2, 1, 0]}, swap],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "bunkbed-cycle3-site": {
            "graph": bunk({"builder": "cycle", "n": 3}),
            "v_plus": [[0, 0], [1, 0], [2, 0]],
            "v_minus": [[0, 1], [1, 1], [2, 1]],
            "origin": [0, 0],
            "generators": [cyc3_rot, cyc3_refl, swap],
            "law": "site",
            "p_grid": ["1/3", "1/2"],
        },
        "bunkbed-path2-rc2": {
            "graph": bunk({"builder": "path", "n": 2}),
            "v_plus": [[0, 0], [1, 0]],
            "v_minus": [[0, 1], [1, 1]],
            "origin": [0, 0],
            "generators": [{"name": "base_perm", "perm": [1, 0]}, swap],
            "law": {"kind": "random_cluster", "q": "2"},
            "p_grid": ["1/3", "1/2"],
        },
        "bunkbed-path2-rchalf": {
            "graph": bunk({"builder": "path", "n": 2}),
            "v_plus": [[0, 0], [1, 0]],
            "v_minus": [[0, 1], [1, 1]],
            "origin": [0, 0],
            "generators": [{"name": "base_perm", "perm": [1, 0]}, swap],
            "law": {"kind": "random_cluster", "q": "1/2"},
            "p_grid": ["1/3", "1/2"],
        },
        "z2-n3-rel1": {
            "graph": {"builder": "torus", "n": 3, "m": 3},
            "v_plus": [[0, 0], [1, 1]],
            "v_minus": [[1, 0], [0, 1]],
            "origin": [0, 0],
            "generators": [
                {"name": "swap_axes", "a": 0, "b": 1},
                {"name": "axis_reflection", "axis": 0, "center2": 1},
            ],
            "law": "bond",
            "p_grid": ["1/4", "1/2", "3/4"],
        },
        "z2-n3-rel2": {
            "graph": {"builder": "torus", "n": 3, "m": 3},
            "v_plus": [[0, 0], [2, 0]],
            "v_minus": [[1, 1], [1, 2]],
            "origin": [0, 0],
            "generators": [
                {"name": "axis_reflection", "axis": 0, "center2": 2},
                {"name": "compose", "of": [
                    {"name": "axis_rotation", "axis": 0, "step": 1},
                    {"name": "axis_rotation", "axis": 1, "step": -1},
                    {"name": "swap_axes", "a": 0, "b": 1},
                ]},
            ],
            "law": "bond",
            "p_grid": ["1/4", "1/2", "3/4"],
        },
        # axis-aligned parallel-lines pattern (the one line-class pattern
        # that transfers verbatim to the torus quotient)
        "z2-n3-lines": {
            "graph": {"builder": "torus", "n": 3, "m": 3},
            "v_plus": [[0, 0], [0, 1], [0, 2]],
            "v_minus": [[1, 0], [1, 1], [1, 2]],
            "origin": [0, 0],
            "generators": [
                {"name": "axis_rotation", "axis": 1, "step": 1},
                {"name": "axis_reflection", "axis": 1, "center2": 0},
                {"name": "axis_reflection", "axis": 0, "center2": 1},
            ],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "layered-m8-b": {
            "graph": {"builder": "cylinder",
                      "base": {"builder": "path", "n": 1}, "m": 8},
            "v_plus": [[0, 0], [0, 2], [0, 4], [0, 6]],
            "v_minus": [[0, 1], [0, 3], [0, 5], [0, 7]],
            "origin": [0, 0],
            "generators": [
                {"name": "axis_rotation", "axis": 1, "step": 2},
                {"name": "axis_reflection", "axis": 1, "center2": 1},
            ],
            "law": "bond",
            "p_grid": ["1/4", "1/2", "3/4"],
        },
        "layered-m6-a": {
            "graph": {"builder": "cylinder",
                      "base": {"builder": "path", "n": 1}, "m": 6},
            "v_plus": [[0, 0]],
            "v_minus": [[0, 3]],
            "origin": [0, 0],
            "generators": [
                {"name": "axis_reflection", "axis": 1, "center2": 3},
            ],
            "law": "bond",
            "p_grid": ["1/4", "1/2", "3/4"],
        },
        "asym-path4": {
            "graph": {"builder": "path", "n": 4},
            "v_plus": [0, 3],
            "v_minus": [1, 2],
            "origin": 0,
            "generators": [],
            "law": "bond",
            "p_grid": ["1/2"],
        },
        "mc-bunkbed-path2": {
            "graph": bunk({"builder": "path", "n": 2}),
            "v_plus": [[0, 0], [1, 0]],
            "v_minus": [[0, 1], [1, 1]],
            "origin": [0, 0],
            "generators": [{"name": "base_perm", "perm": [1, 0]}, swap],
            "law": "bond",
            "p_grid": ["1/2"],
            "mode": "mc",
            "mc": {"n": 100000, "seed": 42},
        },
    }
    for name, doc in out.items():
        doc.setdefault("name", name)
    return out


def load_scenario(ref: str) -> Scenario:
    """Load a scenario from "builtin:NAME" or from a JSON file path."""
    import json
    from pathlib import Path

    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        corpus = builtin_scenarios()
        if name not in corpus:
            raise ScenarioFormatError(
                f"unknown builtin scenario {name!r}; available: "
                + ", ".join(sorted(corpus)))
        return parse_scenario(corpus[name], name)
    path = Path(ref)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read scenario file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"scenario file is not valid JSON: {exc}") from None
    return parse_scenario(doc, path.stem)
