"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (visible under `pytest -v -s`) and
enforces the stated runtime budget.  Exact criteria use zero tolerance:
Fractions compared for equality, identities required to be exactly zero.
"""

import time
from fractions import Fraction as F

from symperc import exact, groups, mc, scenarios
from symperc.exact import (
    BOND,
    SITE,
    check_domination,
    check_partition_identity,
    check_ratio_identity,
    enumerate_joint,
    eval_joint,
    expected_sizes,
    random_cluster_law,
)
from symperc.graphs import (
    bunkbed_graph,
    cycle_graph,
    path_graph,
    relabel_graph,
)
from symperc.groups import make_pair

from _oracles import bond_joint_pmf

HALF = F(1, 2)
GRID3 = (F(1, 4), HALF, F(3, 4))


def _verdict_line(number: int, ok: bool, label: str, elapsed: float) -> bool:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} {status} - {label} ({elapsed:.2f}s)")
    return ok


def test_criterion_1_bunkbed_exactness():
    started = time.perf_counter()
    g = bunkbed_graph(path_graph(2))
    pair = make_pair(g, [0, 2], [1, 3], origin=0)
    poly = enumerate_joint(g, pair)
    pmf = eval_joint(poly, HALF)
    oracle = bond_joint_pmf(4, g.edges, [0, 2], [1, 3], 0, HALF)
    e_plus, e_minus = expected_sizes(pmf)
    dom = check_domination(pmf)
    residuals = check_partition_identity(pmf)
    elapsed = time.perf_counter() - started
    ok = (
        pmf == oracle
        and e_plus == F(25, 16)
        and e_minus == F(1)
        and dom.passes
        and all(m >= 0 for _, m in dom.margins)
        and all(r == 0 for r in residuals.values())
        and elapsed < 1.0
    )
    assert _verdict_line(1, ok, "bunkbed(path(2)) exact joint law", elapsed)


def test_criterion_2_hypercube_inequalities():
    started = time.perf_counter()
    report = scenarios.hypercube_inequality_report(3, GRID3, mode="exact")
    elapsed = time.perf_counter() - started
    ok = report["verdict"] == "pass" and report["invariance"] is True
    for entry in report["results"]:
        ok = ok and all(row["pass"] for row in entry["rows"])
        ok = ok and all(d["sign_ok"] for d in entry["derivatives"])
        ok = ok and all(inst["pass"] for inst in entry["instances"])
    ok = ok and elapsed < 5.0
    assert _verdict_line(2, ok, "hypercube d=3 inequality families", elapsed)


def test_criterion_3_z2_relation_on_torus():
    started = time.perf_counter()
    report = scenarios.z2_relation_report(3, GRID3, mode="exact")
    elapsed = time.perf_counter() - started
    rel1 = report["relations"][0]
    ok = report["verdict"] == "pass" and rel1["conditions"]["ok"]
    for row in rel1["results"]:
        # 1 + c(1,1) >= 2 c(1,0) in its expectation form, margins included
        ok = ok and F(row["relation_slack"]) >= 0
        ok = ok and row["expectation_gap"] == row["relation_slack"]
        ok = ok and row["domination"]["passes"]
    for rel in report["relations"]:
        ok = ok and rel["conditions"]["ok"]
        ok = ok and all(r["domination"]["passes"] for r in rel["results"])
    ok = ok and elapsed < 30.0
    assert _verdict_line(3, ok, "torus n=3 square-lattice relations", elapsed)


def test_criterion_4_group_identities():
    started = time.perf_counter()
    ok = True
    for name, order in (("d4-on-c4", 8), ("bunkbed-c3", 12)):
        report = scenarios.group_theorem_battery(name, trials=100, seed=7)
        ok = ok and report["group_order"] == order
        ok = ok and report["all_exact"]
        ok = ok and report["double_counting_trials"] >= 100
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1.0
    assert _verdict_line(4, ok, "orbit/stabilizer counting identities",
                         elapsed)


def test_criterion_5_partition_identity_generality():
    started = time.perf_counter()
    ok = True
    g_site = bunkbed_graph(cycle_graph(3))
    pair_site = make_pair(g_site, [0, 2, 4], [1, 3, 5], origin=0)
    poly_site = enumerate_joint(g_site, pair_site, SITE)
    g_rc = bunkbed_graph(path_graph(2))
    pair_rc = make_pair(g_rc, [0, 2], [1, 3], origin=0)
    polys = [poly_site] + [
        enumerate_joint(g_rc, pair_rc, random_cluster_law(q))
        for q in (F(1, 2), F(2))
    ]
    for poly in polys:
        for p in (F(1, 3), HALF):
            pmf = eval_joint(poly, p)
            residuals = check_partition_identity(pmf)
            lhs, rhs = check_ratio_identity(pmf)
            ok = ok and all(r == 0 for r in residuals.values())
            ok = ok and lhs == rhs
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 5.0
    assert _verdict_line(
        5, ok, "identity under site and random-cluster laws", elapsed)


def test_criterion_6_mc_exact_consistency():
    started = time.perf_counter()
    g = bunkbed_graph(path_graph(2))
    pair = make_pair(g, [0, 2], [1, 3], origin=0)
    seed, n = 42, 100_000

    conn = mc.estimate_connection(g, 0, 3, HALF, n, seed, level=0.99)
    ok = conn.lo <= 7 / 16 <= conn.hi

    emp = mc.estimate_joint(g, pair, HALF, n, seed)
    est_plus, _ = mc.empirical_expected_sizes(emp)
    ok = ok and abs(est_plus.estimate - 25 / 16) <= 3 * est_plus.stderr

    rerun = mc.estimate_joint(g, pair, HALF, n, seed)
    relaid = mc.estimate_joint(g, pair, HALF, n, seed, chunk_size=997)
    ok = ok and emp == rerun and emp == relaid
    elapsed = time.perf_counter() - started
    assert _verdict_line(6, ok, "Monte Carlo matches exact law", elapsed)


def test_criterion_7_layered_cycle():
    started = time.perf_counter()
    report = scenarios.layered_report(
        {"builder": "path", "n": 1}, m=8, choice="b", k=1, period=2,
        p_grid=GRID3, mode="exact")
    elapsed = time.perf_counter() - started
    ok = report["verdict"] == "pass" and report["conditions"]["ok"]
    for row in report["results"]:
        ok = ok and row["domination"]["passes"]
        ok = ok and row["identity_zero"] and row["ratio_equal"]
    ok = ok and elapsed < 1.0
    assert _verdict_line(7, ok, "layered residue classes on cycle(8)",
                         elapsed)


def test_criterion_8_property_suites():
    from math import comb

    started = time.perf_counter()
    ok = True

    # count conservation and exact normalization across the exact corpus
    for name, doc in scenarios.builtin_scenarios().items():
        sc = scenarios.parse_scenario(doc, name)
        if sc.mode != "exact":
            continue
        from symperc.graphs import build_graph

        g = build_graph(sc.graph_spec)
        pair = make_pair(g, [scenarios.resolve_vertex(g, v) for v in sc.v_plus],
                         [scenarios.resolve_vertex(g, v) for v in sc.v_minus],
                         scenarios.resolve_vertex(g, sc.origin))
        poly = enumerate_joint(g, pair, sc.law, cap_bits=sc.cap_bits)
        for kk in range(poly.units + 1):
            total = sum(vec[kk] for vec in poly.counts.values())
            ok = ok and total == comb(poly.units, kk)
        for p in sc.p_grid:
            ok = ok and sum(eval_joint(poly, p).values()) == 1

    # automorphism-permuted enumeration equality, all three laws
    g = bunkbed_graph(cycle_graph(3))
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    phi = groups.lift_first_factor((0, 2, 1), 2)
    g2 = relabel_graph(g, phi)
    pair2 = make_pair(g2, [phi[v] for v in pair.v_plus],
                      [phi[v] for v in pair.v_minus], phi[pair.origin])
    for law in (BOND, SITE, random_cluster_law(F(2))):
        ok = ok and enumerate_joint(g, pair, law) == enumerate_joint(
            g2, pair2, law)

    # lazy sampling equals eager sampling on a graph within 20 edges
    g5 = bunkbed_graph(cycle_graph(5))
    inc = mc._incidence_indexed(g5)
    thr = mc.open_threshold(HALF)
    for i in range(300):
        ok = ok and mc._sample_cluster_mask(inc, 13, i, thr, 0) == \
            mc.eager_cluster_mask(g5, 0, HALF, 13, i)

    # monotonicity of increasing events on the p grid
    gq = bunkbed_graph(path_graph(2))
    pairq = make_pair(gq, [0, 2], [1, 3], origin=0)
    polyq = enumerate_joint(gq, pairq)
    grid = [F(k, 10) for k in range(1, 10)]
    pmfs = [eval_joint(polyq, p) for p in grid]
    for t in (1, 2):
        tails = [sum(pr for (a, _), pr in pmf.items() if a >= t)
                 for pmf in pmfs]
        ok = ok and all(x <= y for x, y in zip(tails, tails[1:]))
    means = [expected_sizes(pmf)[0] for pmf in pmfs]
    ok = ok and all(x <= y for x, y in zip(means, means[1:]))

    elapsed = time.perf_counter() - started
    assert _verdict_line(8, ok, "conservation/invariance/monotonicity suites",
                         elapsed)
