import random

import pytest

from symperc import groups
from symperc.graphs import bunkbed_graph, cycle_graph, path_graph
from symperc.groups import (
    ClosureCapExceeded,
    FamilyPair,
    GroupError,
    NonAutomorphismElement,
    NoSwapper,
    check_symmetry_conditions,
    compose,
    generate_group,
    identity_perm,
    invert,
    is_automorphism,
    make_pair,
    orbit,
    pair_orbit,
    split_group,
    stabilizer_orbit,
    verify_double_counting,
    verify_orbit_product,
)

ROT4 = (1, 2, 3, 0)        # i -> i+1 mod 4
REFL4 = (0, 3, 2, 1)       # i -> -i mod 4


def d4():
    return generate_group([ROT4, REFL4])


def bunkbed_c3_group():
    g = bunkbed_graph(cycle_graph(3))
    gens = [
        groups.lift_first_factor((1, 2, 0), 2),
        groups.lift_first_factor((0, 2, 1), 2),
        groups.layer_swap(g),
    ]
    return g, generate_group(gens)


def test_compose_convention():
    # (g o h)(x) = g(h(x))
    g = (1, 0, 2)
    h = (2, 1, 0)
    assert compose(g, h) == (2, 0, 1)
    assert compose(h, g) == (1, 2, 0)
    assert compose(g, invert(g)) == identity_perm(3)


def test_is_automorphism():
    c4 = cycle_graph(4)
    assert is_automorphism(c4, identity_perm(4))
    assert is_automorphism(c4, ROT4)
    p3 = path_graph(3)
    # swapping an endpoint with the middle breaks the edge set
    assert not is_automorphism(p3, (1, 0, 2))
    with pytest.raises(GroupError):
        is_automorphism(c4, (0, 1))


def test_generate_group_orders():
    assert generate_group([], n_points=5).order == 1
    assert generate_group([ROT4]).order == 4
    assert d4().order == 8  # dihedral group of the square


def test_generate_group_deterministic_and_closed():
    grp = d4()
    again = generate_group([ROT4, REFL4])
    assert grp.elements == again.elements
    assert grp.elements[0] == identity_perm(4)
    elems = set(grp.elements)
    for e in grp.elements:
        assert invert(e) in elems
        for f in grp.elements:
            assert compose(e, f) in elems


def test_closure_cap():
    with pytest.raises(ClosureCapExceeded):
        generate_group([ROT4, REFL4], cap=5)


def test_orbits():
    assert orbit(generate_group([], n_points=4), 2) == (2,)
    assert orbit(d4(), 0) == (0, 1, 2, 3)
    refl_fixing_0 = generate_group([REFL4])
    assert orbit(refl_fixing_0, 1) == (1, 3)


def test_stabilizer_orbit():
    grp = d4()
    assert stabilizer_orbit(grp, 0, 1) == (1, 3)
    assert stabilizer_orbit(grp, 2, 2) == (2,)
    trivial = generate_group([], n_points=4)
    assert stabilizer_orbit(trivial, 0, 3) == (3,)


def test_orbit_product_identity_examples():
    trivial = generate_group([], n_points=4)
    assert verify_orbit_product(trivial, 0, 1) == (1, 1)
    lhs, rhs = verify_orbit_product(d4(), 0, 1)
    assert (lhs, rhs) == (8, 8)
    cyclic = generate_group([ROT4])
    assert verify_orbit_product(cyclic, 0, 1) == (4, 4)


def test_orbit_product_identity_exhaustive():
    g, grp = bunkbed_c3_group()
    for x in range(g.n_vertices):
        for y in range(g.n_vertices):
            lhs, rhs = verify_orbit_product(grp, x, y)
            assert lhs == rhs


def test_symmetry_conditions_bunkbed_c3():
    g, grp = bunkbed_c3_group()
    assert grp.order == 12
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    report = check_symmetry_conditions(g, grp, pair)
    assert report.ok
    assert report.set_preserving and report.transitive
    assert report.stabilizer_symmetric and report.swap_transitive
    assert report.sets_finite


def test_symmetry_conditions_trivial_group():
    g, _ = bunkbed_c3_group()
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    trivial = generate_group([], n_points=g.n_vertices)
    report = check_symmetry_conditions(g, trivial, pair)
    assert report.set_preserving
    assert not report.transitive
    assert not report.ok


def test_symmetry_conditions_four_cycle_as_bunkbed():
    # bunkbed(path(2)): layers {0, 2} and {1, 3}, both of size 2
    g = bunkbed_graph(path_graph(2))
    gens = [groups.lift_first_factor((1, 0), 2), groups.layer_swap(g)]
    grp = generate_group(gens)
    pair = make_pair(g, [0, 2], [1, 3], origin=0)
    report = check_symmetry_conditions(g, grp, pair)
    assert report.ok
    for v in pair.v_plus:
        for w in pair.v_minus:
            assert len(stabilizer_orbit(grp, v, w)) == len(
                stabilizer_orbit(grp, w, v))


def test_symmetry_rejects_non_automorphism():
    g = path_graph(3)
    grp = generate_group([(1, 0, 2)])
    pair = make_pair(g, [0], [2], origin=0)
    with pytest.raises(NonAutomorphismElement):
        check_symmetry_conditions(g, grp, pair)


def test_split_group():
    g, grp = bunkbed_c3_group()
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    split = split_group(grp, pair)
    assert len(split.preservers) == 6
    assert len(split.swappers) == 6
    # swappers = swap o preservers, elementwise as a set
    assert set(split.swappers) == {
        compose(split.swap, e) for e in split.preservers}


def test_split_group_no_swapper():
    g = cycle_graph(4)
    grp = generate_group([], n_points=4)
    pair = make_pair(g, [0, 1, 2, 3], [], origin=0)
    with pytest.raises(NoSwapper):
        split_group(grp, pair)


def test_double_counting_translation_example():
    # cyclic translations acting on Z4 twice; pair ({0}, {0, 1})
    elements = generate_group([ROT4]).elements
    fp = FamilyPair(frozenset({0}), frozenset({0, 1}))
    lhs, rhs = verify_double_counting(elements, fp, 0, 0)
    assert lhs == rhs == 2
    members = pair_orbit(elements, fp)
    assert len(members) == 4
    assert sum(1 for first, _ in members if 0 in first) == 1
    assert sum(1 for _, second in members if 0 in second) == 2


def test_double_counting_degenerate_and_singletons():
    elements = generate_group([ROT4]).elements
    empty = FamilyPair(frozenset(), frozenset({1, 2}))
    assert verify_double_counting(elements, empty, 0, 0) == (0, 0)

    g, grp = bunkbed_c3_group()
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    split = split_group(grp, pair)
    sub = groups.PermGroup(n_points=g.n_vertices, generators=(),
                           elements=split.preservers)
    for x in pair.v_plus:
        for y in pair.v_minus:
            singles = FamilyPair(frozenset({x}), frozenset({y}))
            lhs, rhs = verify_double_counting(split.preservers, singles, x, y)
            assert lhs == len(stabilizer_orbit(sub, x, y))
            assert rhs == len(stabilizer_orbit(sub, y, x))
            assert lhs == rhs


@pytest.mark.parametrize("seed", [7, 11])
def test_double_counting_random_pairs(seed):
    g, grp = bunkbed_c3_group()
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    split = split_group(grp, pair)
    fps = groups.random_family_pairs(pair.v_plus, pair.v_minus,
                                     trials=100, seed=seed)
    assert len(fps) == 100
    for fp in fps:
        lhs, rhs = verify_double_counting(split.preservers, fp, 0, 1)
        assert lhs == rhs


def test_swapper_implies_stabilizer_symmetry():
    # wherever some element exchanges x and y, the two stabilizer orbits
    # have equal size
    g, grp = bunkbed_c3_group()
    found = 0
    for x in range(g.n_vertices):
        for y in range(g.n_vertices):
            if any(e[x] == y and e[y] == x for e in grp.elements):
                found += 1
                assert len(stabilizer_orbit(grp, x, y)) == len(
                    stabilizer_orbit(grp, y, x))
    assert found > 0


def test_equal_size_transitive_sets_have_symmetric_stabilizers():
    # transitive action on two equal-size finite sets forces the equality
    cases = []
    g4 = bunkbed_graph(path_graph(2))
    gens = [groups.lift_first_factor((1, 0), 2), groups.layer_swap(g4)]
    cases.append((generate_group(gens), (0, 2), (1, 3)))
    g6, grp6 = bunkbed_c3_group()
    split = split_group(grp6, make_pair(g6, [0, 2, 4], [1, 3, 5], 0))
    sub = groups.PermGroup(n_points=6, generators=(),
                           elements=split.preservers)
    cases.append((sub, (0, 2, 4), (1, 3, 5)))
    for grp, plus, minus in cases:
        for v in plus:
            assert set(orbit(grp, v)) >= set(plus)
        for v in plus:
            for w in minus:
                assert len(stabilizer_orbit(grp, v, w)) == len(
                    stabilizer_orbit(grp, w, v))


def test_pair_orbits_coincide_or_are_disjoint():
    g, grp = bunkbed_c3_group()
    pair = make_pair(g, [0, 2, 4], [1, 3, 5], origin=0)
    split = split_group(grp, pair)
    rng = random.Random(3)
    all_pairs = groups.random_family_pairs(pair.v_plus, pair.v_minus,
                                           trials=20, seed=5)
    for fp in all_pairs:
        members = pair_orbit(split.preservers, fp)
        probe = rng.choice(sorted(members, key=str))
        probe_fp = FamilyPair(probe[0], probe[1])
        assert pair_orbit(split.preservers, probe_fp) == members
        assert (frozenset(fp.a_plus), frozenset(fp.a_minus)) in members


def test_generator_builders_are_automorphisms():
    from symperc.graphs import torus_graph

    t = torus_graph(4, 4)
    for perm in (
        groups.axis_rotation(t, 0),
        groups.axis_rotation(t, 1, step=3),
        groups.axis_reflection(t, 0, center2=1),
        groups.swap_axes(t, 0, 1),
    ):
        assert is_automorphism(t, perm)
    bb = bunkbed_graph(cycle_graph(5))
    assert is_automorphism(bb, groups.layer_swap(bb))
    assert is_automorphism(
        bb, groups.lift_first_factor((1, 2, 3, 4, 0), 2))
