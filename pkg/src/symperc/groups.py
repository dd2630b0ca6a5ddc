"""Finite permutation groups acting on graph vertices.

A permutation is a plain tuple ``p`` of length n with ``p[i]`` the image of
vertex i.  Composition follows ``(g o h)(x) = g(h(x))``: ``compose(g, h)``
applies h first.  Groups are materialized as explicit element lists (closure
of the generators, capped), because every check in this package is an
exhaustive sweep over elements.

The module also houses the verification side: the three symmetry conditions
a group must satisfy for the cluster-domination pipeline (set preservation,
transitivity on the union, and symmetry of cross stabilizer-orbit sizes),
the orbit product identity, and the double-counting identity on orbits of
set pairs.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .graphs import Graph, GraphError

Perm = tuple[int, ...]

DEFAULT_CLOSURE_CAP = 10**6


class GroupError(ValueError):
    """Invalid permutation input or a broken group precondition."""


class ClosureCapExceeded(GroupError):
    """Generator closure grew past the configured element cap."""


class NonAutomorphismElement(GroupError):
    """A group element does not preserve the graph's edge set."""


class NoSwapper(GroupError):
    """No element exchanges the two vertex sets (or one set is empty)."""


# ---------------------------------------------------------------------------
# permutation basics


def identity_perm(n: int) -> Perm:
    return tuple(range(n))


def compose(g: Perm, h: Perm) -> Perm:
    """(g o h)(x) = g(h(x)): h is applied first."""
    if len(g) != len(h):
        raise GroupError("cannot compose permutations of different lengths")
    return tuple(g[h[x]] for x in range(len(h)))


def invert(p: Perm) -> Perm:
    inv = [0] * len(p)
    for x, y in enumerate(p):
        inv[y] = x
    return tuple(inv)


def _check_perm(p: Sequence[int], n: int) -> Perm:
    p = tuple(int(x) for x in p)
    if len(p) != n or sorted(p) != list(range(n)):
        raise GroupError(f"not a permutation of 0..{n - 1}: {p!r}")
    return p


def is_automorphism(g: Graph, p: Sequence[int]) -> bool:
    """True iff p maps the edge set onto itself (adjacency both ways)."""
    perm = _check_perm(p, g.n_vertices)
    edge_set = set(g.edges)
    for u, v in g.edges:
        pu, pv = perm[u], perm[v]
        if (pu, pv) not in edge_set and (pv, pu) not in edge_set:
            return False
    return True


def perm_from_label_map(g: Graph, fn) -> Perm:
    """Build a permutation from a label-rewriting function.

    ``fn`` maps a coordinate label to a coordinate label; the result must hit
    every vertex exactly once.
    """
    image = [-1] * g.n_vertices
    for v, lab in enumerate(g.labels):
        try:
            image[v] = g.index_of(tuple(fn(lab)))
        except GraphError as exc:
            raise GroupError(f"label map leaves the vertex set: {exc}") from None
    return _check_perm(image, g.n_vertices)


# ---------------------------------------------------------------------------
# group closure


@dataclass(frozen=True)
class PermGroup:
    """Generators plus the full element list (deterministic discovery order:
    breadth-first from the identity, generators applied in input order)."""

    n_points: int
    generators: tuple[Perm, ...]
    elements: tuple[Perm, ...]

    @property
    def order(self) -> int:
        return len(self.elements)


def generate_group(
    gens: Sequence[Sequence[int]],
    cap: int = DEFAULT_CLOSURE_CAP,
    n_points: int | None = None,
) -> PermGroup:
    """Close a generator list under composition.

    The element list starts at the identity and grows breadth-first, applying
    generators in input order, so the order is reproducible.  ``n_points`` is
    only needed when ``gens`` is empty.
    """
    if cap < 1:
        raise GroupError(f"closure cap must be >= 1, got {cap}")
    if gens:
        n = len(gens[0])
    elif n_points is not None:
        n = n_points
    else:
        raise GroupError("empty generator list needs an explicit n_points")
    checked = [_check_perm(p, n) for p in gens]

    ident = identity_perm(n)
    elements = [ident]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for e in frontier:
            for gen in checked:
                h = compose(gen, e)
                if h not in seen:
                    if len(seen) + 1 > cap:
                        raise ClosureCapExceeded(
                            f"group closure exceeds cap of {cap} elements"
                        )
                    seen.add(h)
                    elements.append(h)
                    nxt.append(h)
        frontier = nxt
    return PermGroup(n_points=n, generators=tuple(checked),
                     elements=tuple(elements))


def orbit(grp: PermGroup, x: int) -> tuple[int, ...]:
    """All images of x under the group."""
    return tuple(sorted({e[x] for e in grp.elements}))


def stabilizer_orbit(grp: PermGroup, v: int, w: int) -> tuple[int, ...]:
    """Images of w under the elements fixing v."""
    return tuple(sorted({e[w] for e in grp.elements if e[v] == v}))


def verify_orbit_product(grp: PermGroup, x: int, y: int) -> tuple[int, int]:
    """Count both sides of the pair-orbit product identity.

    Returns (number of distinct image pairs of (x, y),
             orbit size of x times stabilizer orbit size of y at x).
    The two counts agree for every group action.
    """
    pairs = {(e[x], e[y]) for e in grp.elements}
    return len(pairs), len(orbit(grp, x)) * len(stabilizer_orbit(grp, x, y))


# ---------------------------------------------------------------------------
# vertex set pairs and the symmetry conditions


@dataclass(frozen=True)
class VertexSetPair:
    """The two disjoint vertex sets under comparison plus the origin, which
    must sit in ``v_plus``."""

    v_plus: tuple[int, ...]
    v_minus: tuple[int, ...]
    origin: int

    def __post_init__(self):
        if set(self.v_plus) & set(self.v_minus):
            raise GraphError("v_plus and v_minus must be disjoint")
        if self.origin not in self.v_plus:
            raise GraphError(f"origin {self.origin} must belong to v_plus")

    @property
    def union(self) -> tuple[int, ...]:
        return tuple(sorted(self.v_plus + self.v_minus))


def make_pair(g: Graph, v_plus: Iterable[int], v_minus: Iterable[int],
              origin: int) -> VertexSetPair:
    from .graphs import as_vertex_set

    return VertexSetPair(
        v_plus=as_vertex_set(g, v_plus),
        v_minus=as_vertex_set(g, v_minus),
        origin=int(origin),
    )


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of the exhaustive symmetry check.

    ``set_preserving``: every element maps each of the two sets onto one of
    the two sets.  ``transitive``: every element maps the union onto itself
    and one orbit covers the union.  ``stabilizer_symmetric``: for every
    cross pair (v, w) the two stabilizer orbits have equal size.
    ``swap_transitive`` reports the stronger sufficient condition that some
    element exchanges v and w for every cross pair; ``sets_finite`` is
    trivially true here and recorded for completeness.
    """

    set_preserving: bool
    transitive: bool
    stabilizer_symmetric: bool
    swap_transitive: bool
    sets_finite: bool
    group_order: int
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.set_preserving and self.transitive and self.stabilizer_symmetric

    def to_json_dict(self) -> dict:
        return {
            "set_preserving": self.set_preserving,
            "transitive": self.transitive,
            "stabilizer_symmetric": self.stabilizer_symmetric,
            "swap_transitive": self.swap_transitive,
            "sets_finite": self.sets_finite,
            "group_order": self.group_order,
            "ok": self.ok,
            "notes": list(self.notes),
        }


def check_symmetry_conditions(g: Graph, grp: PermGroup,
                              pair: VertexSetPair) -> SymmetryReport:
    """Exhaustively verify the three symmetry conditions for a pair of sets.

    Raises :class:`NonAutomorphismElement` unless every group element is an
    automorphism of ``g``.
    """
    if grp.n_points != g.n_vertices:
        raise GroupError("group acts on a different number of points")
    for e in grp.elements:
        if not is_automorphism(g, e):
            raise NonAutomorphismElement(f"element {e} is not an automorphism")

    plus, minus = set(pair.v_plus), set(pair.v_minus)
    union = plus | minus
    notes: list[str] = []

    set_preserving = True
    for e in grp.elements:
        img_plus = {e[v] for v in plus}
        img_minus = {e[v] for v in minus}
        if img_plus not in (plus, minus) or img_minus not in (plus, minus):
            set_preserving = False
            notes.append("an element maps a set off the pair {v_plus, v_minus}")
            break

    transitive = True
    for e in grp.elements:
        if {e[v] for v in union} != union:
            transitive = False
            notes.append("an element moves the union off itself")
            break
    if transitive and union:
        seed = min(union)
        reach = {e[seed] for e in grp.elements}
        if not union <= reach:
            transitive = False
            missing = sorted(union - reach)
            notes.append(f"vertices {missing} unreachable from vertex {seed}")

    stabilizer_symmetric = True
    for v in pair.v_plus:
        for w in pair.v_minus:
            if len(stabilizer_orbit(grp, v, w)) != len(stabilizer_orbit(grp, w, v)):
                stabilizer_symmetric = False
                notes.append(f"stabilizer orbit sizes differ for pair ({v},{w})")
                break
        if not stabilizer_symmetric:
            break

    swap_transitive = True
    for v in pair.v_plus:
        for w in pair.v_minus:
            if not any(e[v] == w and e[w] == v for e in grp.elements):
                swap_transitive = False
                break
        if not swap_transitive:
            break

    return SymmetryReport(
        set_preserving=set_preserving,
        transitive=transitive,
        stabilizer_symmetric=stabilizer_symmetric,
        swap_transitive=swap_transitive,
        sets_finite=True,
        group_order=grp.order,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class GroupSplit:
    """Partition of the elements into set-preservers and set-swappers.

    ``swap`` is the first swapper in the group's deterministic element
    order; the swappers are exactly ``swap`` composed with each preserver.
    """

    preservers: tuple[Perm, ...]
    swappers: tuple[Perm, ...]
    swap: Perm


def split_group(grp: PermGroup, pair: VertexSetPair) -> GroupSplit:
    plus, minus = set(pair.v_plus), set(pair.v_minus)
    preservers: list[Perm] = []
    swappers: list[Perm] = []
    for e in grp.elements:
        img_plus = {e[v] for v in plus}
        img_minus = {e[v] for v in minus}
        if img_plus == plus and img_minus == minus:
            preservers.append(e)
        elif img_plus == minus and img_minus == plus:
            swappers.append(e)
        else:
            raise GroupError(
                "split requires every element to preserve or swap the sets"
            )
    if not swappers:
        raise NoSwapper(
            "no element swaps the sets (transitivity fails or v_minus is empty)"
        )
    return GroupSplit(preservers=tuple(preservers), swappers=tuple(swappers),
                      swap=swappers[0])


# ---------------------------------------------------------------------------
# double counting on orbits of set pairs


@dataclass(frozen=True)
class FamilyPair:
    """A pair of finite subsets, one inside each of the two acted-on sets."""

    a_plus: frozenset[int]
    a_minus: frozenset[int]


def pair_orbit(elements: Sequence[Perm],
               pair: FamilyPair) -> set[tuple[frozenset[int], frozenset[int]]]:
    """Distinct componentwise images of the set pair under the elements."""
    return {
        (frozenset(e[x] for x in pair.a_plus),
         frozenset(e[x] for x in pair.a_minus))
        for e in elements
    }


def verify_double_counting(elements: Sequence[Perm], pair: FamilyPair,
                           o: int, o_prime: int) -> tuple[int, int]:
    """Count both sides of the double-counting identity.

    lhs = (#orbit members whose first set contains o) * |a_minus|,
    rhs = (#orbit members whose second set contains o_prime) * |a_plus|.
    Equality holds whenever the elements form a group acting transitively on
    each side with symmetric cross stabilizer-orbit sizes.
    """
    members = pair_orbit(elements, pair)
    hits_o = sum(1 for first, _ in members if o in first)
    hits_o_prime = sum(1 for _, second in members if o_prime in second)
    return hits_o * len(pair.a_minus), hits_o_prime * len(pair.a_plus)


def random_family_pairs(v_plus: Sequence[int], v_minus: Sequence[int],
                        trials: int, seed: int,
                        max_size: int = 4) -> list[FamilyPair]:
    """Reproducible sample of set pairs with sides of size <= max_size
    (empty sides included, so the degenerate branch gets exercised)."""
    rng = random.Random(seed)
    out = []
    for _ in range(trials):
        ka = rng.randint(0, min(max_size, len(v_plus)))
        kb = rng.randint(0, min(max_size, len(v_minus)))
        out.append(FamilyPair(
            a_plus=frozenset(rng.sample(list(v_plus), ka)),
            a_minus=frozenset(rng.sample(list(v_minus), kb)),
        ))
    return out


# ---------------------------------------------------------------------------
# generator builders for the standard symmetries

def _axis_size(g: Graph, axis: int) -> int:
    sizes = {lab[axis] for lab in g.labels}
    if sizes != set(range(len(sizes))):
        raise GroupError(f"axis {axis} coordinates are not dense 0..k-1")
    return len(sizes)


def _replace(lab: tuple[int, ...], axis: int, value: int) -> tuple[int, ...]:
    return lab[:axis] + (value,) + lab[axis + 1:]


def layer_swap(g: Graph) -> Perm:
    """Exchange the two layers of a product with a binary last coordinate."""
    axis = len(g.labels[0]) - 1
    if _axis_size(g, axis) != 2:
        raise GroupError("layer swap needs a binary last coordinate")
    return perm_from_label_map(g, lambda lab: _replace(lab, axis, 1 - lab[axis]))


def axis_rotation(g: Graph, axis: int, step: int = 1) -> Perm:
    """Rotate one cyclic coordinate by ``step`` (mod the axis size)."""
    size = _axis_size(g, axis)
    return perm_from_label_map(
        g, lambda lab: _replace(lab, axis, (lab[axis] + step) % size))


def axis_reflection(g: Graph, axis: int, center2: int = 0) -> Perm:
    """Reflect one cyclic coordinate through center2 / 2, i.e.
    i -> (center2 - i) mod size."""
    size = _axis_size(g, axis)
    return perm_from_label_map(
        g, lambda lab: _replace(lab, axis, (center2 - lab[axis]) % size))


def swap_axes(g: Graph, a: int, b: int) -> Perm:
    """Transpose two coordinates (requires equal axis sizes)."""
    if _axis_size(g, a) != _axis_size(g, b):
        raise GroupError(f"axes {a} and {b} have different sizes")

    def fn(lab):
        out = list(lab)
        out[a], out[b] = out[b], out[a]
        return tuple(out)

    return perm_from_label_map(g, fn)


def coord_permutation(g: Graph, sigma: Sequence[int]) -> Perm:
    """Permute all coordinates at once: new[i] = old[sigma[i]]."""
    width = len(g.labels[0])
    sigma = _check_perm(sigma, width)
    return perm_from_label_map(
        g, lambda lab: tuple(lab[sigma[i]] for i in range(width)))


def lift_first_factor(base_perm: Sequence[int], n_second: int) -> Perm:
    """Lift a base-factor permutation to a row-major product with a second
    factor of ``n_second`` vertices."""
    n1 = len(base_perm)
    image = [0] * (n1 * n_second)
    for i1 in range(n1):
        for i2 in range(n_second):
            image[i1 * n_second + i2] = base_perm[i1] * n_second + i2
    return tuple(image)


def build_generator(g: Graph, spec) -> Perm:
    """Resolve one generator spec: an explicit image array, or a named
    builder dict like {"name": "axis_rotation", "axis": 0, "step": 1}."""
    if isinstance(spec, (list, tuple)):
        return _check_perm(spec, g.n_vertices)
    if isinstance(spec, Mapping):
        name = spec.get("name")
        if name is None and "perm" in spec:
            return _check_perm(spec["perm"], g.n_vertices)
        if name == "layer_swap":
            return layer_swap(g)
        if name == "axis_rotation":
            return axis_rotation(g, int(spec["axis"]), int(spec.get("step", 1)))
        if name == "axis_reflection":
            return axis_reflection(g, int(spec["axis"]), int(spec.get("center2", 0)))
        if name == "swap_axes":
            return swap_axes(g, int(spec["a"]), int(spec["b"]))
        if name == "coord_permutation":
            return coord_permutation(g, spec["sigma"])
        if name == "base_perm":
            n_second = _axis_size(g, len(g.labels[0]) - 1)
            base = spec["perm"]
            if len(base) * n_second != g.n_vertices:
                raise GroupError("base_perm length does not match the product")
            return lift_first_factor([int(x) for x in base], n_second)
        raise GroupError(f"unknown generator name {name!r}")
    raise GroupError(f"bad generator spec: {spec!r}")
