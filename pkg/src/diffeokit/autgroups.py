"""Finitely generated symmetry groups of a bundle and their geometry.

Generators come in with supplied inverses; everything else is a reduced
word in them.  The kernel of the base projection consists of fiberwise
linear automorphisms, and both inclusions of that statement are checked
element by element.  Orbit structure, one-parameter velocity vectors,
frame algebra over a fiber, and free right actions all live here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .bundles import (
    BundleMorphism,
    PseudoBundle,
    check_morphism,
    difference_witness,
    fiber_at,
)
from .domains import Domain, Point
from .expr import Expr, ExprVec
from .linalg import invert_rational, solve_rational
from .spaces import (
    DEFAULT_BUDGET,
    DiffSpace,
    Plot,
    RelationPair,
    SmoothMap,
    Verdict,
    generated_space,
    intersection_space,
    is_smooth,
    is_subduction,
    quotient_space,
)

__all__ = [
    "FinGenGroup",
    "Element",
    "bundle_group",
    "enumerate_elements",
    "word_name",
    "ExactSequenceReport",
    "exact_sequence_check",
    "FiberTransport",
    "fiber_transport",
    "OrbitClass",
    "OrbitReport",
    "typical_fiber_check",
    "group_diffeology",
    "aut_diffeology",
    "family_velocity",
    "AdditivityReport",
    "g_tangent_additivity",
    "Frame",
    "frame",
    "random_frame",
    "FrameReport",
    "frame_bundle_check",
    "QuantumReport",
    "quantum_structure_check",
]


# ---------------------------------------------------------------------------
# groups and words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinGenGroup:
    """Bundle automorphisms with supplied inverses, plus optional
    one-parameter families of base maps through the identity."""

    name: str
    bundle: PseudoBundle
    generators: tuple[BundleMorphism, ...]
    inverses: tuple[BundleMorphism, ...]
    families: tuple[ExprVec, ...] = ()


@dataclass(frozen=True)
class Element:
    """A reduced word and its composed action, total and base."""

    word: tuple[int, ...]  # +i+1 for generator i, -(i+1) for its inverse
    phi: ExprVec
    varphi: ExprVec

    def key(self):
        return (self.phi.canonical_key(), self.varphi.canonical_key())


def word_name(word: tuple[int, ...]) -> str:
    if not word:
        return "e"
    out = []
    for letter in word:
        i = abs(letter) - 1
        out.append(f"g{i}" if letter > 0 else f"g{i}^-1")
    return "*".join(out)


def bundle_group(
    name: str,
    bundle: PseudoBundle,
    pairs: Sequence[tuple[BundleMorphism, BundleMorphism]],
    families: Sequence[ExprVec] = (),
    budget: int = DEFAULT_BUDGET,
) -> FinGenGroup:
    """Validate generator/inverse pairs and assemble the group."""
    d = bundle.ambient_dim
    for k, (gen, inv) in enumerate(pairs):
        for label, m in (("generator", gen), ("inverse", inv)):
            verdict = check_morphism(m, bundle, bundle, budget)
            if not verdict.is_yes:
                raise ValueError(f"{label} {k} of {name}: {verdict.detail}")
        _, g = gen.phi.piece("")
        _, h = inv.phi.piece("")
        for outer, inner in ((g, h), (h, g)):
            back = ExprVec([c.compose(inner.components) for c in outer.components])
            bad = difference_witness(bundle.total, back, ExprVec.identity(d), budget)
            if bad:
                raise ValueError(f"generator {k} of {name} does not invert: {bad}")
    n = bundle.base_dim
    for f in families:
        _check_family(f, n)
    return FinGenGroup(
        name,
        bundle,
        tuple(gen for gen, _ in pairs),
        tuple(inv for _, inv in pairs),
        tuple(families),
    )


def enumerate_elements(group: FinGenGroup, max_len: int) -> list[Element]:
    """All distinct elements reachable by reduced words up to max_len,
    shortest word first, deduplicated by canonical form."""
    d = group.bundle.ambient_dim
    n = group.bundle.base_dim
    letters = []
    for i, (gen, inv) in enumerate(zip(group.generators, group.inverses)):
        letters.append((i + 1, gen.phi.piece("")[1], gen.varphi.piece("")[1]))
        letters.append((-(i + 1), inv.phi.piece("")[1], inv.varphi.piece("")[1]))
    identity = Element((), ExprVec.identity(d), ExprVec.identity(n))
    out = [identity]
    seen = {identity.key()}
    frontier = [identity]
    for _ in range(max_len):
        nxt = []
        for el in frontier:
            for letter, phi, varphi in letters:
                if el.word and el.word[-1] == -letter:
                    continue
                new = Element(
                    el.word + (letter,),
                    ExprVec([c.compose(phi.components) for c in el.phi.components]),
                    ExprVec([c.compose(varphi.components) for c in el.varphi.components]),
                )
                if new.key() in seen:
                    continue
                seen.add(new.key())
                out.append(new)
                nxt.append(new)
        frontier = nxt
    return out


# ---------------------------------------------------------------------------
# the short exact sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactSequenceReport:
    element_count: int
    kernel_words: tuple[str, ...]
    linear_words: tuple[str, ...]
    homomorphism_failures: tuple[str, ...]
    mismatches: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.homomorphism_failures and not self.mismatches


def exact_sequence_check(
    bundle: PseudoBundle,
    group: FinGenGroup,
    word_length: int = 4,
    pair_length: int = 2,
    budget: int = DEFAULT_BUDGET,
) -> ExactSequenceReport:
    """Both inclusions of kernel = fiberwise linear part, and
    compatibility of the base projection with composition."""
    elements = enumerate_elements(group, word_length)
    _, proj = bundle.projection.piece("")
    d = bundle.ambient_dim
    n = bundle.base_dim

    def base_of(phi: ExprVec) -> ExprVec:
        return ExprVec([c.compose(phi.components) for c in proj.components])

    hom_failures = []
    short = [el for el in elements if len(el.word) <= pair_length]
    for a in short:
        for b in short:
            phi_ab = ExprVec([c.compose(b.phi.components) for c in a.phi.components])
            varphi_ab = ExprVec(
                [c.compose(b.varphi.components) for c in a.varphi.components]
            )
            lhs = base_of(phi_ab)
            rhs = ExprVec([c.compose(proj.components) for c in varphi_ab.components])
            bad = difference_witness(bundle.total, lhs, rhs, budget)
            if bad:
                hom_failures.append(
                    f"{word_name(a.word)} after {word_name(b.word)}: {bad}"
                )

    kernel, linear, mismatches = [], [], []
    for el in elements:
        in_kernel = (
            difference_witness(bundle.base, el.varphi, ExprVec.identity(n), budget)
            is None
        )
        is_linear = (
            difference_witness(bundle.total, base_of(el.phi), proj, budget) is None
        )
        name = word_name(el.word)
        if in_kernel:
            kernel.append(name)
            inv = _inverse_of(group, el.word)
            back = ExprVec([c.compose(inv.components) for c in el.phi.components])
            bad = difference_witness(bundle.total, back, ExprVec.identity(d), budget)
            if bad:
                mismatches.append(f"kernel word {name} is not invertible: {bad}")
        if is_linear:
            linear.append(name)
        if in_kernel != is_linear:
            side = "kernel without linearity" if in_kernel else "linear with moving base"
            mismatches.append(f"{name}: {side}")
    return ExactSequenceReport(
        len(elements), tuple(kernel), tuple(linear), tuple(hom_failures), tuple(mismatches)
    )


def _inverse_of(group: FinGenGroup, word: tuple[int, ...]) -> ExprVec:
    d = group.bundle.ambient_dim
    vec = ExprVec.identity(d)
    for letter in reversed(word):
        i = abs(letter) - 1
        m = group.inverses[i] if letter > 0 else group.generators[i]
        _, step = m.phi.piece("")
        vec = ExprVec([c.compose(step.components) for c in vec.components])
    return vec


# ---------------------------------------------------------------------------
# fibers under the action
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberTransport:
    """The restriction of an automorphism to one fiber, in chart
    coordinates, with its exact inverse."""

    source: Point
    target: Point
    matrix: tuple[tuple[Fraction, ...], ...]
    inverse: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.matrix)


def fiber_transport(bundle: PseudoBundle, aut: BundleMorphism, x) -> FiberTransport:
    x = tuple(Fraction(c) for c in x)
    _, phi = aut.phi.piece("")
    _, varphi = aut.varphi.piece("")
    y = varphi.eval(x)
    src = fiber_at(bundle, x)
    dst = fiber_at(bundle, y)
    image_origin = phi.eval(src.origin)
    if image_origin != dst.origin:
        raise ValueError("the automorphism moves the zero section")
    deltas = []
    cols = []
    for e in src.basis:
        shifted = tuple(o + c for o, c in zip(src.origin, e))
        delta = [a - b for a, b in zip(phi.eval(shifted), image_origin)]
        coords = _chart_coordinates(dst, delta)
        if coords is None:
            raise ValueError("the image leaves the target fiber")
        deltas.append(delta)
        cols.append(coords)
    # the matrix picture needs the action to combine basis vectors linearly
    for (i, a), (j, b) in combinations(enumerate(src.basis), 2):
        both = tuple(o + p + q for o, p, q in zip(src.origin, a, b))
        expect = [o + u + v for o, u, v in zip(image_origin, deltas[i], deltas[j])]
        if list(phi.eval(both)) != expect:
            raise ValueError("the fiber action is not linear")
    rows = [tuple(cols[j][i] for j in range(len(cols))) for i in range(dst.dim)]
    inverse = invert_rational(rows)
    if inverse is None:
        raise ValueError("the fiber action is not invertible")
    return FiberTransport(x, y, tuple(rows), tuple(tuple(r) for r in inverse))


def _chart_coordinates(chart, ambient_delta) -> list[Fraction] | None:
    if not chart.basis:
        return [] if all(v == 0 for v in ambient_delta) else None
    rows = [
        [chart.basis[j][i] for j in range(len(chart.basis))]
        for i in range(len(ambient_delta))
    ]
    return solve_rational(rows, list(ambient_delta))


@dataclass(frozen=True)
class OrbitClass:
    representative: Point
    members: tuple[Point, ...]
    fiber_dim: int


@dataclass(frozen=True)
class OrbitReport:
    classes: tuple[OrbitClass, ...]
    moves: tuple[tuple[Point, Point, str], ...]
    separations: tuple[tuple[Point, Point, str], ...]

    @property
    def transitive(self) -> bool:
        return len(self.classes) == 1

    @property
    def typical_fiber_dim(self) -> int | None:
        return self.classes[0].fiber_dim if self.transitive else None

    def class_of(self, x) -> OrbitClass:
        x = tuple(Fraction(c) for c in x)
        for cls in self.classes:
            if x in cls.members:
                return cls
        raise KeyError(f"{x} was not sampled")


def typical_fiber_check(
    bundle: PseudoBundle,
    group: FinGenGroup,
    points: Sequence[Point] | None = None,
    word_length: int = 4,
) -> OrbitReport:
    """Partition sampled base points into orbit classes of bounded words
    and read off fiber dimensions; distinct dimensions separate classes
    outright since no linear isomorphism can connect them."""
    if points is None:
        points = bundle.base.sample_carrier_points("", 8)
    points = [tuple(Fraction(c) for c in p) for p in points]
    parent = {p: p for p in points}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    moves = []
    elements = enumerate_elements(group, word_length)
    for el in elements[1:]:
        for p in points:
            q = el.varphi.eval(p)
            if q in parent and find(p) != find(q):
                parent[find(p)] = find(q)
                moves.append((p, q, word_name(el.word)))

    grouped: dict[Point, list[Point]] = {}
    for p in points:
        grouped.setdefault(find(p), []).append(p)
    classes = []
    for members in grouped.values():
        rep = members[0]
        dims = {fiber_at(bundle, p).dim for p in members}
        if len(dims) != 1:
            raise ValueError(f"orbit of {rep} mixes fiber dimensions {sorted(dims)}")
        classes.append(OrbitClass(rep, tuple(members), dims.pop()))
    classes.sort(key=lambda c: c.representative)

    separations = []
    for a, b in combinations(classes, 2):
        if a.fiber_dim != b.fiber_dim:
            why = f"fiber dimensions {a.fiber_dim} and {b.fiber_dim} differ"
        else:
            why = f"no word of length <= {word_length} connects them"
        separations.append((a.representative, b.representative, why))
    return OrbitReport(tuple(classes), tuple(moves), tuple(separations))


# ---------------------------------------------------------------------------
# the diffeology induced by the action
# ---------------------------------------------------------------------------


def group_diffeology(
    name: str, base: DiffSpace, families: Sequence[ExprVec] = (), complete: bool = True
) -> DiffSpace:
    """Plots pushed forward from the group onto the base.

    A word group contributes only constants; each one-parameter family
    contributes its joint orbit map as a generating plot.
    """
    n = base.carrier.ambient_dim("")
    gens = []
    for f in families:
        _check_family(f, n)
        gens.append(Plot(Domain.full(1 + n), f))
    return generated_space(name, base.carrier, tuple(gens), complete=complete)


def aut_diffeology(
    bundle: PseudoBundle, group: FinGenGroup, name: str = ""
) -> DiffSpace:
    """Plots of the total space whose base image is also a plot of the
    pushed-forward orbit diffeology."""
    name = name or f"{bundle.name}.aut"
    orbits = group_diffeology(f"{name}.orbits", bundle.base, group.families)
    d = bundle.ambient_dim
    _, proj = bundle.projection.piece("")
    return intersection_space(
        name,
        bundle.total.carrier,
        (
            (bundle.total, (("", "", ExprVec.identity(d)),)),
            (orbits, (("", "", proj),)),
        ),
    )


# ---------------------------------------------------------------------------
# one-parameter families and velocity vectors
# ---------------------------------------------------------------------------


def _check_family(f: ExprVec, n: int) -> None:
    if f.arity != 1 + n or len(f.components) != n:
        raise ValueError("a family maps (t, x) to a point of the same space")
    at_zero = ExprVec(
        [
            c.compose([Expr.zero(n)] + [Expr.variable(n, i) for i in range(n)])
            for c in f.components
        ]
    )
    if at_zero != ExprVec.identity(n):
        raise ValueError("family is not the identity at parameter 0")


def family_velocity(word, x) -> Point:
    """Derivative at parameter 0 of t -> f1(t, f2(t, ... , x)) at x."""
    if isinstance(word, ExprVec):
        word = (word,)
    vec = word[0]
    t = Expr.variable(vec.arity, 0)
    for nxt in word[1:]:
        vec = ExprVec([c.compose([t] + list(nxt.components)) for c in vec.components])
    at = (Fraction(0),) + tuple(Fraction(c) for c in x)
    return tuple(c.differentiate(0).eval(at) for c in vec.components)


@dataclass(frozen=True)
class AdditivityReport:
    entries: tuple[tuple[int, int, Point, Point, Point, Point, bool], ...]

    @property
    def ok(self) -> bool:
        return all(entry[-1] for entry in self.entries)


def g_tangent_additivity(
    space: DiffSpace, families: Sequence[ExprVec], points: Sequence[Point]
) -> AdditivityReport:
    """The velocity of a product family is the exact sum of the factor
    velocities, in both orders."""
    n = space.carrier.ambient_dim("")
    for f in families:
        _check_family(f, n)
    entries = []
    for i, fi in enumerate(families):
        for j, fj in enumerate(families):
            for p in points:
                p = tuple(Fraction(c) for c in p)
                v1 = family_velocity(fi, p)
                v2 = family_velocity(fj, p)
                both = family_velocity((fi, fj), p)
                expected = tuple(a + b for a, b in zip(v1, v2))
                entries.append((i, j, p, v1, v2, both, both == expected))
    return AdditivityReport(tuple(entries))


# ---------------------------------------------------------------------------
# frames over a fiber
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """A linear isomorphism from the typical fiber onto one fiber,
    stored as a matrix in chart coordinates."""

    basepoint: Point
    matrix: tuple[tuple[Fraction, ...], ...]
    inverse: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.matrix)


def frame(bundle: PseudoBundle, x, rows) -> Frame:
    x = tuple(Fraction(c) for c in x)
    chart = fiber_at(bundle, x)
    rows = tuple(tuple(Fraction(v) for v in row) for row in rows)
    if len(rows) != chart.dim or any(len(r) != chart.dim for r in rows):
        raise ValueError(f"a frame at {x} is a {chart.dim} by {chart.dim} matrix")
    inverse = invert_rational(rows)
    if inverse is None:
        raise ValueError("a frame must be invertible")
    return Frame(x, rows, tuple(tuple(r) for r in inverse))


def random_frame(bundle: PseudoBundle, x, rng) -> Frame:
    chart = fiber_at(bundle, tuple(Fraction(c) for c in x))
    while True:
        rows = [
            [Fraction(rng.randint(-4, 4)) for _ in range(chart.dim)]
            for _ in range(chart.dim)
        ]
        if invert_rational(rows) is not None:
            return frame(bundle, x, rows)


def _mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m))
        for i in range(n)
    )


def _mat_identity(n):
    return tuple(tuple(Fraction(i == j) for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class FrameReport:
    pairs: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def frame_bundle_check(
    bundle: PseudoBundle, pairs: Sequence[tuple[Frame, Frame]]
) -> FrameReport:
    """Free and transitive frame actions, checked exactly per pair.

    For frames f1, f2 over one point: f2 f1^-1 is an automorphism of the
    fiber, g = f1^-1 f2 is the unique typical-fiber change with
    f1 g = f2, and f -> f1^-1 f identifies the frames over the point
    with the invertible matrices.
    """
    failures = []
    for k, (f1, f2) in enumerate(pairs):
        if f1.basepoint != f2.basepoint:
            failures.append(f"pair {k}: frames over different points")
            continue
        left = _mat_mul(f2.matrix, f1.inverse)
        if invert_rational(left) is None:
            failures.append(f"pair {k}: fiber change is singular")
        g = _mat_mul(f1.inverse, f2.matrix)
        if invert_rational(g) is None:
            failures.append(f"pair {k}: typical-fiber change is singular")
        if _mat_mul(f1.matrix, g) != f2.matrix:
            failures.append(f"pair {k}: f1 g does not reach f2")
        # uniqueness: any solution h has f1 (h - g) = 0, and f1 is
        # injective, so solve once more and compare
        h = _mat_mul(f1.inverse, _mat_mul(f1.matrix, g))
        if h != g:
            failures.append(f"pair {k}: the connecting change is not unique")
        ident = _mat_mul(f1.inverse, f1.matrix)
        if ident != _mat_identity(f1.dim):
            failures.append(f"pair {k}: identification misses the identity")
    return FrameReport(len(pairs), tuple(failures))


# ---------------------------------------------------------------------------
# free right actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumReport:
    smooth_failures: tuple[str, ...]
    freeness_failures: tuple[str, ...]
    projection: Verdict

    @property
    def ok(self) -> bool:
        return (
            not self.smooth_failures
            and not self.freeness_failures
            and self.projection.is_yes
        )


def quantum_structure_check(
    space: DiffSpace,
    actions: Sequence[SmoothMap],
    inverses: Sequence[SmoothMap],
    points: Sequence[Point] | None = None,
    word_length: int = 4,
    budget: int = DEFAULT_BUDGET,
) -> QuantumReport:
    """A right action that is smooth and free, with a subduction onto
    the orbit quotient."""
    n = space.carrier.ambient_dim("")
    if points is None:
        points = space.sample_carrier_points("", 10)
    points = [tuple(Fraction(c) for c in p) for p in points]

    smooth_failures = []
    for k, m in enumerate(list(actions) + list(inverses)):
        verdict = is_smooth(m, budget)
        if not verdict.is_yes:
            smooth_failures.append(f"map {k}: {verdict.detail or verdict.status}")
    for k, (a, b) in enumerate(zip(actions, inverses)):
        _, g = a.piece("")
        _, h = b.piece("")
        back = ExprVec([c.compose(h.components) for c in g.components])
        bad = difference_witness(space, back, ExprVec.identity(n), budget)
        if bad:
            smooth_failures.append(f"pair {k} does not invert: {bad}")

    # freely reduced words of bounded length, acting on sampled points
    letters = []
    for i, (a, b) in enumerate(zip(actions, inverses)):
        letters.append((i + 1, a.piece("")[1]))
        letters.append((-(i + 1), b.piece("")[1]))
    freeness_failures = []
    frontier = [((), ExprVec.identity(n))]
    for _ in range(word_length):
        nxt = []
        for word, vec in frontier:
            for letter, step in letters:
                if word and word[-1] == -letter:
                    continue
                new_vec = ExprVec(
                    [c.compose(step.components) for c in vec.components]
                )
                new_word = word + (letter,)
                nxt.append((new_word, new_vec))
                for p in points:
                    if new_vec.eval(p) == p:
                        freeness_failures.append(
                            f"{word_name(new_word)} fixes {p}"
                        )
        frontier = nxt

    relations = tuple(
        RelationPair("", ExprVec.identity(n), "", m.piece("")[1], Domain.full(n))
        for m in actions
    )
    _, projection = quotient_space(f"{space.name}/action", space, relations)
    verdict = is_subduction(projection, budget)
    return QuantumReport(tuple(smooth_failures), tuple(freeness_failures), verdict)
