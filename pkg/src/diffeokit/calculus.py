"""Differential forms, endomorphism fields, and connections over a bundle.

Forms carry one antisymmetric coefficient tensor per stored plot and extend
to derived plots by pullback along declared factorizations.  Connection data
follows the same pattern: coefficient matrices per plot and tangent
direction, with the defining laws checked symbolically rather than sampled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import Callable, Mapping, Sequence

from .bundles import BundleMorphism, PseudoBundle, invert_isomorphism
from .domains import Domain
from .expr import Expr, ExprError, ExprVec
from .linalg import Matrix, affine_parts, invert_rational, solve_affine
from .spaces import (
    DEFAULT_BUDGET,
    AlgebraicCarrier,
    DiffSpace,
    EuclideanCarrier,
    Obstruction,
    Plot,
    RuleCert,
    Verdict,
    euclidean_space,
    intersection_space,
    is_plot,
    product_space,
    pushforward_space,
    subset_space,
)

Key = tuple[int, ...]
Packed = tuple[tuple[Key, ExprVec], ...]


def _det(rows: Sequence[Sequence[Expr]], arity: int) -> Expr:
    """Cofactor expansion; fine for the small minors that show up here."""
    if not rows:
        return Expr.one(arity)
    if len(rows) == 1:
        return rows[0][0]
    total = Expr.zero(arity)
    for col in range(len(rows)):
        minor = [list(r[:col]) + list(r[col + 1 :]) for r in rows[1:]]
        term = rows[0][col] * _det(minor, arity)
        total = total + term if col % 2 == 0 else total - term
    return total


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotForm:
    """A degree-n form as a family of coefficient tensors, one per plot.

    Coefficients are keyed by strictly increasing index tuples into the
    plot's domain directions; values are expression vectors in the domain
    variables, of a fixed length shared by all plots.
    """

    degree: int
    value_dim: int
    entries: tuple[tuple[Plot, Packed], ...]

    def plots(self) -> tuple[Plot, ...]:
        return tuple(p for p, _ in self.entries)

    def coefficients(self, plot: Plot) -> dict[Key, ExprVec]:
        for stored, packed in self.entries:
            if stored.component == plot.component and stored.map == plot.map:
                return dict(packed)
        raise KeyError("no coefficients stored for this plot")

    def coefficient(self, plot: Plot, key: Key) -> ExprVec:
        found = self.coefficients(plot).get(tuple(key))
        if found is not None:
            return found
        m = plot.domain.dim
        return ExprVec([Expr.zero(m)] * self.value_dim)

    def evaluate(self, plot: Plot, vectors: Sequence[ExprVec]) -> ExprVec:
        """Apply the skew-multilinear extension to tangent-vector expressions.

        Vector arities may exceed the plot's domain dimension; extra
        variables are treated as symbolic parameters.
        """
        if len(vectors) != self.degree:
            raise ValueError("argument count does not match the degree")
        m = plot.domain.dim
        arity = max([m] + [v.arity for v in vectors])
        lift = [Expr.variable(arity, t) for t in range(m)]
        total = [Expr.zero(arity) for _ in range(self.value_dim)]
        for key, value in self.coefficients(plot).items():
            minor = [[vectors[a].components[i] for i in key] for a in range(self.degree)]
            factor = _det(minor, arity)
            moved = [c.compose(lift) for c in value.components]
            total = [t + factor * c for t, c in zip(total, moved)]
        return ExprVec(total)


@dataclass(frozen=True)
class OverlapPair:
    """A declared factorization fine = coarse ∘ factor between two plots."""

    fine: Plot
    coarse: Plot
    factor: ExprVec


def plot_form(
    degree: int,
    value_dim: int,
    assignments: Sequence[tuple[Plot, Mapping]],
) -> PlotForm:
    """Assemble a form from per-plot coefficient dictionaries.

    A bare int key abbreviates a 1-tuple, a bare string value a
    1-component coefficient.
    """
    entries = []
    for plot, coeffs in assignments:
        m = plot.domain.dim
        packed = {}
        for key, value in coeffs.items():
            if isinstance(key, int):
                key = (key,)
            key = tuple(key)
            if len(key) != degree:
                raise ValueError(f"coefficient key {key} does not have degree {degree}")
            if any(not 0 <= i < m for i in key) or any(
                a >= b for a, b in zip(key, key[1:])
            ):
                raise ValueError(f"coefficient key {key} is not strictly increasing")
            if isinstance(value, str):
                value = (value,)
            if not isinstance(value, ExprVec):
                value = ExprVec.parse(list(value), m)
            if len(value) != value_dim:
                raise ValueError("coefficient value has the wrong length")
            packed[key] = value
        entries.append((plot, tuple(sorted(packed.items()))))
    return PlotForm(degree, value_dim, tuple(entries))


def pullback_coefficients(
    coefficients: Mapping[Key, ExprVec],
    factor: ExprVec,
    degree: int,
    value_dim: int,
) -> dict[Key, ExprVec]:
    """g* in coordinates: values compose with g, keys contract the Jacobian."""
    fine_dim = factor.arity
    jac = [
        [factor.components[j].differentiate(s) for s in range(fine_dim)]
        for j in range(len(factor))
    ]
    out: dict[Key, ExprVec] = {}
    for fine_key in combinations(range(fine_dim), degree):
        acc = [Expr.zero(fine_dim) for _ in range(value_dim)]
        for coarse_key, value in coefficients.items():
            det = _det([[jac[j][s] for s in fine_key] for j in coarse_key], fine_dim)
            if det.is_zero():
                continue
            moved = value.compose(factor)
            acc = [a + det * v for a, v in zip(acc, moved.components)]
        if not all(a.is_zero() for a in acc):
            out[fine_key] = ExprVec(acc)
    return out


def validate_form(form: PlotForm, pairs: Sequence[OverlapPair] = ()) -> Verdict:
    """Check storage discipline and overlap compatibility, with witnesses."""
    problems: list[str] = []
    for idx, (plot, packed) in enumerate(form.entries):
        m = plot.domain.dim
        for key, value in packed:
            if len(key) != form.degree:
                problems.append(f"plot {idx}: key {key} has the wrong degree")
            elif any(not 0 <= i < m for i in key):
                problems.append(f"plot {idx}: key {key} leaves the domain directions")
            elif any(a >= b for a, b in zip(key, key[1:])):
                problems.append(f"plot {idx}: key {key} breaks antisymmetric storage")
            if len(value) != form.value_dim:
                problems.append(f"plot {idx}: value at {key} has the wrong length")
            elif value.arity != m:
                problems.append(f"plot {idx}: value at {key} has the wrong arity")
    for idx, pair in enumerate(pairs):
        if (
            pair.factor.arity != pair.fine.domain.dim
            or len(pair.factor) != pair.coarse.domain.dim
        ):
            problems.append(f"pair {idx}: factor shape does not match the plots")
            continue
        if pair.coarse.map.compose(pair.factor) != pair.fine.map:
            problems.append(f"pair {idx}: factor does not reproduce the fine plot")
            continue
        try:
            fine_c = form.coefficients(pair.fine)
            coarse_c = form.coefficients(pair.coarse)
        except KeyError:
            problems.append(f"pair {idx}: a plot of the pair is not stored")
            continue
        expected = pullback_coefficients(
            coarse_c, pair.factor, form.degree, form.value_dim
        )
        fine_dim = pair.fine.domain.dim
        zero = ExprVec([Expr.zero(fine_dim)] * form.value_dim)
        for key in sorted(set(expected) | set(fine_c)):
            want = expected.get(key, zero)
            have = fine_c.get(key, zero)
            for i in range(form.value_dim):
                if want.components[i] != have.components[i]:
                    problems.append(
                        f"pair {idx}: pullback mismatch at key {key}, component {i}"
                    )
                    break
    if problems:
        extra = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        return Verdict.no(Obstruction("form", detail=problems[0] + extra))
    return Verdict.yes(RuleCert("form-compatibility"))


def form_d(form: PlotForm) -> PlotForm:
    """Plotwise exterior differential of the coefficient tensor."""
    entries = []
    for plot, packed in form.entries:
        m = plot.domain.dim
        coeffs = dict(packed)
        out: dict[Key, list[Expr]] = {}
        for key in combinations(range(m), form.degree + 1):
            acc = [Expr.zero(m) for _ in range(form.value_dim)]
            for t, j in enumerate(key):
                value = coeffs.get(key[:t] + key[t + 1 :])
                if value is None:
                    continue
                for i, comp in enumerate(value.components):
                    term = comp.differentiate(j)
                    acc[i] = acc[i] + term if t % 2 == 0 else acc[i] - term
            if not all(a.is_zero() for a in acc):
                out[key] = acc
        entries.append(
            (plot, tuple((k, ExprVec(v)) for k, v in sorted(out.items())))
        )
    return PlotForm(form.degree + 1, form.value_dim, tuple(entries))


def forms_equal(left: PlotForm, right: PlotForm) -> bool:
    """Coefficientwise canonical equality, missing keys reading as zero."""
    if left.degree != right.degree or left.value_dim != right.value_dim:
        return False
    if len(left.entries) != len(right.entries):
        return False
    for plot, packed in left.entries:
        try:
            other = right.coefficients(plot)
        except KeyError:
            return False
        mine = dict(packed)
        m = plot.domain.dim
        zero = ExprVec([Expr.zero(m)] * left.value_dim)
        for key in set(mine) | set(other):
            if mine.get(key, zero) != other.get(key, zero):
                return False
    return True


# ---------------------------------------------------------------------------
# the automorphism action on forms
# ---------------------------------------------------------------------------


def _factor_map(target: ExprVec, through: ExprVec) -> ExprVec | None:
    """Solve through ∘ h = target for h; affine through maps only."""
    if len(through) != len(target):
        return None
    if through.arity == len(through) and through == ExprVec.identity(through.arity):
        return target
    if through.arity == target.arity and through == target:
        return ExprVec.identity(target.arity)
    parts = affine_parts(through)
    if parts is None:
        return None
    rhs = [
        c - Expr.constant(target.arity, b)
        for c, b in zip(target.components, parts.offset)
    ]
    solved = solve_affine(parts.matrix, rhs)
    if solved is None:
        return None
    h = ExprVec(solved.particular)
    return h if through.compose(h) == target else None


def _coefficients_along(form: PlotForm, target: ExprVec) -> dict[Key, ExprVec]:
    """Coefficients at a derived plot, through a stored factorization."""
    for stored, packed in form.entries:
        if stored.map == target:
            return dict(packed)
    for stored, packed in form.entries:
        h = _factor_map(target, stored.map)
        if h is not None:
            return pullback_coefficients(
                dict(packed), h, form.degree, form.value_dim
            )
    raise ExprError("transported plot has no certificate through stored plots")


def _fiber_action(bundle: PseudoBundle, phi: ExprVec) -> Matrix:
    """Linear part of an automorphism on fiber coordinates, over base vars."""
    n, d, k = bundle.base_dim, bundle.ambient_dim, bundle.fiber_block
    rows = []
    for i in range(k):
        comp = phi.components[n + i]
        row = [comp.differentiate(n + j) for j in range(k)]
        recon = Expr.zero(d)
        for j, entry in enumerate(row):
            if any(not entry.differentiate(n + t).is_zero() for t in range(k)):
                raise ExprError("fiber action is not linear over the base")
            recon = recon + entry * Expr.variable(d, n + j)
        if not (comp - recon).is_zero():
            raise ExprError("fiber action is not linear over the base")
        rows.append(row)
    return Matrix(rows)


def aut_action_on_forms(
    bundle: PseudoBundle,
    aut: BundleMorphism,
    form: PlotForm,
    inverse: BundleMorphism | None = None,
    budget: int = DEFAULT_BUDGET,
) -> PlotForm:
    """Transport a form along a bundle automorphism.

    The result at a stored plot reads the source form at the plot pulled
    back through the inverse base map, then pushes values through the
    fiber action over that plot.
    """
    if form.value_dim != bundle.fiber_block:
        raise ValueError("form values do not match the bundle's fiber block")
    if inverse is None:
        inverse = invert_isomorphism(aut, bundle, bundle, budget=budget)
    _, phi = aut.phi.piece("")
    _, back = inverse.varphi.piece("")
    action = _fiber_action(bundle, phi)
    n, k = bundle.base_dim, bundle.fiber_block
    entries = []
    for plot, _ in form.entries:
        m = plot.domain.dim
        moved = back.compose(plot.map)
        coeffs = _coefficients_along(form, moved)
        # the fiber action is applied over the pulled-back base points
        pad = list(moved.components) + [Expr.zero(m)] * k
        acted = [[e.compose(pad) for e in row] for row in action.rows]
        packed = []
        for key, value in sorted(coeffs.items()):
            new = [
                sum(
                    (acted[i][j] * value.components[j] for j in range(k)),
                    Expr.zero(m),
                )
                for i in range(k)
            ]
            if not all(c.is_zero() for c in new):
                packed.append((key, ExprVec(new)))
        entries.append((plot, tuple(packed)))
    return PlotForm(form.degree, form.value_dim, tuple(entries))


# ---------------------------------------------------------------------------
# endomorphism fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndField:
    """A family of fiber endomorphisms, conjugated into a frame family."""

    base_plot: Plot
    frame: Matrix
    frame_inverse: Matrix
    rep: Matrix

    @property
    def dim(self) -> int:
        return self.rep.shape[0]

    def fiber_map(self) -> Matrix:
        """The canonical representative frame · rep · frame⁻¹."""
        return self.frame * self.rep * self.frame_inverse

    def apply(self, point: Sequence, vector: Sequence) -> tuple[Fraction, ...]:
        """Evaluate at a domain point and act on fiber coordinates."""
        entries = [
            [Expr.constant(0, e.eval(point)) for e in row]
            for row in self.fiber_map().rows
        ]
        lifted = [Expr.constant(0, Fraction(v)) for v in vector]
        return tuple(c.constant_value() for c in Matrix(entries).apply(lifted))


def end_field(base_plot: Plot, frame: Matrix, rep: Matrix) -> EndField:
    """Wrap an L(F)-valued family in a frame family."""
    if frame.shape[0] != frame.shape[1] or frame.shape != rep.shape:
        raise ValueError("frame and representation shapes disagree")
    if frame.arity != base_plot.domain.dim or rep.arity != frame.arity:
        raise ValueError("entries must live over the base plot's domain")
    inverse = frame.try_inverse()
    if inverse is None:
        raise ValueError("frame family is not invertible")
    return EndField(base_plot, frame, inverse, rep)


@dataclass(frozen=True)
class EndFieldOps:
    sum: EndField
    product: EndField
    evaluation: Callable


def end_value(field: EndField, point: Sequence, vector: Sequence):
    return field.apply(point, vector)


def end_field_ops(first: EndField, second: EndField) -> EndFieldOps:
    """Pointwise sum and composition, re-expressed in the first frame."""
    if (
        first.base_plot.component != second.base_plot.component
        or first.base_plot.map != second.base_plot.map
    ):
        raise ValueError("endomorphism fields live over different base families")
    if first.dim != second.dim:
        raise ValueError("fiber dimensions differ")
    m1, m2 = first.fiber_map(), second.fiber_map()

    def wrap(total: Matrix) -> EndField:
        rep = first.frame_inverse * total * first.frame
        return EndField(first.base_plot, first.frame, first.frame_inverse, rep)

    return EndFieldOps(wrap(m1 + m2), wrap(m1 * m2), end_value)


# ---------------------------------------------------------------------------
# the endomorphism diffeologies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffeologyTower:
    """Three diffeologies on endomorphism families over one bundle.

    pair_space: vector-endomorphism pairs whose evaluation and vector
    projections are both plots of the total space.
    family_space: endomorphism families, the image of the pair projection.
    conjugation_space: families reached as frame · rep · frame⁻¹.
    """

    pair_space: DiffSpace
    family_space: DiffSpace
    conjugation_space: DiffSpace
    frame_space: DiffSpace
    evaluation: ExprVec
    vector_projection: ExprVec
    family_projection: ExprVec


def _matrix_of_variables(arity: int, k: int, offset: int) -> Matrix:
    return Matrix(
        [
            [Expr.variable(arity, offset + i * k + j) for j in range(k)]
            for i in range(k)
        ]
    )


def frame_space(bundle: PseudoBundle, plots: Sequence[Plot] = ()) -> DiffSpace:
    """Frames with recorded inverses: (x, f, h) subject to f·h = h·f = 1."""
    n, k = bundle.base_dim, bundle.fiber_block
    arity = n + 2 * k * k
    f = _matrix_of_variables(arity, k, n)
    h = _matrix_of_variables(arity, k, n + k * k)
    eye = Matrix.identity(k, arity)
    eqs = []
    for prod in (f * h, h * f):
        for i in range(k):
            for j in range(k):
                eqs.append(prod.rows[i][j] - eye.rows[i][j])
    space = subset_space(
        f"{bundle.name}-frames",
        euclidean_space(arity),
        eqs,
        generators=plots,
        complete=False,
    )
    for plot in plots:
        verdict = is_plot(space, plot)
        if not verdict.is_yes:
            raise ValueError("a declared frame family leaves the frame carrier")
    return space


def diffeology_tower(
    bundle: PseudoBundle, frame_plots: Sequence[Plot] = ()
) -> DiffeologyTower:
    """Build the pair, family, and conjugation diffeologies over a bundle."""
    n, d, k = bundle.base_dim, bundle.ambient_dim, bundle.fiber_block
    pair_dim = d + k * k

    ev = ExprVec(
        [Expr.variable(pair_dim, i) for i in range(n)]
        + [
            sum(
                (
                    Expr.variable(pair_dim, d + i * k + j)
                    * Expr.variable(pair_dim, n + j)
                    for j in range(k)
                ),
                Expr.zero(pair_dim),
            )
            for i in range(k)
        ]
    )
    vector = ExprVec([Expr.variable(pair_dim, i) for i in range(d)])
    family = ExprVec(
        [Expr.variable(pair_dim, i) for i in range(n)]
        + [Expr.variable(pair_dim, d + t) for t in range(k * k)]
    )

    lifted = tuple(
        eq.compose([Expr.variable(pair_dim, i) for i in range(d)])
        for eq in bundle.total.carrier.equations("")
    )
    carrier = (
        AlgebraicCarrier(pair_dim, lifted) if lifted else EuclideanCarrier(pair_dim)
    )
    # the identity chart generates exactly when both projections certify
    ident = Plot(Domain.full(pair_dim), ExprVec.identity(pair_dim))
    generates = all(
        is_plot(bundle.total, Plot(ident.domain, vec)).is_yes for vec in (ev, vector)
    )
    pair_space = intersection_space(
        f"{bundle.name}-end-pairs",
        carrier,
        parts=[
            (bundle.total, (("", "", ev),)),
            (bundle.total, (("", "", vector),)),
        ],
        generators=(ident,) if generates else (),
    )
    family_space = pushforward_space(
        f"{bundle.name}-end-families",
        EuclideanCarrier(n + k * k),
        pair_space,
        (("", "", family),),
    )

    frames = frame_space(bundle, frame_plots)
    source = product_space(
        f"{frames.name}*reps", frames, euclidean_space(k * k)
    )
    src_dim = n + 3 * k * k
    mf = _matrix_of_variables(src_dim, k, n)
    mh = _matrix_of_variables(src_dim, k, n + k * k)
    ml = _matrix_of_variables(src_dim, k, n + 2 * k * k)
    conjugated = mf * ml * mh
    ref = ExprVec(
        [Expr.variable(src_dim, i) for i in range(n)]
        + [conjugated.rows[i][j] for i in range(k) for j in range(k)]
    )
    conjugation_space = pushforward_space(
        f"{bundle.name}-conjugations",
        EuclideanCarrier(n + k * k),
        source,
        (("", "", ref),),
    )
    return DiffeologyTower(
        pair_space,
        family_space,
        conjugation_space,
        frames,
        ev,
        vector,
        family,
    )


# ---------------------------------------------------------------------------
# covariant derivatives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovariantDerivative:
    """Connection coefficients per plot: one fiber matrix per direction."""

    fiber_dim: int
    entries: tuple[tuple[Plot, tuple[Matrix, ...]], ...]

    def plots(self) -> tuple[Plot, ...]:
        return tuple(p for p, _ in self.entries)

    def coefficients(self, plot: Plot) -> tuple[Matrix, ...]:
        for stored, mats in self.entries:
            if stored.component == plot.component and stored.map == plot.map:
                return mats
        raise KeyError("no coefficients stored for this plot")


def covariant_derivative(
    fiber_dim: int,
    assignments: Sequence[tuple[Plot, Sequence[Matrix | Sequence[Sequence[str]]]]],
) -> CovariantDerivative:
    """Assemble a covariant derivative from per-plot coefficient matrices."""
    entries = []
    for plot, mats in assignments:
        m = plot.domain.dim
        packed = []
        for mat in mats:
            if not isinstance(mat, Matrix):
                mat = Matrix(
                    [[Expr.parse(text, m) for text in row] for row in mat]
                )
            if mat.shape != (fiber_dim, fiber_dim) or mat.arity != m:
                raise ValueError("coefficient matrix shape or arity is wrong")
            packed.append(mat)
        if len(packed) != m:
            raise ValueError("one coefficient matrix per domain direction")
        entries.append((plot, tuple(packed)))
    return CovariantDerivative(fiber_dim, tuple(entries))


def flat_connection(fiber_dim: int, plots: Sequence[Plot]) -> CovariantDerivative:
    """All coefficients zero; every bundle fixture admits it."""
    entries = []
    for plot in plots:
        m = plot.domain.dim
        zero = Matrix(
            [[Expr.zero(m) for _ in range(fiber_dim)] for _ in range(fiber_dim)]
        )
        entries.append((plot, tuple(zero for _ in range(m))))
    return CovariantDerivative(fiber_dim, tuple(entries))


def covariant_apply(
    nabla: CovariantDerivative, plot: Plot, direction: ExprVec, section: ExprVec
) -> ExprVec:
    """Directional derivative of the section plus the coefficient action."""
    mats = nabla.coefficients(plot)
    m = plot.domain.dim
    if direction.arity != m or len(direction) != m:
        raise ValueError("direction field must match the domain dimension")
    if section.arity != m or len(section) != nabla.fiber_dim:
        raise ValueError("section must have one component per fiber direction")
    out = []
    for i in range(nabla.fiber_dim):
        acc = Expr.zero(m)
        for j in range(m):
            acc = acc + direction.components[j] * section.components[i].differentiate(j)
            row = mats[j].rows[i]
            acted = sum(
                (row[t] * section.components[t] for t in range(nabla.fiber_dim)),
                Expr.zero(m),
            )
            acc = acc + direction.components[j] * acted
        out.append(acc)
    return ExprVec(out)


def _monomials(arity: int, degree: int):
    for total in range(degree + 1):
        for picks in combinations_with_replacement(range(arity), total):
            mono = [0] * arity
            for v in picks:
                mono[v] += 1
            yield tuple(mono)


def _random_poly(rng: random.Random, arity: int, degree: int) -> Expr:
    terms = {}
    for mono in _monomials(arity, degree):
        c = rng.randint(-3, 3)
        if c:
            terms[mono] = Fraction(c)
    if not terms:
        terms[(0,) * arity] = Fraction(1)
    return Expr(arity, terms)


def _compose_matrix(mat: Matrix, inner: ExprVec) -> Matrix:
    return Matrix([[e.compose(inner) for e in row] for row in mat.rows])


def validate_covariant(
    nabla: CovariantDerivative,
    pairs: Sequence[OverlapPair] = (),
    rng: random.Random | None = None,
    trials: int = 3,
    degree: int = 3,
) -> Verdict:
    """Tensoriality, Leibniz, and the reparametrization law, symbolically.

    The function and field arguments are random polynomials of bounded
    degree, but each law is compared as a canonical identity in the domain
    variables, not at sample points.
    """
    rng = rng or random.Random(0)
    k = nabla.fiber_dim
    problems: list[str] = []
    for idx, (plot, mats) in enumerate(nabla.entries):
        m = plot.domain.dim
        if len(mats) != m:
            problems.append(f"plot {idx}: one coefficient matrix per direction")
            continue
        for _ in range(trials):
            f = _random_poly(rng, m, degree)
            x = ExprVec([_random_poly(rng, m, degree) for _ in range(m)])
            y = ExprVec([_random_poly(rng, m, degree) for _ in range(k)])
            fx = ExprVec([f * c for c in x.components])
            lhs = covariant_apply(nabla, plot, fx, y)
            rhs = covariant_apply(nabla, plot, x, y)
            if any(
                l != f * r for l, r in zip(lhs.components, rhs.components)
            ):
                problems.append(f"plot {idx}: not tensorial in the direction")
                break
            fy = ExprVec([f * c for c in y.components])
            lhs = covariant_apply(nabla, plot, x, fy)
            xf = sum(
                (x.components[j] * f.differentiate(j) for j in range(m)),
                Expr.zero(m),
            )
            want = [
                xf * y.components[i] + f * rhs.components[i] for i in range(k)
            ]
            if any(l != w for l, w in zip(lhs.components, want)):
                problems.append(f"plot {idx}: Leibniz fails")
                break
    for idx, pair in enumerate(pairs):
        if pair.coarse.map.compose(pair.factor) != pair.fine.map:
            problems.append(f"pair {idx}: factor does not reproduce the fine plot")
            continue
        try:
            fine_mats = nabla.coefficients(pair.fine)
            coarse_mats = nabla.coefficients(pair.coarse)
        except KeyError:
            problems.append(f"pair {idx}: a plot of the pair is not stored")
            continue
        fine_dim = pair.fine.domain.dim
        for s in range(fine_dim):
            want = None
            for j in range(len(pair.factor)):
                part = _compose_matrix(coarse_mats[j], pair.factor).scale(
                    pair.factor.components[j].differentiate(s)
                )
                want = part if want is None else want + part
            if want != fine_mats[s]:
                problems.append(
                    f"pair {idx}: reparametrized coefficients differ in direction {s}"
                )
                break
    if problems:
        extra = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        return Verdict.no(Obstruction("covariant", detail=problems[0] + extra))
    return Verdict.yes(RuleCert("covariant-laws"))


def connections_equal(left: CovariantDerivative, right: CovariantDerivative) -> bool:
    if left.fiber_dim != right.fiber_dim:
        return False
    if len(left.entries) != len(right.entries):
        return False
    for plot, mats in left.entries:
        try:
            other = right.coefficients(plot)
        except KeyError:
            return False
        if tuple(mats) != tuple(other):
            return False
    return True


def affine_structure(
    first: CovariantDerivative, second: CovariantDerivative
) -> PlotForm:
    """The difference form: its value at (j,) flattens A¹_j − A²_j.

    The derivative terms of the two operators cancel, so the difference is
    tensorial in the section and lives as a matrix-valued 1-form.
    """
    if first.fiber_dim != second.fiber_dim:
        raise ValueError("fiber dimensions differ")
    if len(first.entries) != len(second.entries):
        raise ValueError("connections are stored on different plot families")
    k = first.fiber_dim
    entries = []
    for plot, mats in first.entries:
        try:
            other = second.coefficients(plot)
        except KeyError:
            raise ValueError("connections are stored on different plot families")
        packed = []
        for j in range(plot.domain.dim):
            diff = mats[j] - other[j]
            flat = [diff.rows[a][b] for a in range(k) for b in range(k)]
            if not all(e.is_zero() for e in flat):
                packed.append(((j,), ExprVec(flat)))
        entries.append((plot, tuple(packed)))
    return PlotForm(1, k * k, tuple(entries))


def translate(nabla: CovariantDerivative, form: PlotForm) -> CovariantDerivative:
    """Shift the connection coefficients by a matrix-valued 1-form."""
    k = nabla.fiber_dim
    if form.degree != 1 or form.value_dim != k * k:
        raise ValueError("form does not match the connection's fiber block")
    entries = []
    for plot, mats in nabla.entries:
        try:
            coeffs = form.coefficients(plot)
        except KeyError:
            raise ValueError("form is stored on a different plot family")
        m = plot.domain.dim
        packed = []
        for j in range(m):
            value = coeffs.get((j,))
            if value is None:
                packed.append(mats[j])
                continue
            delta = Matrix(
                [
                    [value.components[a * k + b] for b in range(k)]
                    for a in range(k)
                ]
            )
            packed.append(mats[j] + delta)
        entries.append((plot, tuple(packed)))
    return CovariantDerivative(k, tuple(entries))


# ---------------------------------------------------------------------------
# connection 1-forms on frame families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionOneForm:
    """A Lie-algebra valued 1-form on frame families, given by a rule.

    The rule assigns per-direction coefficient matrices to a frame-family
    map (x, f, h) with h the recorded inverse.  A rule, rather than stored
    tensors, keeps right-translates of a family evaluable without a new
    factorization certificate.
    """

    base_dim: int
    dim_f: int
    rule: Callable[[ExprVec], tuple[Matrix, ...]]

    def coefficients(self, frame_map: ExprVec) -> tuple[Matrix, ...]:
        return self.rule(frame_map)


def _frame_blocks(frame_map: ExprVec, base_dim: int, k: int) -> tuple[Matrix, Matrix]:
    f = Matrix(
        [
            [frame_map.components[base_dim + i * k + j] for j in range(k)]
            for i in range(k)
        ]
    )
    h = Matrix(
        [
            [
                frame_map.components[base_dim + k * k + i * k + j]
                for j in range(k)
            ]
            for i in range(k)
        ]
    )
    return f, h


def right_translate(
    frame_map: ExprVec, sample: Sequence[Sequence], base_dim: int, k: int
) -> ExprVec:
    """Translate a frame family by a constant invertible matrix."""
    inverse = invert_rational([[Fraction(v) for v in row] for row in sample])
    if inverse is None:
        raise ValueError("sample matrix is not invertible")
    arity = frame_map.arity
    f, h = _frame_blocks(frame_map, base_dim, k)
    g = Matrix(
        [[Expr.constant(arity, Fraction(v)) for v in row] for row in sample]
    )
    ginv = Matrix(
        [[Expr.constant(arity, v) for v in row] for row in inverse]
    )
    fg = f * g
    gh = ginv * h
    comps = list(frame_map.components[:base_dim])
    comps += [fg.rows[i][j] for i in range(k) for j in range(k)]
    comps += [gh.rows[i][j] for i in range(k) for j in range(k)]
    return ExprVec(comps)


def maurer_cartan(base_dim: int, dim_f: int) -> ConnectionOneForm:
    """θ = f⁻¹·df, using the recorded inverse block."""

    def rule(frame_map: ExprVec) -> tuple[Matrix, ...]:
        f, h = _frame_blocks(frame_map, base_dim, dim_f)
        out = []
        for s in range(frame_map.arity):
            df = Matrix(
                [[e.differentiate(s) for e in row] for row in f.rows]
            )
            out.append(h * df)
        return tuple(out)

    return ConnectionOneForm(base_dim, dim_f, rule)


def zero_connection_form(base_dim: int, dim_f: int) -> ConnectionOneForm:
    def rule(frame_map: ExprVec) -> tuple[Matrix, ...]:
        zero = Matrix(
            [
                [Expr.zero(frame_map.arity) for _ in range(dim_f)]
                for _ in range(dim_f)
            ]
        )
        return tuple(zero for _ in range(frame_map.arity))

    return ConnectionOneForm(base_dim, dim_f, rule)


def raw_frame_differential(base_dim: int, dim_f: int) -> ConnectionOneForm:
    """θ = df without the frame factor; fails equivariance when dim_f > 0."""

    def rule(frame_map: ExprVec) -> tuple[Matrix, ...]:
        f, _ = _frame_blocks(frame_map, base_dim, dim_f)
        return tuple(
            Matrix([[e.differentiate(s) for e in row] for row in f.rows])
            for s in range(frame_map.arity)
        )

    return ConnectionOneForm(base_dim, dim_f, rule)


def check_connection_form(
    theta: ConnectionOneForm,
    plots: Sequence[Plot],
    samples: Sequence[Sequence[Sequence]],
) -> Verdict:
    """Right-translation equivariance on every frame plot and sample matrix."""
    n, k = theta.base_dim, theta.dim_f
    prepared = []
    for sample in samples:
        rows = [[Fraction(v) for v in row] for row in sample]
        inverse = invert_rational(rows)
        if inverse is None:
            raise ValueError("sample matrix is not invertible")
        prepared.append((rows, inverse))
    for p_idx, plot in enumerate(plots):
        m = plot.domain.dim
        if len(plot.map) != n + 2 * k * k:
            return Verdict.no(
                Obstruction(
                    "frame-shape",
                    detail=f"plot {p_idx} does not carry (x, f, h) blocks",
                )
            )
        f, h = _frame_blocks(plot.map, n, k)
        if f * h != Matrix.identity(k, plot.map.arity):
            return Verdict.no(
                Obstruction(
                    "frame-shape",
                    detail=f"plot {p_idx} does not record an exact inverse",
                )
            )
        base = theta.rule(plot.map)
        for s_idx, (rows, inverse) in enumerate(prepared):
            moved = theta.rule(right_translate(plot.map, rows, n, k))
            arity = plot.map.arity
            g = Matrix(
                [[Expr.constant(arity, v) for v in row] for row in rows]
            )
            ginv = Matrix(
                [[Expr.constant(arity, v) for v in row] for row in inverse]
            )
            for direction in range(m):
                want = ginv * base[direction] * g
                have = moved[direction]
                if have != want:
                    spot = next(
                        (a, b)
                        for a in range(k)
                        for b in range(k)
                        if have.rows[a][b] != want.rows[a][b]
                    )
                    return Verdict.no(
                        Obstruction(
                            "equivariance",
                            detail=(
                                f"plot {p_idx}, sample {s_idx}, direction "
                                f"{direction}, entry {spot}"
                            ),
                        )
                    )
    return Verdict.yes(
        RuleCert("equivariance"),
        detail="frame families stay in one typical-fiber component",
    )
