"""Bundle assembly, fiber charts, morphism inversion, deformation to zero."""

from fractions import Fraction

import pytest

from diffeokit.bundles import (
    BundleMorphism,
    InvariantViolation,
    NoInverseFound,
    build_bundle,
    check_morphism,
    fiber_at,
    homotopy_to_zero,
    invert_isomorphism,
    zero_bundle,
)
from diffeokit.domains import Domain
from diffeokit.expr import ExprVec
from diffeokit.spaces import (
    AlgebraicCarrier,
    Plot,
    euclidean_space,
    generated_space,
    identity_map,
    smooth_map,
)


def line_bundle():
    total = euclidean_space(2, "line-E")
    base = euclidean_space(1, "line-X")
    return build_bundle(
        "line",
        total,
        base,
        add=["x0", "x1 + x3"],
        scale=["x1", "x0*x2"],
        zero=["x0", "0"],
    )


def cross_space():
    carrier = AlgebraicCarrier(2, (ExprVec.parse(["x0*x1"], 2).components[0],))
    gens = (
        Plot(Domain.full(1), ExprVec.parse(["x0", "0"], 1)),
        Plot(Domain.full(1), ExprVec.parse(["0", "x0"], 1)),
    )
    return generated_space("cross", carrier, gens)


def cross_bundle():
    eqs = tuple(ExprVec.parse(["x0*x1", "x1*x2", "x0*x3"], 4).components)
    gens = (
        Plot(Domain.full(2), ExprVec.parse(["x0", "0", "x1", "0"], 2)),
        Plot(Domain.full(2), ExprVec.parse(["0", "x0", "0", "x1"], 2)),
        Plot(Domain.full(2), ExprVec.parse(["0", "0", "x0", "x1"], 2)),
    )
    total = generated_space("cross-E", AlgebraicCarrier(4, eqs), gens)
    return build_bundle(
        "cross",
        total,
        cross_space(),
        add=["x0", "x1", "x2 + x6", "x3 + x7"],
        scale=["x1", "x2", "x0*x3", "x0*x4"],
        zero=["x0", "x1", "0", "0"],
    )


class TestConstruction:
    def test_line_bundle_builds(self):
        b = line_bundle()
        chart = fiber_at(b, (Fraction(2),))
        assert chart.dim == 1
        assert chart.origin == (Fraction(2), Fraction(0))
        assert chart.basis == ((Fraction(0), Fraction(1)),)

    def test_cross_bundle_fiber_dimension_jumps(self):
        b = cross_bundle()
        assert fiber_at(b, (Fraction(0), Fraction(0))).dim == 2
        assert fiber_at(b, (Fraction(1), Fraction(0))).dim == 1
        assert fiber_at(b, (Fraction(0), Fraction(3))).dim == 1
        chart = fiber_at(b, (Fraction(1), Fraction(0)))
        assert chart.basis == ((Fraction(0),) * 2 + (Fraction(1), Fraction(0)),)

    def test_shifted_addition_is_rejected(self):
        total = euclidean_space(2)
        base = euclidean_space(1)
        with pytest.raises(InvariantViolation) as err:
            build_bundle(
                "bad", total, base,
                add=["x0", "x1 + x3 + 1"],
                scale=["x1", "x0*x2"],
                zero=["x0", "0"],
            )
        assert err.value.check == "fiber-axioms"
        assert "neutral" in err.value.witness

    def test_base_moving_addition_is_rejected(self):
        total = euclidean_space(2)
        base = euclidean_space(1)
        with pytest.raises(InvariantViolation) as err:
            build_bundle(
                "bad", total, base,
                add=["x0 + 1", "x1 + x3"],
                scale=["x1", "x0*x2"],
                zero=["x0", "0"],
            )
        assert err.value.check == "add-fiberwise"

    def test_zero_bundle_has_point_fibers(self):
        zb = zero_bundle(euclidean_space(2))
        assert fiber_at(zb, (Fraction(1), Fraction(-3))).dim == 0


class TestMorphisms:
    def test_fiberwise_stretch_is_an_isomorphism(self):
        b = line_bundle()
        stretch = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "(x0^2 + 1)*x1"]),
            identity_map(b.base),
        )
        assert check_morphism(stretch, b, b).is_yes
        inverse = invert_isomorphism(stretch, b, b)
        _, vec = inverse.phi.piece("")
        pt = vec.eval((Fraction(1), Fraction(6)))
        assert pt == (Fraction(1), Fraction(3))

    def test_squaring_the_fiber_is_not_additive(self):
        b = line_bundle()
        squared = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "x1^2"]),
            identity_map(b.base),
        )
        verdict = check_morphism(squared, b, b)
        assert verdict.is_no
        assert "additivity" in verdict.obstruction.detail

    def test_collapse_has_no_inverse(self):
        b = line_bundle()
        collapse = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "0"]),
            identity_map(b.base),
        )
        assert check_morphism(collapse, b, b).is_yes
        with pytest.raises(NoInverseFound) as err:
            invert_isomorphism(collapse, b, b)
        assert "not invertible" in err.value.reason

    def test_cross_bundle_doubling_inverts_exactly(self):
        b = cross_bundle()
        double = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "x1", "2*x2", "2*x3"]),
            identity_map(b.base),
        )
        assert check_morphism(double, b, b).is_yes
        inverse = invert_isomorphism(double, b, b)
        _, vec = inverse.phi.piece("")
        assert vec.eval((Fraction(0), Fraction(0), Fraction(4), Fraction(6))) == (
            Fraction(0), Fraction(0), Fraction(2), Fraction(3),
        )

    def test_supplied_inverse_is_verified(self):
        b = line_bundle()
        stretch = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "(x0^2 + 1)*x1"]),
            identity_map(b.base),
        )
        good = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "x1 / (x0^2 + 1)"]),
            identity_map(b.base),
        )
        assert invert_isomorphism(stretch, b, b, supplied=good) is good
        wrong = BundleMorphism(
            smooth_map(b.total, b.total, ["x0", "x1"]),
            identity_map(b.base),
        )
        with pytest.raises(NoInverseFound):
            invert_isomorphism(stretch, b, b, supplied=wrong)


class TestHomotopy:
    def test_line_bundle_deforms_to_zero(self):
        report = homotopy_to_zero(line_bundle())
        assert report.ok
        names = [name for name, _, _ in report.checks]
        assert "projection-subduction" in names
        assert "t0-roundtrip-on-slice" in names
        assert "t1-zero-bundle-inverse" in names

    def test_base_must_be_a_vector_space(self):
        with pytest.raises(ValueError):
            homotopy_to_zero(cross_bundle())
