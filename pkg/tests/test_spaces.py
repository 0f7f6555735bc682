"""Membership, smoothness, and subduction checks on small spaces."""

from fractions import Fraction

import pytest

from diffeokit.domains import Domain
from diffeokit.expr import Expr, ExprVec
from diffeokit.spaces import (
    AlgebraicCarrier,
    CarrierCert,
    ConstantCert,
    EuclideanCarrier,
    FactoredCert,
    GeneratorCert,
    GlueCert,
    Plot,
    RelationPair,
    RuleCert,
    discrete_space,
    euclidean_space,
    generated_space,
    identity_map,
    is_plot,
    is_smooth,
    is_subduction,
    maps_equal_mod_relation,
    plot,
    product_space,
    quotient_space,
    smooth_map,
    subset_space,
    union_space,
    vanishes_on_carrier,
    verify_certificate,
)

R1 = Domain.full(1)
R2 = Domain.full(2)


def axes_cross():
    """The two coordinate axes in the plane, generated by their injections.

    For rational maps the two injections generate everything landing in
    the carrier: f*g = 0 forces f = 0 or g = 0 identically.
    """
    carrier = AlgebraicCarrier(2, (Expr.parse("x0*x1", 2),))
    gens = (
        plot(R1, ["x0", "0"]),
        plot(R1, ["0", "x0"]),
    )
    return generated_space("cross", carrier, gens, complete=True)


class TestEuclidean:
    def test_everything_rational_is_a_plot(self):
        r2 = euclidean_space(2)
        p = plot(R1, ["x0^2", "x0^3 - x0"])
        v = is_plot(r2, p)
        assert v.is_yes
        assert isinstance(v.certificate, CarrierCert)
        assert verify_certificate(r2, p, v.certificate)

    def test_constant_certificate(self):
        r2 = euclidean_space(2)
        p = plot(R2, ["3", "-1/2"])
        v = is_plot(r2, p)
        assert v.is_yes
        assert isinstance(v.certificate, ConstantCert)
        assert v.certificate.point == (Fraction(3), Fraction(-1, 2))


class TestCrossMembership:
    def test_generator_itself(self):
        cross = axes_cross()
        v = is_plot(cross, plot(R1, ["x0", "0"]))
        assert v.is_yes
        assert isinstance(v.certificate, GeneratorCert)
        assert v.certificate.index == 0

    def test_factor_through_first_axis(self):
        cross = axes_cross()
        p = plot(R1, ["x0^3 - x0", "0"])
        v = is_plot(cross, p)
        assert v.is_yes
        cert = v.certificate
        assert isinstance(cert, (FactoredCert, GlueCert))
        assert verify_certificate(cross, p, cert)

    def test_factor_through_second_axis_rational(self):
        cross = axes_cross()
        x = Expr.variable(1, 0)
        vec = ExprVec((Expr.zero(1), x / (x * x + Expr.one(1))))
        p = Plot(R1, vec)
        v = is_plot(cross, p)
        assert v.is_yes
        assert verify_certificate(cross, p, v.certificate)

    def test_two_parameter_plot(self):
        cross = axes_cross()
        p = plot(R2, ["x0 + 2*x1", "0"])
        v = is_plot(cross, p)
        assert v.is_yes
        assert verify_certificate(cross, p, v.certificate)

    def test_diagonal_is_refused_by_carrier(self):
        cross = axes_cross()
        v = is_plot(cross, plot(R1, ["x0", "x0"]))
        assert v.is_no
        assert v.obstruction.kind == "carrier"
        pt = v.obstruction.point
        assert pt is not None and pt[0] != 0

    def test_constant_at_origin(self):
        cross = axes_cross()
        v = is_plot(cross, plot(R1, ["0", "0"]))
        assert v.is_yes
        assert isinstance(v.certificate, ConstantCert)

    def test_union_domain_glues(self):
        cross = axes_cross()
        dom = Domain.of((-2, -1)).union(Domain.of((1, 2)))
        p = plot(dom, ["x0^2", "0"])
        v = is_plot(cross, p)
        assert v.is_yes
        assert isinstance(v.certificate, GlueCert)
        assert verify_certificate(cross, p, v.certificate)

    def test_budget_blocks_high_degree_factor(self):
        cross = axes_cross()
        p = plot(R1, ["x0^5 + x0", "0"])
        low = is_plot(cross, p, budget=4)
        high = is_plot(cross, p, budget=6)
        assert low.is_unknown
        assert high.is_yes
        # monotone: resolving ran in the yes direction, never yes -> no
        assert verify_certificate(cross, p, high.certificate, budget=6)

    def test_memoized_verdict_is_reused(self):
        cross = axes_cross()
        p = plot(R1, ["x0^3", "0"])
        first = is_plot(cross, p)
        second = is_plot(cross, p)
        assert first is second


class TestRefutations:
    def test_discrete_space_rejects_motion(self):
        pts = discrete_space("three-points", 1, [(0,), (1,), (2,)])
        v = is_plot(pts, plot(R1, ["x0"]))
        assert v.is_no
        assert v.obstruction.kind == "discrete"
        assert is_plot(pts, plot(R1, ["2"])).is_yes

    def test_affine_image_obstruction(self):
        # the line y = 2x, generated by t -> (t, 2t)
        line = generated_space(
            "double-slope",
            EuclideanCarrier(2),
            (plot(R1, ["x0", "2*x0"]),),
        )
        good = is_plot(line, plot(R1, ["3*x0 + 1", "6*x0 + 2"]))
        assert good.is_yes
        bad = is_plot(line, plot(R1, ["x0", "x0"]))
        assert bad.is_no
        assert bad.obstruction.kind == "image"
        assert bad.obstruction.point is not None

    def test_nonaffine_generator_gives_unknown(self):
        para = generated_space(
            "squares-only",
            EuclideanCarrier(1),
            (plot(R1, ["x0^2"]),),
        )
        assert is_plot(para, plot(R1, ["x0^2"])).is_yes
        shifted = is_plot(para, plot(R1, ["x0^2 + 2*x0 + 1"]))
        assert shifted.is_unknown


class TestForcedFactor:
    def test_graph_generator_forces_factor(self):
        # generator is the graph t -> (t, t^3 + t); candidates factor by
        # reading off the first coordinate
        graph = generated_space(
            "cubic-graph",
            EuclideanCarrier(2),
            (plot(R1, ["x0", "x0^3 + x0"]),),
        )
        p = plot(R1, ["x0^2", "x0^6 + x0^2"])
        v = is_plot(graph, p)
        assert v.is_yes
        assert verify_certificate(graph, p, v.certificate)
        off = is_plot(graph, plot(R1, ["x0", "x0^3"]))
        assert not off.is_yes


class TestQuotient:
    def test_sign_quotient_accepts_lifts(self):
        base = euclidean_space(1)
        rel = RelationPair("", ExprVec.identity(1), "", ExprVec.parse(["-x0"], 1), R1)
        space, proj = quotient_space("half-line", base, [rel])
        assert is_plot(space, plot(R1, ["x0^2"])).is_yes
        assert is_smooth(proj).is_yes

    def test_rewrite_reaches_base_plot(self):
        # base admits only cubes; the relation shifts by 1
        base = generated_space(
            "cubes", EuclideanCarrier(1), (plot(R1, ["x0^3"]),)
        )
        rel = RelationPair(
            "", ExprVec.identity(1), "", ExprVec.parse(["x0 + 1"], 1), R1
        )
        space, _ = quotient_space("cubes-mod-shift", base, [rel])
        v = is_plot(space, plot(R1, ["x0^3 + 1"]))
        assert v.is_yes
        assert isinstance(v.certificate, RuleCert)
        assert v.certificate.rule == "quotient"
        two = is_plot(space, plot(R1, ["x0^3 + 2"]))
        assert two.is_yes

    def test_complete_orbit_refutes(self):
        base = discrete_space("flat", 1, [(0,)])
        rel = RelationPair("", ExprVec.identity(1), "", ExprVec.parse(["-x0"], 1), R1)
        space, _ = quotient_space("flat-mod-sign", base, [rel])
        v = is_plot(space, plot(R1, ["x0"]))
        assert v.is_no

    def test_open_orbit_stays_unknown(self):
        base = generated_space(
            "cubes", EuclideanCarrier(1), (plot(R1, ["x0^3"]),)
        )
        rel = RelationPair(
            "", ExprVec.identity(1), "", ExprVec.parse(["x0 + 1"], 1), R1
        )
        space, _ = quotient_space("cubes-mod-shift", base, [rel])
        # never reachable by shifting a cube, but the orbit is infinite
        v = is_plot(space, plot(R1, ["x0^3 + x0"]))
        assert v.is_unknown


class TestProductAndUnion:
    def test_product_slices(self):
        cross = axes_cross()
        r1 = euclidean_space(1)
        prod = product_space("cross-x-line", cross, r1)
        good = plot(R1, ["x0", "0", "5*x0"])
        v = is_plot(prod, good)
        assert v.is_yes
        assert verify_certificate(prod, good, v.certificate)
        bad = is_plot(prod, plot(R1, ["x0", "x0", "5*x0"]))
        assert bad.is_no

    def test_product_generators_cover_pairs(self):
        cross = axes_cross()
        prod = product_space("cross-squared", cross, cross)
        p = plot(R1, ["x0", "0", "0", "x0^2"])
        assert is_plot(prod, p).is_yes

    def test_union_components(self):
        a = euclidean_space(1, "a-line")
        b = euclidean_space(2, "b-plane")
        u = union_space("two-pieces", [("a", a), ("b", b)])
        assert is_plot(u, plot(R1, ["x0^2"], component="a")).is_yes
        assert is_plot(u, plot(R1, ["x0", "x0^3"], component="b")).is_yes
        v = is_plot(u, plot(R1, ["x0"], component="missing"))
        assert v.is_no


class TestSubsetSpaces:
    def test_subset_of_standard_is_carrier_checked(self):
        r2 = euclidean_space(2)
        sub = subset_space("axes-sub", r2, [Expr.parse("x0*x1", 2)])
        assert sub.standard
        assert is_plot(sub, plot(R1, ["x0", "0"])).is_yes
        assert is_plot(sub, plot(R1, ["x0", "x0"])).is_no

    def test_unit_hyperbola_with_certified_inverse(self):
        r2 = euclidean_space(2)
        hyper = subset_space(
            "recip-pairs", r2, [Expr.parse("x0*x1 - 1", 2)]
        )
        x = Expr.variable(1, 0)
        f = x * x + Expr.one(1)
        p = Plot(R1, ExprVec((f, Expr.one(1) / f)))
        assert is_plot(hyper, p).is_yes


class TestSmoothness:
    def test_sum_out_of_cross(self):
        cross = axes_cross()
        r1 = euclidean_space(1)
        f = smooth_map(cross, r1, ["x0 + x1"])
        assert is_smooth(f).is_yes

    def test_axis_injection_into_cross(self):
        cross = axes_cross()
        r1 = euclidean_space(1)
        good = smooth_map(r1, cross, ["x0", "0"])
        assert is_smooth(good).is_yes
        bad = smooth_map(r1, cross, ["x0", "x0"])
        assert is_smooth(bad).is_no

    def test_swap_on_cross(self):
        cross = axes_cross()
        swap = smooth_map(cross, cross, ["x1", "x0"])
        v = is_smooth(swap)
        assert v.is_yes

    def test_carrier_map_with_equation_certificate(self):
        r2 = euclidean_space(2)
        cross_sub = subset_space(
            "axes-sub", r2, [Expr.parse("x0*x1", 2)],
            generators=(plot(R1, ["x0", "0"]), plot(R1, ["0", "x0"])),
            complete=True,
        )
        axis = subset_space("flat-axis", r2, [Expr.parse("x1", 2)])
        # (x, y) -> (x + y, x*y) kills the product coordinate on the axes
        f = smooth_map(cross_sub, axis, ["x0 + x1", "x0*x1"])
        assert is_smooth(f).is_yes
        # the identity does not: (0, 1) stays off the target carrier
        g = smooth_map(cross_sub, axis, ["x0", "x1"])
        assert is_smooth(g).is_no

    def test_identity_and_composition(self):
        cross = axes_cross()
        assert is_smooth(identity_map(cross)).is_yes

    def test_vanishing_certificate(self):
        r2 = euclidean_space(2)
        sub = subset_space(
            "axes-sub", r2, [Expr.parse("x0*x1", 2)],
            generators=(plot(R1, ["x0", "0"]), plot(R1, ["0", "x0"])),
        )
        assert vanishes_on_carrier(sub, Expr.parse("x0^2*x1", 2))
        assert not vanishes_on_carrier(sub, Expr.parse("x0 + x1", 2))


class TestSubduction:
    def test_linear_projection(self):
        r2 = euclidean_space(2)
        r1 = euclidean_space(1)
        proj = smooth_map(r2, r1, ["x0"])
        assert is_subduction(proj).is_yes

    def test_quotient_projection(self):
        base = euclidean_space(1)
        rel = RelationPair("", ExprVec.identity(1), "", ExprVec.parse(["-x0"], 1), R1)
        space, proj = quotient_space("half-line", base, [rel])
        assert is_subduction(proj).is_yes

    def test_non_surjective_inclusion_is_not_certified(self):
        r1 = euclidean_space(1)
        r2 = euclidean_space(2)
        incl = smooth_map(r1, r2, ["x0", "x0"])
        v = is_subduction(incl)
        assert not v.is_yes


class TestMapEqualityModRelation:
    def test_sign_flip_maps_agree(self):
        base = euclidean_space(1)
        rel = RelationPair("", ExprVec.identity(1), "", ExprVec.parse(["-x0"], 1), R1)
        space, _ = quotient_space("half-line", base, [rel])
        f = smooth_map(base, space, ["x0"])
        g = smooth_map(base, space, ["-x0"])
        h = smooth_map(base, space, ["x0 + 1"])
        assert maps_equal_mod_relation(f, g)
        assert not maps_equal_mod_relation(f, h)
