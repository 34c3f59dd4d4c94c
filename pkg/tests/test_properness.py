"""Hessian identity, barrier profiles and the integrated growth bound."""

import numpy as np
import pytest

from oracles import random_chart_points

from geocert.errors import NotApplicable
from geocert.geodesic import distance_field, shoot_geodesic, unit_tangent
from geocert.geometry import curvature_batch, evaluate_jet, metric, second_form
from geocert.invariants import AEstimate, Verdict
from geocert.properness import (GrowthProfile, HessBoundData, check_profile,
                                growth_bound_check, growth_profile,
                                min_hessian_batch, select_tail_bound,
                                sq_dist_hessian, sq_dist_hessian_fd,
                                tail_constants)
from geocert.surfaces import builtin_surface


def small_field(imm, p, extent, n=81, refine=0):
    axes = []
    for d in range(imm.m):
        if imm.chart.periodic[d]:
            axes.append(np.linspace(imm.chart.lo[d], imm.chart.hi[d], n,
                                    endpoint=False))
        else:
            axes.append(np.linspace(max(p[d] - extent, imm.chart.lo[d] + 1e-9),
                                    min(p[d] + extent, imm.chart.hi[d] - 1e-9),
                                    n))
    return distance_field(imm, np.asarray(p, dtype=float), tuple(axes),
                          refine=refine)


class TestProfiles:
    def test_constant_positive(self):
        gp = GrowthProfile(0.0, 0.0, (0.0,), ((2.0, 0.0),))
        v = check_profile(gp)
        assert v.proper and v.bounded_below
        assert v.inf_value == 0.0
        assert gp.value(3.0) == pytest.approx(9.0)

    def test_two_piece_hand_minimum(self):
        # b = -4 on [0,1], then 2(1-c) with c = 0.5: the vertex sits at
        # t = 5 with G = -10 (integrated by hand)
        gp = GrowthProfile(0.0, 0.0, (0.0, 1.0), ((-4.0, 0.0), (1.0, 0.0)))
        v = check_profile(gp)
        assert v.proper and v.bounded_below
        assert v.inf_value == pytest.approx(-10.0)
        assert v.argmin == pytest.approx(5.0)

    def test_linear_drop_unbounded(self):
        gp = GrowthProfile(0.0, 1.0, (0.0,), ((0.0, 0.0),))
        v = check_profile(gp)
        assert not v.proper and not v.bounded_below
        assert v.inf_value == -np.inf

    def test_piecewise_linear_against_quadrature(self):
        from scipy.integrate import quad

        gp = GrowthProfile(1.5, 0.7, (0.0, 2.0), ((-1.0, 1.0), (1.0, 0.0)))

        def g(t):
            return (-1.0 + t) if t < 2.0 else 1.0

        for t in (0.5, 1.7, 2.0, 3.3, 6.0):
            inner = [quad(g, 0, s, limit=200)[0] for s in
                     np.linspace(0, t, 801)]
            double = np.trapezoid(inner, np.linspace(0, t, 801))
            assert gp.value(t) == pytest.approx(1.5 - 0.7 * t + double,
                                                abs=1e-5)

    def test_flat_tail_not_proper(self):
        gp = GrowthProfile(0.0, 0.0, (0.0,), ((0.0, 0.0),))
        v = check_profile(gp)
        assert not v.proper and v.bounded_below


class TestHessianIdentity:
    def test_plane_constant(self, gallery, rng):
        imm = gallery["plane"]
        anchor = np.zeros(3)
        for q in random_chart_points("plane", 5, rng):
            nu = unit_tangent(imm, q, rng.normal(size=2))
            assert sq_dist_hessian(imm, q, nu, anchor) == pytest.approx(
                2.0, abs=1e-12)
            assert sq_dist_hessian_fd(imm, q, nu, anchor) == pytest.approx(
                2.0, abs=1e-8)

    def test_identity_vs_fd_oracle(self, gallery, rng):
        cases = [("catenoid", np.zeros(2)), ("cone", np.array([1.0, 0.0])),
                 ("enneper", np.zeros(2)), ("helicoid", np.zeros(2))]
        for name, p in cases:
            imm = gallery[name]
            anchor = imm.value(p[None, :])[0]
            for q in random_chart_points(name, 6, rng):
                nu = unit_tangent(imm, q, rng.normal(size=2))
                a = sq_dist_hessian(imm, q, nu, anchor)
                b = sq_dist_hessian_fd(imm, q, nu, anchor)
                assert abs(a - b) <= 1e-4, (name, q)

    def test_matches_form_expansion(self, gallery, rng):
        # Hess f(nu,nu) = 2(1 + <phi - anchor, alpha(nu, nu)>)
        imm = gallery["catenoid"]
        anchor = np.array([1.0, 0.0, 0.0])
        for q in random_chart_points("catenoid", 5, rng):
            jet = evaluate_jet(imm, q)
            g = metric(jet)
            sf = second_form(jet, g)
            nu = unit_tangent(imm, q, rng.normal(size=2))
            a_nn = np.einsum("ijn,i,j->n", sf.alpha, nu, nu)
            expected = 2.0 * (1.0 + (jet.value - anchor) @ a_nn)
            assert sq_dist_hessian(imm, q, nu, anchor) == pytest.approx(
                expected, rel=1e-12)

    def test_min_hessian_batch_is_lower_envelope(self, gallery, rng):
        imm = gallery["catenoid"]
        p = np.zeros(2)
        anchor = imm.value(p[None, :])[0]
        pts = random_chart_points("catenoid", 6, rng)
        hmin = min_hessian_batch(imm, pts, anchor)
        for k, q in enumerate(pts):
            for _ in range(12):
                nu = unit_tangent(imm, q, rng.normal(size=2))
                assert sq_dist_hessian(imm, q, nu, anchor) >= hmin[k] - 1e-10


def _fake_aest(radii, values, kind="converging", limit=None):
    return AEstimate(list(radii), list(values),
                     Verdict(kind, limit), 1000, 1e-3,
                     4.0 * radii[-1])


class TestTailConstants:
    def test_pick_smallest_radius(self, gallery):
        imm = gallery["plane"]
        p = np.zeros(2)
        fld = small_field(imm, p, 10.0)
        aest = _fake_aest([2, 4, 8, 16], [1.5, 0.8, 0.4, 0.2], limit=0.2)
        hb = tail_constants(imm, p, aest, fld)
        assert hb.R0 == 4.0
        assert hb.c == pytest.approx(0.8 * 1.05)
        assert hb.b == pytest.approx(2.0, abs=1e-9)

    def test_not_applicable_on_divergence(self):
        aest = _fake_aest([2, 4], [3, 9], kind="diverging")
        with pytest.raises(NotApplicable):
            select_tail_bound(aest)

    def test_not_applicable_when_above_one(self):
        aest = _fake_aest([2, 4], [3.0, 2.5], kind="indeterminate")
        with pytest.raises(NotApplicable):
            select_tail_bound(aest)


class TestGrowthBound:
    def test_plane_tight_but_valid(self, gallery):
        imm = gallery["plane"]
        p = np.zeros(2)
        fld = small_field(imm, p, 9.0, n=101, refine=1)
        hb = HessBoundData(p, np.zeros(3), 2.0, 0.0, 2.0, 0, 100)
        rep = growth_bound_check(imm, hb, fld)
        assert rep.violations == 0
        # the single-formula variant is not implied when b > 1 - c, and
        # indeed fails near R0 on the plane
        assert not rep.literal_valid
        assert rep.literal_violations > 0

    def test_profile_matches_constants(self):
        hb = HessBoundData(np.zeros(2), np.zeros(3), 8.0, 0.366, -2.0, 2, 10)
        gp = growth_profile(hb)
        v = check_profile(gp)
        assert v.proper and v.bounded_below
        # hand evaluation: G(8) = -64, G'(8) = -16, vertex at 8 + 16/(2(1-c))
        t_star = 8.0 + 16.0 / (2 * (1 - 0.366))
        assert v.argmin == pytest.approx(t_star, rel=1e-12)

    def test_geodesic_derivative_growth(self, gallery):
        # beyond the premise region the derivative of f along a geodesic
        # grows at least like 2(1-c) per unit length
        imm = gallery["catenoid"]
        p = np.zeros(2)
        anchor = imm.value(p[None, :])[0]
        c = 0.75
        v0 = unit_tangent(imm, p, [0.0, 1.0])
        path = shoot_geodesic(imm, p, v0, 6.0, tol=1e-11)

        def f_at(q):
            d = imm.value(q[None, :])[0] - anchor
            return float(d @ d)

        svals = np.linspace(1.0, 5.5, 10)
        h = 1e-4
        for s in svals:
            iu = np.searchsorted(path.s, s)
            q, w = path.points[iu], path.velocity[iu]
            rho_here = path.s[iu]
            data = curvature_batch(imm, q[None, :])
            if rho_here * data["norm_alpha"][0] > c:
                continue
            fp = (f_at(q + h * w) - f_at(q - h * w)) / (2 * h)
            fpp_lower = 2 * (1 - c)
            q2, w2 = path.points[-1], path.velocity[-1]
            fp2 = (f_at(q2 + h * w2) - f_at(q2 - h * w2)) / (2 * h)
            assert fp2 - fp >= fpp_lower * (path.s[-1] - rho_here) - 1e-3

    def test_minimal_chain_inequality(self, gallery, rng):
        # on minimal surfaces |alpha(nu,nu)| <= sqrt(-Ric(nu)), so
        # 1 + <phi, alpha(nu,nu)> >= 1 - rho sqrt(-Ric(nu)) given rho >= |phi|
        from geocert.geometry import ricci_extrinsic

        for name in ("catenoid", "helicoid"):
            imm = gallery[name]
            p = np.zeros(2)
            anchor = imm.value(p[None, :])[0]
            fld = small_field(imm, p, 2.5)
            for q in random_chart_points(name, 8, rng):
                if not (fld.axes[1][0] < q[1] < fld.axes[1][-1]):
                    continue
                jet = evaluate_jet(imm, q)
                g = metric(jet)
                sf = second_form(jet, g)
                nu = unit_tangent(imm, q, rng.normal(size=2))
                ric = ricci_extrinsic(sf, g, nu)
                a_nn = np.einsum("ijn,i,j->n", sf.alpha, nu, nu)
                assert np.linalg.norm(a_nn) <= np.sqrt(max(0.0, -ric)) + 1e-10
                rho = float(fld.interpolate(q[None, :])[0])
                lhs = 1.0 + (jet.value - anchor) @ a_nn
                rhs = 1.0 - rho * np.sqrt(max(0.0, -ric))
                assert lhs >= rhs - 1e-6
