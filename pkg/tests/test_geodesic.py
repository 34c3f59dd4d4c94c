"""Geodesic shooting and distance estimation against closed forms."""

import numpy as np
import pytest

from oracles import catenoid_meridian_length, cone_distance, plane_distance

from geocert.errors import LeftChart, NotUnit
from geocert.geodesic import (chart_segment_distance, distance,
                              distance_field, exhaustion_radii, metric_norm,
                              path_length_and_grad, polish_path,
                              shoot_geodesic, unit_tangent)
from geocert.surfaces import expression_surface


class TestShooting:
    def test_plane_straight(self, gallery):
        path = shoot_geodesic(gallery["plane"], [0, 0], [1, 0], 5.0)
        assert np.allclose(path.points[-1], [5, 0], atol=1e-9)
        assert path.total_length == pytest.approx(5.0)

    def test_speed_conservation(self, gallery, rng):
        for name in ("catenoid", "enneper", "cone"):
            imm = gallery[name]
            u0 = np.array([1.5, 0.8]) if name == "cone" else np.array([0.3, 0.2])
            v0 = unit_tangent(imm, u0, rng.normal(size=2))
            tol = 1e-10
            path = shoot_geodesic(imm, u0, v0, 3.0, tol=tol)
            speeds = [metric_norm(imm, u, w)
                      for u, w in zip(path.points[::7], path.velocity[::7])]
            assert max(abs(s - 1.0) for s in speeds) <= 10 * tol

    def test_catenoid_meridian(self, gallery):
        imm = gallery["catenoid"]
        v0 = unit_tangent(imm, [0.0, 0.0], [0.0, 1.0])
        length = catenoid_meridian_length(0.0, 1.5)
        path = shoot_geodesic(imm, [0.0, 0.0], v0, length, tol=1e-11)
        # meridians are geodesics: u stays constant, arc length matches
        assert np.max(np.abs(path.points[:, 0])) < 1e-9
        assert path.points[-1, 1] == pytest.approx(1.5, abs=1e-9)

    def test_cone_meridian(self, gallery):
        imm = gallery["cone"]
        path = shoot_geodesic(imm, [1.0, 0.5], [1.0, 0.0], 3.0, tol=1e-11)
        assert path.points[-1, 0] == pytest.approx(4.0, abs=1e-9)
        assert path.points[-1, 1] == pytest.approx(0.5, abs=1e-12)

    def test_not_unit(self, gallery):
        with pytest.raises(NotUnit):
            shoot_geodesic(gallery["catenoid"], [0, 0], [0.0, 1.0 + 1e-6], 1.0)

    def test_left_chart(self):
        imm = expression_surface(["u", "v", "0*u"], 2, [-1, -1], [1, 1])
        with pytest.raises(LeftChart):
            shoot_geodesic(imm, [0.0, 0.0], [1.0, 0.0], 5.0)


class TestExhaustion:
    def test_examples(self):
        assert exhaustion_radii(1, 4) == [1, 2, 4, 8]
        assert exhaustion_radii(0.5, 3) == [0.5, 1, 2]
        assert exhaustion_radii(2, 5) == [2, 4, 8, 16, 32]

    def test_arithmetic(self):
        assert exhaustion_radii(2, 4, "arithmetic") == [2, 4, 6, 8]

    def test_validation(self):
        with pytest.raises(ValueError):
            exhaustion_radii(-1, 4)
        with pytest.raises(ValueError):
            exhaustion_radii(1, 1)


class TestDistance:
    def test_plane_graph(self, gallery):
        res = distance(gallery["plane"], [0, 0], [3, 4])
        assert res.value == pytest.approx(5.0, abs=1e-3)

    def test_plane_shoot(self, gallery):
        res = distance(gallery["plane"], [0, 0], [3, 4], method="shoot")
        assert res.value == pytest.approx(5.0, abs=1e-9)

    def test_catenoid_meridian(self, gallery):
        target = catenoid_meridian_length(0, 1.5)
        res = distance(gallery["catenoid"], [0.0, 0.0], [0.0, 1.5])
        assert res.value == pytest.approx(target, abs=1e-3)
        res2 = distance(gallery["catenoid"], [0.0, 0.0], [0.0, 1.5],
                        method="shoot")
        assert res2.value == pytest.approx(target, abs=1e-9)

    def test_cone_meridian(self, gallery):
        res = distance(gallery["cone"], [1.0, 0.0], [4.0, 0.0],
                       method="shoot")
        assert res.value == pytest.approx(3.0, abs=1e-9)
        res2 = distance(gallery["cone"], [1.0, 0.0], [4.0, 0.0])
        assert res2.value == pytest.approx(3.0, abs=1e-3)

    def test_cone_unrolled_oracle(self, gallery):
        for x in ([2.0, np.pi], [3.0, 2.0], [1.5, -1.0]):
            target = cone_distance(np.pi / 3, 0.5, (1.0, 0.0), tuple(x))
            res = distance(gallery["cone"], [1.0, 0.0], x)
            assert res.value == pytest.approx(target, rel=2e-3), x

    def test_symmetry(self, gallery):
        a, b = [0.2, 0.9], [1.4, -0.4]
        d1 = distance(gallery["catenoid"], a, b).value
        d2 = distance(gallery["catenoid"], b, a).value
        assert abs(d1 - d2) <= 2e-3 * max(d1, 1.0)

    def test_upper_bound_property(self, gallery):
        # estimates are path lengths: never more than dist_tol below truth
        cases = [
            (gallery["plane"], [0, 0], [3, 4], plane_distance((0, 0), (3, 4))),
            (gallery["catenoid"], [0.0, 0.0], [0.0, 2.0],
             catenoid_meridian_length(0, 2)),
            (gallery["cone"], [1.0, 0.0], [5.0, 0.0], 4.0),
        ]
        for imm, p, x, truth in cases:
            est = distance(imm, p, x).value
            assert est >= truth - 1e-3 * max(truth, 1.0)


class TestDistanceField:
    def test_triangle_inequality(self, gallery):
        imm = gallery["catenoid"]
        p = np.array([0.0, 0.0])
        others = [np.array([1.0, 0.8]), np.array([2.5, -0.5])]
        d_pa = distance(imm, p, others[0]).value
        d_pb = distance(imm, p, others[1]).value
        d_ab = distance(imm, others[0], others[1]).value
        assert d_pb <= d_pa + d_ab + 2e-3 * max(d_pb, 1.0)
        assert d_pa <= d_pb + d_ab + 2e-3 * max(d_pa, 1.0)

    def test_interpolation_and_zero_at_base(self, gallery):
        imm = gallery["catenoid"]
        axes = (np.linspace(0, 2 * np.pi, 48, endpoint=False),
                np.linspace(-2, 2, 49))
        fld = distance_field(imm, np.array([0.0, 0.0]), axes, refine=0)
        assert fld.interpolate(np.array([[0.0, 0.0]]))[0] < 0.15
        # wrap-around consistency of the periodic interpolation
        left = fld.interpolate(np.array([[0.01, 0.5]]))[0]
        right = fld.interpolate(np.array([[2 * np.pi - 0.01, 0.5]]))[0]
        assert abs(left - right) < 0.1

    def test_field_vs_closed_form(self, gallery):
        imm = gallery["catenoid"]
        axes = (np.linspace(0, 2 * np.pi, 64, endpoint=False),
                np.linspace(-2.2, 2.2, 111))
        fld = distance_field(imm, np.array([0.0, 0.0]), axes)
        pts = np.array([[0.0, 1.0], [0.0, -2.0]])
        vals = fld.interpolate(pts)
        for val, v in zip(vals, (1.0, -2.0)):
            target = catenoid_meridian_length(0, v)
            assert val == pytest.approx(target, rel=0.03)


class TestPolish:
    def test_gradient_matches_finite_difference(self, gallery, rng):
        imm = gallery["catenoid"]
        pts = np.column_stack([np.linspace(0.1, 0.9, 9),
                               np.linspace(-0.4, 1.2, 9)])
        length, grad = path_length_and_grad(imm, pts)
        h = 1e-7
        for (i, d) in [(2, 0), (4, 1), (7, 0)]:
            bumped = pts.copy()
            bumped[i, d] += h
            lp, _ = path_length_and_grad(imm, bumped)
            bumped[i, d] -= 2 * h
            lm, _ = path_length_and_grad(imm, bumped)
            assert grad[i, d] == pytest.approx((lp - lm) / (2 * h), abs=1e-6)

    def test_polish_straightens_detour(self, gallery):
        imm = gallery["plane"]
        path = np.array([[0.0, 0.0], [1.0, 1.5], [2.0, -0.5], [3.0, 4.0]])
        length, _ = polish_path(imm, path)
        assert length == pytest.approx(5.0, abs=1e-6)

    def test_segment_quadrature(self, gallery):
        val, gap = chart_segment_distance(gallery["catenoid"],
                                          np.array([0.0, 0.0]),
                                          np.array([0.0, 2.0]))
        assert val == pytest.approx(np.sinh(2.0), rel=1e-12)
        assert gap < 1e-10
