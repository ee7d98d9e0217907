import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.exceptions import DegenerateSegment, InvalidRange, OriginInsideHull, OriginOnSegment
from spectrum_geometry import (
    EnclosingCircle,
    SpectrumRegion,
    brute_force_optimal,
    circumcenter,
    convex_hull,
    gsi_contraction,
    is_gsi_applicable,
    optimal_circle,
    segment_optimal_circle,
)


TRIANGLE = [1 + 0j, 3 + 1j, 2 + 2j]


def random_polygon(rng, n_points):
    """Points scattered in a disc that keeps the origin outside"""
    center = rng.uniform(1.0, 10.0) * np.exp(1j * rng.uniform(-np.pi, np.pi))
    radius = rng.uniform(0.05, 0.9) * abs(center)
    theta = rng.uniform(0.0, 2 * np.pi, n_points)
    return list(center + radius * np.sqrt(rng.uniform(0.2, 1.0, n_points)) * np.exp(1j * theta))


class TestConvexHull:

    def test_single_point(self):
        assert convex_hull([1 + 0j]).vertices == (1 + 0j,)

    def test_interior_point_dropped(self):
        poly = convex_hull([1, 3, 2 + 1j, 2 + 0.1j])
        assert set(poly.vertices) == {1 + 0j, 3 + 0j, 2 + 1j}

    def test_counterclockwise(self):
        poly = convex_hull([1, 3, 3 + 2j, 1 + 2j, 2 + 1j])
        v = poly.vertices
        assert len(v) == 4
        for i in range(len(v)):
            a, b, c = v[i], v[(i + 1) % 4], v[(i + 2) % 4]
            assert ((b - a).conjugate() * (c - b)).imag > 0

    def test_origin_inside(self):
        with pytest.raises(OriginInsideHull):
            convex_hull([1 + 0j, -1 + 0j, 1j])

    def test_origin_on_edge(self):
        with pytest.raises(OriginInsideHull):
            convex_hull([-1 + 1j, 1 - 1j, 2 + 2j])

    def test_applicability(self):
        assert is_gsi_applicable(TRIANGLE)
        assert not is_gsi_applicable([1, -1, 1j])


class TestSegmentCircle:

    def test_real_segment(self):
        circle = segment_optimal_circle(1, 3)
        assert_allclose(circle.center, 2.0, atol=1e-14)
        assert_allclose(circle.radius, 1.0, atol=1e-14)
        assert_allclose(circle.rho0, 0.5, atol=1e-14)
        assert_allclose(circle.alpha0, math.pi / 3, atol=1e-14)

    def test_classical_midpoint(self):
        circle = segment_optimal_circle(0.2, 7.5)
        assert_allclose(circle.center, (7.5 + 0.2) / 2, rtol=1e-14)
        assert_allclose(circle.radius, (7.5 - 0.2) / 2, rtol=1e-14)
        assert_allclose(circle.rho0, (7.5 - 0.2) / (7.5 + 0.2), rtol=1e-12)

    def test_segment_on_beam(self):
        circle = segment_optimal_circle(1 + 1j, 3 + 3j)
        assert_allclose(circle.center, 2 + 2j, atol=1e-14)

    def test_symmetric_segment(self):
        circle = segment_optimal_circle(1 + 1j, 1 - 1j)
        assert_allclose(circle.center, 2.0, atol=1e-12)
        assert_allclose(circle.rho0, math.sqrt(2) / 2, atol=1e-12)

    def test_endpoints_on_circle(self):
        circle = segment_optimal_circle(1, 1 + 2j)
        assert_allclose(abs(circle.center - 1), circle.radius, rtol=1e-12)
        assert_allclose(abs(circle.center - (1 + 2j)), circle.radius, rtol=1e-12)
        assert abs(circle.center) > circle.radius

    def test_against_brute_force(self):
        circle = segment_optimal_circle(1, 1 + 2j)
        oracle = brute_force_optimal([1, 1 + 2j])
        assert_allclose(circle.rho0, oracle.rho0, atol=1e-6)
        assert_allclose(circle.center, oracle.center, atol=1e-5)

    def test_degenerate(self):
        with pytest.raises(DegenerateSegment):
            segment_optimal_circle(2, 2)

    def test_through_origin(self):
        with pytest.raises(OriginOnSegment):
            segment_optimal_circle(-1 - 1j, 1 + 1j)


class TestOptimalCircle:

    def test_single_point(self):
        circle = optimal_circle(convex_hull([3]))
        assert circle.center == 3
        assert circle.radius == 0
        assert circle.rho0 == 0

    def test_two_vertex_polygon(self):
        circle = optimal_circle(convex_hull([1, 3]))
        assert_allclose(circle.center, 2.0, atol=1e-14)
        assert_allclose(circle.radius, 1.0, atol=1e-14)

    def test_triangle_against_brute_force(self):
        circle = optimal_circle(convex_hull(TRIANGLE))
        oracle = brute_force_optimal(TRIANGLE)
        assert_allclose(circle.rho0, oracle.rho0, atol=1e-6)

    def test_equilateral_triangle(self):
        # equilateral triangle centered at 5
        points = [5 + np.exp(2j * np.pi * k / 3) for k in range(3)]
        circle = optimal_circle(convex_hull(points))
        oracle = brute_force_optimal(points)
        assert_allclose(circle.rho0, oracle.rho0, atol=1e-6)
        on_circle = [abs(abs(p - circle.center) - circle.radius) < 1e-9 for p in points]
        assert sum(on_circle) >= 2

    def test_encloses_and_excludes_origin(self, rng):
        for _ in range(50):
            points = random_polygon(rng, rng.integers(3, 11))
            circle = optimal_circle(convex_hull(points))
            assert abs(circle.center) > circle.radius
            assert np.all(np.abs(np.asarray(points) - circle.center) <= circle.radius + 1e-10)
            assert_allclose(circle.rho0, math.sin(circle.alpha0 / 2), atol=1e-14)

    def test_scaling_invariance(self):
        c = 2 - 3j
        base = optimal_circle(convex_hull(TRIANGLE))
        scaled = optimal_circle(convex_hull([c * z for z in TRIANGLE]))
        assert_allclose(scaled.rho0, base.rho0, rtol=1e-9)
        assert_allclose(scaled.center, c * base.center, rtol=1e-9)

    def test_monotone_in_point_set(self, rng):
        for _ in range(50):
            small = random_polygon(rng, 4)
            large = small + random_polygon(rng, 1)
            if not is_gsi_applicable(large):
                continue
            rho_small = optimal_circle(convex_hull(small)).rho0
            rho_large = optimal_circle(convex_hull(large)).rho0
            assert rho_small <= rho_large + 1e-12

    def test_origin_inside(self):
        with pytest.raises(OriginInsideHull):
            brute_force_optimal([1, -1, 1j])

    @pytest.mark.slow
    def test_random_polygons_match_brute_force(self, rng):
        for _ in range(1000):
            points = random_polygon(rng, rng.integers(3, 11))
            poly = convex_hull(points)
            circle = optimal_circle(poly)
            oracle = brute_force_optimal(points)
            assert abs(circle.rho0 - oracle.rho0) <= 1e-6
            assert circle.rho0 <= oracle.rho0 + 1e-12
            on_circle = np.abs(np.abs(poly.as_array() - circle.center) - circle.radius) <= 1e-9 * poly.scale
            assert np.count_nonzero(on_circle) >= 2

    @pytest.mark.parametrize("grid_resolution", [0, 1, 2])
    def test_grid_too_coarse(self, grid_resolution):
        with pytest.raises(InvalidRange):
            brute_force_optimal(TRIANGLE, grid_resolution)


class TestCircumcenter:

    def test_right_triangle(self):
        assert_allclose(circumcenter(0j, 2 + 0j, 2j), 1 + 1j, atol=1e-14)

    def test_collinear(self):
        assert circumcenter(0j, 1 + 1j, 2 + 2j) is None


class TestEnclosingCircle:

    def test_contraction(self):
        circle = EnclosingCircle.from_center(2 + 2j, 1.0)
        assert_allclose(circle.rho0, 1 / math.sqrt(8), rtol=1e-14)

    def test_origin_inside(self):
        with pytest.raises(OriginInsideHull):
            EnclosingCircle.from_center(1.0, 1.0)

    def test_gsi_contraction(self):
        assert_allclose(gsi_contraction([1, 3], 2), 0.5, atol=1e-15)


class TestSpectrumRegion:

    def test_triangle_distance(self):
        region = SpectrumRegion.triangle(*TRIANGLE)
        assert_allclose(region.distance([2 + 1j, 0j, 3 + 1j]), [0.0, 1.0, 0.0], atol=1e-14)

    def test_segment_distance(self):
        region = SpectrumRegion.segment(1, 3)
        assert_allclose(region.distance([2 + 1j, 4]), [1.0, 1.0], atol=1e-14)

    def test_circle_distance(self):
        region = SpectrumRegion.circle(2, 1)
        assert_allclose(region.distance([2.5, 4]), [0.0, 1.0], atol=1e-14)

    def test_rectangle_corners(self):
        region = SpectrumRegion.rectangle(2, 4 + 1j)
        assert set(region.corner_points()) == {2 + 0j, 4 + 0j, 4 + 1j, 2 + 1j}
        assert_allclose(region.enclosing_circle().rho0,
                        optimal_circle(convex_hull(region.corner_points())).rho0)

    def test_boundary_samples_on_boundary(self):
        region = SpectrumRegion.triangle(*TRIANGLE)
        samples = region.boundary_samples(300)
        assert np.all(region.distance(samples) <= 1e-12)
        assert all(np.min(np.abs(samples - v)) < 1e-14 for v in TRIANGLE)

    def test_wrong_point_count(self):
        with pytest.raises(ValueError):
            SpectrumRegion("triangle", (1 + 0j, 2 + 0j))
