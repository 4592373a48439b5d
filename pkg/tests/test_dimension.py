import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marstrand_lab.dimension import (
    BOX_COUNT,
    CORRELATION,
    box_dimension,
    correlation_dimension,
    correlation_sums,
    dyadic_scales,
    loglog_fit,
    projected_length,
)
from marstrand_lab.errors import DegenerateFitError, PreconditionError, ResolutionError
from marstrand_lab.fractals import PointCloud, singleton, uniform_measure, uniform_segment
from marstrand_lab.metric import POINCARE_CTX, DiscreteMeasure

from _support import cantor, cantor_square

LOG23 = math.log(2) / math.log(3)


class TestBoxDimension:
    def test_uniform_segment(self):
        est = box_dimension(uniform_segment(10**4, seed=7))
        assert est.value == pytest.approx(1.0, abs=0.05)
        assert est.method == BOX_COUNT

    def test_cantor_depth_12(self):
        est = box_dimension(cantor(12))
        assert est.value == pytest.approx(LOG23, abs=0.05)
        assert est.r_squared > 0.99

    def test_single_point(self):
        assert box_dimension(singleton(0.3)).value == 0.0

    def test_estimate_invariants(self):
        est = box_dimension(cantor(10))
        lo, hi = est.scale_window
        scales = [c[0] for c in est.counts]
        assert lo < hi and est.value >= 0 and 0 <= est.r_squared <= 1
        assert scales == sorted(scales) and lo <= scales[0] and scales[-1] <= hi

    def test_window_below_floor(self):
        c = cantor(8)
        with pytest.raises(ResolutionError):
            box_dimension(c, window=(c.resolution, 0.25))

    def test_window_above_half_diameter(self):
        c = cantor(8)
        with pytest.raises(PreconditionError):
            box_dimension(c, window=(3 * c.resolution, 0.9))

    def test_too_few_scales(self):
        c = cantor(3)
        with pytest.raises(DegenerateFitError):
            box_dimension(c)

    def test_seeded_offsets_are_deterministic(self):
        assert box_dimension(cantor(10), seed=4) == box_dimension(cantor(10), seed=4)

    @pytest.mark.parametrize("angle,shift", [(0.3, (1.0, -2.0)), (1.1, (0.0, 0.5)), (math.pi / 4, (3.0, 3.0))])
    @pytest.mark.parametrize("cloud", [cantor_square(8), cantor(12)], ids=["CxC", "C"])
    def test_isometry_invariance(self, cloud, angle, shift):
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        moved = PointCloud(cloud.points @ rot.T + np.asarray(shift), cloud.resolution)
        assert box_dimension(moved).value == pytest.approx(box_dimension(cloud).value, abs=0.02)

    @pytest.mark.parametrize("depth", [10, 11])
    def test_catalog_acceptance_grade(self, depth):
        assert box_dimension(cantor(depth)).value == pytest.approx(LOG23, abs=0.05)


class TestCorrelationDimension:
    def test_uniform_segment(self):
        est = correlation_dimension(uniform_measure(uniform_segment(10**4, seed=7)))
        assert est.value == pytest.approx(1.0, abs=0.07)
        assert est.method == CORRELATION

    def test_cantor_depth_12(self):
        est = correlation_dimension(uniform_measure(cantor(12)))
        assert est.value == pytest.approx(0.63, abs=0.07)

    def test_two_atoms_below_gap(self):
        mu = DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5], resolution=1e-3)
        est = correlation_dimension(mu, window=(3e-3, 0.5))
        assert est.value == 0.0

    def test_needs_resolution(self):
        with pytest.raises(PreconditionError):
            correlation_dimension(DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5]))

    def test_sums_match_brute_force(self, rng):
        pts, w = rng.random((60, 2)), rng.random(60)
        radii = np.array([0.05, 0.1, 0.3])
        d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        np.fill_diagonal(d, np.inf)
        brute = [np.sum(np.outer(w, w)[d <= r]) for r in radii]
        for ctx_pts, ctx in ((pts, None), (pts * 0.5, POINCARE_CTX)):
            mu = DiscreteMeasure(ctx_pts, w) if ctx is None else DiscreteMeasure(ctx_pts, w, ctx)
            got = correlation_sums(mu, radii)
            if ctx is None:
                np.testing.assert_allclose(got, brute, rtol=1e-12)
            else:
                assert np.all(np.diff(got) >= 0)

    def test_line_sums_match_plane_sums(self, rng):
        x, w = rng.random(80), rng.random(80)
        radii = np.array([0.01, 0.05, 0.2])
        on_line = correlation_sums(DiscreteMeasure(x, w), radii)
        in_plane = correlation_sums(DiscreteMeasure(np.c_[x, np.zeros(80)], w), radii)
        np.testing.assert_allclose(on_line, in_plane, rtol=1e-12)


class TestProjectedLength:
    def test_disjoint(self):
        assert projected_length([0.0, 10.0], 1.0) == 2.0

    def test_merged(self):
        assert projected_length([0.0, 0.5, 1.0], 2.0) == 3.0

    def test_near_full_cover(self):
        x = uniform_segment(10**4, seed=9).points[:, 0]
        assert projected_length(x, 0.01) == pytest.approx(1.01, abs=0.01)

    def test_eps_below_resolution(self):
        with pytest.raises(ResolutionError):
            projected_length([0.0, 1.0], 1e-4, resolution=1e-3)

    def test_eps_positive(self):
        with pytest.raises(PreconditionError):
            projected_length([0.0], 0.0)

    @settings(max_examples=200)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.floats(1e-3, 5), st.floats(1e-3, 5))
    def test_monotone_and_bounded(self, xs, e1, e2):
        lo, hi = sorted((e1, e2))
        a, b = projected_length(xs, lo), projected_length(xs, hi)
        assert a <= b + 1e-12
        assert b <= len(xs) * hi + 1e-9

    @settings(max_examples=100)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.floats(1e-2, 3))
    def test_matches_fine_grid_measure(self, xs, eps):
        # Lebesgue measure of the union on a fine grid
        grid = np.linspace(-14, 14, 280001)
        covered = np.zeros_like(grid, dtype=bool)
        for x in xs:
            covered |= np.abs(grid - x) <= eps / 2
        assert projected_length(xs, eps) == pytest.approx(covered.sum() * (grid[1] - grid[0]), abs=len(xs) * 2e-4)


def test_loglog_fit_exact_line():
    x = np.linspace(0, 5, 12)
    slope, intercept, r2 = loglog_fit(x, 0.7 * x - 2.0)
    assert slope == pytest.approx(0.7) and intercept == pytest.approx(-2.0) and r2 == pytest.approx(1.0)


def test_dyadic_scales():
    np.testing.assert_array_equal(dyadic_scales(0.1, 1.0), [0.125, 0.25, 0.5, 1.0])
    assert len(dyadic_scales(1.0, 0.5)) == 0
