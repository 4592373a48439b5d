import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marstrand_lab.errors import (
    DomainError,
    InfiniteEnergyError,
    PreconditionError,
    ResolutionError,
)
from marstrand_lab.fractals import uniform_segment
from marstrand_lab.geometry import curvature_at
from marstrand_lab.geometry.checks import bowl_metric
from marstrand_lab.metric import (
    EUCLIDEAN_CTX,
    POINCARE_CTX,
    ConformalMetricSpec,
    DiscreteMeasure,
    MetricContext,
    RegularityParams,
    ball_mass,
    conformal_context,
    distance,
    energy,
    geometric_ladder,
    kappa_density,
    kappa_density_profile,
)

POINCARE_ODE = conformal_context(ConformalMetricSpec.poincare())
BOWL = conformal_context(bowl_metric())

disk_point = st.tuples(st.floats(0, 0.8), st.floats(0, 2 * math.pi)).map(
    lambda ra: (ra[0] * math.cos(ra[1]), ra[0] * math.sin(ra[1])))
plane_point = st.tuples(st.floats(-5, 5), st.floats(-5, 5))


def arcosh_distance(a, b):
    a, b = np.asarray(a), np.asarray(b)
    q = 1 + 2 * np.sum((a - b) ** 2) / ((1 - a @ a) * (1 - b @ b))
    return math.acosh(q)


class TestDistance:
    def test_euclidean_pythagoras(self):
        assert distance(EUCLIDEAN_CTX, (0, 0), (3, 4)) == 5.0

    def test_disk_origin_to_half(self):
        assert distance(POINCARE_CTX, (0, 0), (0.5, 0)) == pytest.approx(math.log(3), abs=1e-14)

    def test_disk_matches_numeric_geodesic(self):
        assert distance(POINCARE_ODE, (0, 0), (0.5, 0)) == pytest.approx(math.log(3), rel=1e-4)

    @pytest.mark.parametrize("ctx", [EUCLIDEAN_CTX, POINCARE_CTX, POINCARE_ODE, BOWL])
    def test_identity(self, ctx):
        assert distance(ctx, (0.1, -0.2), (0.1, -0.2)) == 0.0

    @pytest.mark.parametrize("q", [(1.0, 0.0), (0.8, 0.7), (np.nan, 0.0)])
    def test_outside_disk(self, q):
        with pytest.raises(DomainError):
            distance(POINCARE_CTX, (0, 0), q)

    def test_outside_conformal_rectangle(self):
        with pytest.raises(DomainError):
            distance(BOWL, (0, 0), (1.5, 0))

    @settings(max_examples=200, deadline=None)
    @given(disk_point, disk_point)
    def test_disk_closed_form_matches_arcosh(self, a, b):
        assert distance(POINCARE_CTX, a, b) == pytest.approx(arcosh_distance(a, b), rel=1e-9, abs=1e-7)

    @settings(max_examples=200, deadline=None)
    @given(disk_point, disk_point, disk_point)
    def test_disk_symmetric_triangle(self, a, b, c):
        dab = distance(POINCARE_CTX, a, b)
        assert dab == pytest.approx(distance(POINCARE_CTX, b, a), abs=1e-12)
        assert dab <= distance(POINCARE_CTX, a, c) + distance(POINCARE_CTX, c, b) + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(plane_point, plane_point, plane_point)
    def test_euclidean_symmetric_triangle(self, a, b, c):
        dab = distance(EUCLIDEAN_CTX, a, b)
        assert dab == distance(EUCLIDEAN_CTX, b, a)
        assert dab <= distance(EUCLIDEAN_CTX, a, c) + distance(EUCLIDEAN_CTX, c, b) + 1e-9

    def test_ode_triangle_inequality(self, rng):
        pts = rng.uniform(-0.5, 0.5, (12, 3, 2))
        for a, b, c in pts:
            dab = distance(BOWL, a, b)
            assert dab == pytest.approx(distance(BOWL, b, a), abs=1e-5)
            assert dab <= distance(BOWL, a, c) + distance(BOWL, c, b) + 1e-5

    def test_disk_backends_agree(self, rng):
        r = 0.8 * np.sqrt(rng.random((15, 2)))
        a = rng.random((15, 2)) * 2 * np.pi
        P = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
        for p, q in P:
            exact = distance(POINCARE_CTX, p, q)
            assert distance(POINCARE_ODE, p, q) == pytest.approx(exact, rel=1e-4)


class TestContexts:
    def test_conformal_needs_factor(self):
        with pytest.raises(PreconditionError):
            MetricContext("conformal")

    def test_positive_curvature_rejected(self):
        with pytest.raises(PreconditionError):
            ConformalMetricSpec.polynomial(((0, 0, -0.5), (0, 0, 0), (-0.5, 0, 0)), (-1, 1, -1, 1))

    def test_regularity_params_positive(self):
        with pytest.raises(PreconditionError):
            RegularityParams(0.0, 1.0)

    @pytest.mark.parametrize("weights", [[1.0, -0.5], [0.0, 0.0], [1.0]])
    def test_measure_validation(self, weights):
        with pytest.raises(PreconditionError):
            DiscreteMeasure(np.zeros((2, 2)), weights)


class TestCurvature:
    def test_flat(self):
        assert curvature_at(ConformalMetricSpec.flat(), (0.3, 0.2)) == 0.0

    @pytest.mark.parametrize("q", [(0, 0), (0.5, 0.1), (-0.2, 0.9)])
    def test_poincare_factor(self, q):
        assert curvature_at(ConformalMetricSpec.poincare(), q) == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.parametrize("q", [(0, 0), (0.4, -0.3), (0.9, 0.9)])
    def test_bowl(self, q):
        # phi = (x^2 + y^2) / 2 has Laplacian 2
        expected = -2.0 * math.exp(-(q[0] ** 2 + q[1] ** 2))
        assert curvature_at(bowl_metric(), q) == pytest.approx(expected, rel=1e-12)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            curvature_at(bowl_metric(), (2.0, 0.0))


class TestEnergy:
    def test_two_points(self):
        mu = DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5])
        assert energy(mu, 1.0) == pytest.approx(0.5)

    def test_equilateral(self):
        pts = [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]
        mu = DiscreteMeasure(pts, [1 / 3] * 3)
        assert energy(mu, 2.0) == pytest.approx(2 / 3, rel=1e-12)

    def test_s_zero(self, rng):
        w = rng.random(30)
        mu = DiscreteMeasure(rng.random((30, 2)), w)
        assert energy(mu, 0.0) == pytest.approx(w.sum() ** 2 - np.sum(w * w), rel=1e-12)

    def test_duplicate_atoms(self):
        mu = DiscreteMeasure([[0, 0], [0, 0], [1, 1]], [0.3, 0.3, 0.4])
        with pytest.raises(InfiniteEnergyError):
            energy(mu, 0.5)

    def test_negative_s(self):
        with pytest.raises(PreconditionError):
            energy(DiscreteMeasure([[0, 0]], [1.0]), -1.0)

    def test_matches_brute_force_pair_sum(self, rng):
        pts, w = rng.random((40, 2)), rng.random(40)
        mu = DiscreteMeasure(pts, w)
        brute = sum(w[i] * w[j] / np.hypot(*(pts[i] - pts[j])) ** 0.7
                    for i in range(40) for j in range(40) if i != j)
        assert energy(mu, 0.7) == pytest.approx(brute, rel=1e-12)

    def test_disk_energy_uses_hyperbolic_distance(self):
        mu = DiscreteMeasure([[0, 0], [0.5, 0]], [0.5, 0.5], POINCARE_CTX)
        assert energy(mu, 1.0) == pytest.approx(0.5 / math.log(3), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 2), st.floats(0, 2))
    def test_monotone_in_s_for_small_support(self, seed, s, t):
        gen = np.random.default_rng(seed)
        # support of diameter at most 1
        mu = DiscreteMeasure(gen.random((20, 2)) * 0.7, gen.random(20) + 0.01)
        lo, hi = sorted((s, t))
        assert energy(mu, lo) <= energy(mu, hi) * (1 + 1e-12)


class TestBallMass:
    def test_atom(self):
        mu = DiscreteMeasure([[0.2, 0.3]], [1.0])
        assert ball_mass(mu, (0.2, 0.3), 1e-6) == 1.0

    def test_uniform_segment_proportion(self):
        seg = uniform_segment(1000, seed=3)
        mu = DiscreteMeasure(seg.points[:, 0], np.full(1000, 1e-3))
        assert ball_mass(mu, 0.5, 0.25) == pytest.approx(0.5, abs=0.05)

    def test_below_support_gap(self):
        mu = DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5])
        assert ball_mass(mu, (0.5, 0.0), 0.4) == 0.0

    def test_closed_ball(self):
        mu = DiscreteMeasure([[0, 0], [1, 0]], [0.5, 0.5])
        assert ball_mass(mu, (0.0, 0.0), 1.0) == 1.0

    def test_radius_positive(self):
        with pytest.raises(PreconditionError):
            ball_mass(DiscreteMeasure([[0, 0]], [1.0]), (0, 0), 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 3), st.floats(1e-3, 3))
    def test_monotone_in_radius(self, seed, r1, r2):
        gen = np.random.default_rng(seed)
        mu = DiscreteMeasure(gen.random((25, 2)), gen.random(25) + 0.01)
        lo, hi = sorted((r1, r2))
        assert ball_mass(mu, (0.5, 0.5), lo) <= ball_mass(mu, (0.5, 0.5), hi)
        assert ball_mass(mu, (0.5, 0.5), 10.0) == pytest.approx(mu.mass)


class TestKappaDensity:
    def test_uniform_segment(self):
        x = (np.arange(10**4) + 0.5) / 10**4
        mu = DiscreteMeasure(x, np.full(10**4, 1e-4), resolution=1e-4)
        ladder = 0.2 * 2.0 ** -np.arange(5)
        assert kappa_density(mu, 0.5, 1.0, ladder) == pytest.approx(2.0, abs=0.1)

    def test_atom_is_flagged(self):
        mu = DiscreteMeasure([[0, 0]], [0.7])
        ladder = geometric_ladder(0.5, 6)
        prof = kappa_density_profile(mu, (0, 0), 1.0, ladder)
        assert prof.diverging
        # the ratio m / r grows without bound as the ladder descends
        assert np.all(np.diff(prof.ratios) > 0)
        assert prof.ratios[-1] == pytest.approx(0.7 / ladder[-1])

    def test_far_from_support(self):
        mu = DiscreteMeasure([[0, 0]], [1.0])
        assert kappa_density(mu, (5, 5), 1.0, geometric_ladder(1.0, 4)) == 0.0

    def test_below_resolution(self):
        mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5], resolution=0.1)
        with pytest.raises(ResolutionError):
            kappa_density(mu, 0.0, 1.0, geometric_ladder(1.0, 8))

    def test_ladder_must_decrease(self):
        mu = DiscreteMeasure([0.0], [1.0])
        with pytest.raises(PreconditionError):
            kappa_density(mu, 0.0, 1.0, [0.1, 0.2])
