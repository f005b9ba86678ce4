import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_geometry import band_ball_distance_oracle

from advcert.containment import (ball_grid, contains_ball_linear, contains_region,
                                 containment_flags, critical_point_linear,
                                 grid_mesh, margin_lipschitz, sup_margin_grid)
from advcert.data_model import (DataPoint, Dataset, KernelPredictor, KernelSpec,
                                LinearPredictor, margin)
from advcert.errors import UsageError
from advcert.regions import RegionSpec


def pt(u, y):
    return DataPoint(np.atleast_1d(np.array(u, dtype=float)), y)


FLAT = LinearPredictor(w=[0.0], b=0.0, gamma=1.0)
SLOPE = LinearPredictor(w=[1.0], b=0.0, gamma=1.0)


class TestCriticalPoint:
    def test_flat_band(self):
        ms = critical_point_linear(FLAT, pt([0.0], 0.0), "l2")
        assert ms.r_star == pytest.approx(1.0)
        assert abs(ms.critical_point.y) == pytest.approx(1.0)
        assert ms.critical_point.u[0] == pytest.approx(0.0)

    def test_unit_slope_l2(self):
        ms = critical_point_linear(SLOPE, pt([0.0], 0.0), "l2")
        assert ms.r_star == pytest.approx(1.0 / math.sqrt(2.0))

    def test_unit_slope_linf(self):
        ms = critical_point_linear(SLOPE, pt([0.0], 0.0), "linf")
        assert ms.r_star == pytest.approx(0.5)

    def test_center_outside_rejected(self):
        with pytest.raises(UsageError):
            critical_point_linear(FLAT, pt([0.0], 2.0), "l2")

    def test_cp_on_boundary_and_attains_radius(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = int(rng.integers(1, 4))
            w = rng.normal(0, 2, d)
            b = float(rng.normal())
            g = float(rng.uniform(0.2, 2))
            p = LinearPredictor(w=w, b=b, gamma=g)
            cu = rng.normal(0, 2, d)
            s = float(rng.uniform(-0.95, 0.95)) * g
            c = pt(cu, float(w @ cu + b + s))
            norm = "l2" if rng.uniform() < 0.5 else "linf"
            ms = critical_point_linear(p, c, norm)
            assert abs(margin(p, ms.critical_point)) <= 1e-8
            off_u = ms.critical_point.u - c.u
            off_y = ms.critical_point.y - c.y
            v = np.concatenate([off_u, [off_y]])
            dist = np.linalg.norm(v) if norm == "l2" else np.max(np.abs(v))
            assert dist == pytest.approx(ms.r_star, abs=1e-10)

    def test_matches_optimization_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            d = int(rng.integers(1, 3))
            w = rng.normal(0, 1.5, d)
            b = float(rng.normal())
            g = float(rng.uniform(0.3, 2))
            p = LinearPredictor(w=w, b=b, gamma=g)
            cu = rng.normal(0, 1, d)
            s = float(rng.uniform(-0.9, 0.9)) * g
            c = pt(cu, float(w @ cu + b + s))
            norm = "l2" if rng.uniform() < 0.5 else "linf"
            ms = critical_point_linear(p, c, norm)
            ref = band_ball_distance_oracle(w, b, g, cu, c.y, norm)
            assert ms.r_star == pytest.approx(ref, abs=1e-8)


class TestContainsBall:
    def test_degenerate_radius(self):
        res = contains_ball_linear(FLAT, pt([0.0], 0.5), 0.0, "l2")
        assert res.contained and res.method == "analytic"

    def test_threshold_radius(self):
        assert contains_ball_linear(SLOPE, pt([0.0], 0.0), 0.70710, "l2").contained
        res = contains_ball_linear(SLOPE, pt([0.0], 0.0), 0.71, "l2")
        assert not res.contained
        assert margin(SLOPE, res.witness) > 0

    def test_center_outside(self):
        res = contains_ball_linear(FLAT, pt([0.0], 5.0), 2.0, "l2")
        assert not res.contained
        assert res.witness.y == 5.0

    @given(st.floats(0, 1.5), st.floats(0, 1.5))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_radius(self, r1, r2):
        lo, hi = sorted((r1, r2))
        c = pt([0.3], 0.4)
        if contains_ball_linear(SLOPE, c, hi, "l2").contained:
            assert contains_ball_linear(SLOPE, c, lo, "l2").contained


class TestGrid:
    def test_zero_radius(self):
        assert sup_margin_grid(FLAT, pt([0.2], 0.3), 0.0, "l2", 11) == \
            pytest.approx(margin(FLAT, pt([0.2], 0.3)))

    def test_linear_grid_below_analytic_and_converges(self):
        c = pt([0.0], 0.0)
        r = 1.0 / math.sqrt(2.0)
        analytic = margin(SLOPE, c) + r * math.sqrt(2.0)  # = 0
        sup = sup_margin_grid(SLOPE, c, r, "l2", 201)
        assert sup <= analytic + 1e-12
        assert abs(sup - analytic) < 1e-3

    def test_kernel_grid_matches_dense_oracle(self):
        p = KernelPredictor(alphas=[1.0], anchors=[[0.0]], b=0.0, gamma=0.0,
                            kernel=KernelSpec("gaussian", 2.0))
        c = pt([0.0], 1.0)
        sup = sup_margin_grid(p, c, 0.1, "l2", 41)
        dense = sup_margin_grid(p, c, 0.1, "l2", 2001)
        assert abs(sup - dense) < 2e-3

    def test_grid_includes_boundary_extremes(self):
        g = ball_grid(pt([0.0], 0.0), 1.0, "linf", 5)
        assert {(1.0, 1.0), (-1.0, -1.0)} <= {(x, y) for x, y in g}
        g2 = ball_grid(pt([0.0], 0.0), 1.0, "l2", 9)
        norms = np.linalg.norm(g2, axis=1)
        assert norms.max() == pytest.approx(1.0)

    def test_projected_cube_grid_stays_in_ball(self):
        g = ball_grid(pt([0.0, 0.0], 0.0), 0.5, "l2", 7)
        assert np.linalg.norm(g, axis=1).max() <= 0.5 + 1e-12

    def test_resolution_floor(self):
        with pytest.raises(UsageError):
            sup_margin_grid(FLAT, pt([0.0], 0.0), 0.1, "l2", 2)


class TestContainsRegion:
    def test_singleton_equals_margin_test(self):
        reg = RegionSpec(kind="singleton")
        assert contains_region(FLAT, pt([0.0], 0.5), reg).contained
        res = contains_region(FLAT, pt([0.0], 1.5), reg)
        assert not res.contained and res.witness.y == 1.5

    def test_zero_scaled_ball_equals_margin_test(self):
        reg = RegionSpec(kind="ball", radius_rule=0.3, scale=0.0)
        assert contains_region(FLAT, pt([0.0], 0.99), reg).contained

    def test_linear_ball_analytic(self):
        reg = RegionSpec(kind="ball", radius_rule=0.1)
        res = contains_region(SLOPE, pt([0.0], 0.0), reg)
        assert res.contained and res.method == "analytic"

    def test_kernel_ball_uses_grid(self):
        p = KernelPredictor(alphas=[1.0], anchors=[[0.0]], b=0.0, gamma=0.5,
                            kernel=KernelSpec("gaussian", 2.0))
        reg = RegionSpec(kind="ball", radius_rule=0.05)
        res = contains_region(p, pt([0.0], 1.0), reg, grid_resolution=31)
        assert res.method == "grid"
        assert res.mesh is not None and res.mesh > 0

    def test_grid_agrees_with_analytic_outside_band(self):
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(60):
            w = rng.normal(0, 1, 1)
            p = LinearPredictor(w=w, b=float(rng.normal()), gamma=float(rng.uniform(0.3, 1.5)))
            cu = rng.normal(0, 1, 1)
            s = float(rng.uniform(-0.9, 0.9)) * p.gamma
            c = pt(cu, float(w @ cu + p.b + s))
            r = float(rng.uniform(0.05, 1.2))
            ms = critical_point_linear(p, c, "l2")
            mesh = grid_mesh(r, "l2", 501, 1)
            if abs(r - ms.r_star) < 2 * mesh:
                continue
            sup = sup_margin_grid(p, c, r, "l2", 501)
            assert (sup > 0) == (not contains_ball_linear(p, c, r, "l2").contained)
            checked += 1
        assert checked >= 30


def test_containment_flags_bulk_matches_pointwise():
    rng = np.random.default_rng(9)
    U = rng.uniform(-2, 2, (40, 1))
    y = rng.normal(0, 1, 40)
    ds = Dataset.from_arrays(U, y)
    reg = RegionSpec(kind="ball", radius_rule=0.2)
    flags, indet = containment_flags(ds, SLOPE, reg)
    for i, p in enumerate(ds.points):
        assert flags[i] == (not contains_region(SLOPE, p, reg).contained)


def test_margin_lipschitz_bounds_sampled_slopes():
    p = KernelPredictor(alphas=[0.8, -0.5], anchors=[[0.0], [1.0]], b=0.1, gamma=0.2,
                        kernel=KernelSpec("gaussian", 1.5))
    L = margin_lipschitz(p)
    rng = np.random.default_rng(2)
    X = rng.uniform(-3, 3, (200, 2))
    Y = X + rng.normal(0, 0.1, (200, 2))
    from advcert.data_model import margins
    mx = margins(p, X[:, :1], X[:, 1])
    my = margins(p, Y[:, :1], Y[:, 1])
    d = np.linalg.norm(X - Y, axis=1)
    assert np.all(np.abs(mx - my) <= L * d + 1e-12)
