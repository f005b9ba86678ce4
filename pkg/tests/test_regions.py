import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advcert.data_model import DataPoint
from advcert.errors import UsageError
from advcert.regions import (DEMO_RADIUS_RULE, FiniteApproxSpec, RegionSpec,
                             approx_within_region, make_approx, offset_norm,
                             region_radius, scale_region)


def pt(u, y=0.0):
    return DataPoint(np.atleast_1d(np.array(u, dtype=float)), y)


BALL01 = RegionSpec(kind="ball", norm="l2", radius_rule=0.1)
DEMO = RegionSpec(kind="ball", norm="l2", radius_rule=DEMO_RADIUS_RULE)


class TestRegionRadius:
    def test_constant(self):
        assert region_radius(BALL01, pt([3.0], -1.0)) == pytest.approx(0.1)

    def test_demo_rule_at_zero(self):
        # |cos(pi/3)| / 20 = 0.025
        assert region_radius(DEMO, pt([0.0])) == pytest.approx(0.025)

    def test_zero_scale(self):
        assert region_radius(scale_region(BALL01, 0.0), pt([1.0])) == 0.0

    def test_singleton_rejected(self):
        with pytest.raises(UsageError):
            region_radius(RegionSpec(kind="singleton"), pt([0.0]))


class TestMakeApprox:
    def test_center_only(self):
        aset = make_approx(FiniteApproxSpec(scheme="center_only"), BALL01, pt([1.0], 2.0))
        assert aset.M == 1
        assert aset.points[0].u[0] == 1.0 and aset.points[0].y == 2.0

    def test_cross5_layout(self):
        aset = make_approx(FiniteApproxSpec(scheme="cross5", inflation=1.0),
                           BALL01, pt([0.0], 0.0))
        got = [(p.u[0], p.y) for p in aset.points]
        assert got == [(0.0, 0.0), (0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1)]

    def test_cross5_inflated_leaves_region(self):
        spec = FiniteApproxSpec(scheme="cross5", inflation=1.5)
        aset = make_approx(spec, BALL01, pt([0.0], 0.0))
        assert not approx_within_region(BALL01, pt([0.0], 0.0), aset)
        assert max(abs(p.u[0]) for p in aset.points) == pytest.approx(0.15)

    def test_cross5_inside_region_when_not_inflated(self):
        spec = FiniteApproxSpec(scheme="cross5", inflation=1.0)
        aset = make_approx(spec, DEMO, pt([1.3], 0.4))
        assert approx_within_region(DEMO, pt([1.3], 0.4), aset)

    def test_cross5_higher_dim_count(self):
        aset = make_approx(FiniteApproxSpec(scheme="cross5"), BALL01, pt([0.0, 0.0], 0.0))
        assert aset.M == 2 * (2 + 1) + 1

    def test_explicit_offsets(self):
        spec = FiniteApproxSpec(scheme="explicit", offsets=(((0.0,), 0.0), ((0.2,), -0.1)))
        aset = make_approx(spec, RegionSpec(kind="singleton"), pt([1.0], 1.0))
        assert aset.M == 2
        assert (aset.points[1].u[0], aset.points[1].y) == (1.2, 0.9)

    def test_cross5_requires_ball(self):
        with pytest.raises(UsageError):
            make_approx(FiniteApproxSpec(scheme="cross5"), RegionSpec(kind="singleton"),
                        pt([0.0]))

    def test_explicit_requires_offsets(self):
        with pytest.raises(UsageError):
            FiniteApproxSpec(scheme="explicit", offsets=())

    def test_deterministic(self):
        spec = FiniteApproxSpec(scheme="cross5", inflation=0.7)
        a1 = make_approx(spec, DEMO, pt([0.3], 0.1))
        a2 = make_approx(spec, DEMO, pt([0.3], 0.1))
        assert all((p.u == q.u).all() and p.y == q.y
                   for p, q in zip(a1.points, a2.points))


class TestScaleRegion:
    def test_identity(self):
        assert scale_region(BALL01, 1.0) == BALL01

    def test_zero(self):
        spec = scale_region(BALL01, 0.0)
        assert region_radius(spec, pt([0.0])) == 0.0

    def test_linear(self):
        spec = scale_region(BALL01, 2.0)
        assert region_radius(spec, pt([0.0])) == pytest.approx(0.2)

    def test_negative_rejected(self):
        with pytest.raises(UsageError):
            scale_region(BALL01, -0.5)

    @given(st.floats(0, 3), st.floats(0, 3), st.floats(-5, 5))
    @settings(max_examples=60, deadline=None)
    def test_nested(self, l1, l2, u):
        lo, hi = sorted((l1, l2))
        p = pt([u])
        assert region_radius(scale_region(DEMO, lo), p) <= \
            region_radius(scale_region(DEMO, hi), p) + 1e-15


@given(st.floats(0.1, 1.0), st.floats(-4, 4), st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_cross5_points_within_ball_iff_inflation_le_one(infl, u, y):
    region = RegionSpec(kind="ball", norm="l2", radius_rule=0.2)
    aset = make_approx(FiniteApproxSpec(scheme="cross5", inflation=infl), region, pt([u], y))
    r = region_radius(region, pt([u], y))
    norms = [offset_norm("l2", q.u - u, q.y - y) for q in aset.points]
    assert max(norms) <= infl * r + 1e-12
    assert approx_within_region(region, pt([u], y), aset) == (infl <= 1.0 + 1e-12)
