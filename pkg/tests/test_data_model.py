import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advcert.data_model import (DataPoint, Dataset, KernelPredictor, KernelSpec,
                                LinearPredictor, gram_matrix, kernel_eval,
                                linear_svr_scheme, margin_kernel, margin_linear)
from advcert.errors import UsageError


def pt(u, y):
    return DataPoint(np.atleast_1d(np.array(u, dtype=float)), y)


class TestMarginLinear:
    def test_center_of_band(self):
        p = LinearPredictor(w=[1.0], b=0.0, gamma=1.0)
        assert margin_linear(p, pt([0.0], 0.0)) == pytest.approx(-1.0)

    def test_on_boundary(self):
        p = LinearPredictor(w=[1.0], b=0.0, gamma=1.0)
        assert margin_linear(p, pt([0.0], 1.0)) == pytest.approx(0.0, abs=1e-15)

    def test_hand_evaluation(self):
        p = LinearPredictor(w=[2.0], b=1.0, gamma=0.5)
        assert margin_linear(p, pt([1.0], 4.0)) == pytest.approx(0.5)

    def test_dimension_mismatch(self):
        p = LinearPredictor(w=[1.0, 2.0], b=0.0, gamma=1.0)
        with pytest.raises(UsageError):
            margin_linear(p, pt([1.0], 0.0))

    @given(st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=50, deadline=None)
    def test_one_lipschitz_in_y(self, y1, y2):
        p = LinearPredictor(w=[0.7], b=0.2, gamma=0.3)
        m1 = margin_linear(p, pt([1.3], y1))
        m2 = margin_linear(p, pt([1.3], y2))
        assert abs(m1 - m2) <= abs(y1 - y2) + 1e-12


class TestMarginKernel:
    def setup_method(self):
        self.p = KernelPredictor(alphas=[1.0], anchors=[[0.0]], b=0.0, gamma=0.0,
                                 kernel=KernelSpec("gaussian", 2.0))

    def test_anchor_point(self):
        assert margin_kernel(self.p, pt([0.0], 1.0)) == pytest.approx(0.0, abs=1e-15)

    def test_center_off_by_one(self):
        assert margin_kernel(self.p, pt([0.0], 0.0)) == pytest.approx(1.0)

    def test_decayed_prediction(self):
        assert margin_kernel(self.p, pt([2.0], 0.0)) == pytest.approx(math.exp(-1.0))

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            margin_kernel(self.p, pt([0.0, 0.0], 1.0))


class TestKernelEval:
    def test_zero_distance(self):
        assert kernel_eval(KernelSpec("gaussian", 1.3), [3.7], [3.7]) == 1.0

    def test_sigma_two(self):
        assert kernel_eval(KernelSpec("gaussian", 2.0), [0.0], [2.0]) == pytest.approx(math.exp(-1.0))

    def test_two_dim(self):
        assert kernel_eval(KernelSpec("gaussian", 1.0), [0.0, 0.0], [1.0, 1.0]) == pytest.approx(math.exp(-2.0))

    def test_mismatch(self):
        with pytest.raises(UsageError):
            kernel_eval(KernelSpec("gaussian", 1.0), [0.0], [1.0, 1.0])

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
                    min_size=2, max_size=8, unique=True))
    @settings(max_examples=60, deadline=None)
    def test_gram_symmetric_psd(self, pts):
        U = np.array(pts)
        G = gram_matrix(KernelSpec("gaussian", 1.7), U)
        assert np.allclose(G, G.T, atol=1e-14)
        assert np.min(np.linalg.eigvalsh(G)) >= -1e-10


@given(st.floats(0, 1),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2)),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2)),
       st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
@settings(max_examples=80, deadline=None)
def test_margin_convex_in_parameters(lam, th1, th2, point):
    w1, b1, g1 = th1
    w2, b2, g2 = th2
    u, y = point
    blend = LinearPredictor(w=[lam * w1 + (1 - lam) * w2], b=lam * b1 + (1 - lam) * b2,
                            gamma=lam * g1 + (1 - lam) * g2)
    m_blend = margin_linear(blend, pt([u], y))
    m1 = margin_linear(LinearPredictor(w=[w1], b=b1, gamma=g1), pt([u], y))
    m2 = margin_linear(LinearPredictor(w=[w2], b=b2, gamma=g2), pt([u], y))
    assert m_blend <= lam * m1 + (1 - lam) * m2 + 1e-9


class TestTypes:
    def test_dataset_dimension_check(self):
        with pytest.raises(UsageError):
            Dataset((pt([0.0], 1.0), pt([0.0, 1.0], 1.0)), d=1)

    def test_dataset_empty_is_legal(self):
        ds = Dataset((), d=3)
        assert ds.N == 0

    def test_non_finite_rejected(self):
        with pytest.raises(UsageError):
            pt([np.nan], 0.0)
        with pytest.raises(UsageError):
            pt([0.0], np.inf)

    def test_negative_gamma_rejected(self):
        with pytest.raises(UsageError):
            LinearPredictor(w=[1.0], b=0.0, gamma=-0.1)

    def test_kernel_predictor_alignment(self):
        with pytest.raises(UsageError):
            KernelPredictor(alphas=[1.0, 2.0], anchors=[[0.0]], b=0.0, gamma=0.0,
                            kernel=KernelSpec("gaussian", 1.0))

    def test_sigma_positive(self):
        with pytest.raises(UsageError):
            KernelSpec("gaussian", 0.0)

    def test_round_trip_arrays(self):
        ds = Dataset.from_arrays([[1.0, 2.0], [3.0, 4.0]], [5.0, 6.0])
        U, y = ds.as_arrays()
        assert U.shape == (2, 2) and list(y) == [5.0, 6.0]


class TestScheme:
    def test_linear_scheme_cost_and_margin(self):
        sch = linear_svr_scheme(tau=0.5)
        p = LinearPredictor(w=[2.0], b=0.0, gamma=1.0)
        assert sch.cost(p) == pytest.approx(1.0 + 0.5 * 4.0)
        assert sch.margin(p, pt([1.0], 3.0)) == pytest.approx(0.0, abs=1e-15)
        # deterministic
        assert sch.cost(p) == sch.cost(p)

    def test_tau_positive(self):
        with pytest.raises(UsageError):
            linear_svr_scheme(0.0)
