"""Adversarially robust SVR with distribution-free risk certificates."""

__version__ = "0.1.0"

from .data_model import (DataPoint, Dataset, KernelPredictor, KernelSpec,
                         LinearPredictor, SchemeInterface, kernel_eval,
                         linear_svr_scheme, margin_kernel, margin_linear)
from .regions import ApproxSet, FiniteApproxSpec, RegionSpec, make_approx, \
    region_radius, scale_region
from .svr_train import QpProblem, SvrSolution, TrainConfig, build_qp_kernel, \
    build_qp_linear, solve_qp, tie_break, train
from .containment import (ContainmentResult, MaximalSet, contains_ball_linear,
                          contains_region, critical_point_linear, sup_margin_grid)
from .complexity import ComplexityReport, complexity, empirical_adversarial_risk
from .epsilon_bounds import (Certificate, EpsilonPair, OodBound, certify,
                             epsilon, epsilon_explicit, epsilon_table,
                             lambda_sweep, ood_bound)
from .hull_demo import (HullModel, ShiftSpec, convex_hull, hull_complexity,
                        hull_margin, hull_scheme, ood_empirical_risk)
from .harness import ValidationReport, gen_sinc, validate
