"""Higher-order debiased estimation of smooth functionals of mean parameters."""

from .baselines import PilotEstimator, PluginFunctional, eig_floor
from .elements import Element, FiniteSupportDistribution, GramSample, KLinearForm, RegressionSample
from .estimator import DerivativeFamily, OrderSchedule, cross_fit, one_sided
from .functionals import build_logdet, build_precision, build_regression, build_stieltjes
from .product_dp import PermutationPlan, ProductStructure, pre_cross_fit, pre_one_sided
from .ustat import complete_ustat

__version__ = "0.1.0"

__all__ = [
    "DerivativeFamily",
    "Element",
    "FiniteSupportDistribution",
    "GramSample",
    "KLinearForm",
    "OrderSchedule",
    "PermutationPlan",
    "PilotEstimator",
    "PluginFunctional",
    "ProductStructure",
    "RegressionSample",
    "build_logdet",
    "build_precision",
    "build_regression",
    "build_stieltjes",
    "complete_ustat",
    "cross_fit",
    "eig_floor",
    "one_sided",
    "pre_cross_fit",
    "pre_one_sided",
]
