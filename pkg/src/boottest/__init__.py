"""Bootstrap hypothesis tests with scheme-dependent bootstrap statistics.

Tests have the form ``T_n = sqrt(n) ||phi(H_n)||`` and are calibrated with
``T*_n = sqrt(n) ||phi(H*_n) - phi(R_n)||`` for a resampling scheme ``R_n``.
Independence, regression-slope, goodness-of-fit and copula tests are
provided, together with a Monte Carlo harness for level and power studies.
"""

__version__ = "0.1.0"

from .empirical import ECDF, EvalGrid, NormSpec, Sample1D, Sample2D, ecdf_eval, joint_ecdf_eval
from .engine import TestResult, TestSpec, mc_pvalue, order_quantile, run_test
from .exceptions import (
    AllReplicatesNonFinite,
    BootTestError,
    DegenerateDesign,
    IncompatiblePair,
    NonFiniteCriterion,
    OutOfRange,
    TiesDetected,
)
from .functionals import FunctionalSpec
from .simulation import Combo, DGPSpec, StudyConfig, StudyRow, clopper_pearson_ci, run_study, two_proportion_test

__all__ = [
    "ECDF",
    "EvalGrid",
    "NormSpec",
    "Sample1D",
    "Sample2D",
    "ecdf_eval",
    "joint_ecdf_eval",
    "TestResult",
    "TestSpec",
    "mc_pvalue",
    "order_quantile",
    "run_test",
    "FunctionalSpec",
    "Combo",
    "DGPSpec",
    "StudyConfig",
    "StudyRow",
    "clopper_pearson_ci",
    "run_study",
    "two_proportion_test",
    "AllReplicatesNonFinite",
    "BootTestError",
    "DegenerateDesign",
    "IncompatiblePair",
    "NonFiniteCriterion",
    "OutOfRange",
    "TiesDetected",
]
