"""Tail index estimation for heavy-tailed data under random right censoring.

The core estimator weights the top-``k`` log-excesses by a Nelson-Aalen
product-limit factor. The package also provides the Hill, adapted Hill and
Kaplan-Meier weighted competitors, the product-limit tail process and its
Gaussian limit, a Monte Carlo harness and a command-line front end.
"""

__version__ = "0.1.0"

from .asymptotics import LimitLawParams, limit_bias, limit_variance
from .empirical import CensoredSample, OrderedSample, order_sample
from .errors import CensTailError, ConfigError, DataError, DomainError, NumericError
from .estimators import (
    METHODS,
    EviEstimate,
    asymptotic_ci,
    efg,
    estimate,
    hill,
    new_estimator,
    new_estimator_integral,
    new_estimator_weights,
    p_hat,
    worms_w1,
    worms_w2,
)
from .models import BurrModel, CensorshipDesign, FrechetModel, ParetoModel, design_from_p
from .montecarlo import McConfig, McResult, run_experiment, variance_check
