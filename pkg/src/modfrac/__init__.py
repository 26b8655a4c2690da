"""Identification of fractional-order linear systems with modulating functions."""

__version__ = "0.1.0"

from .basis import (
    ModulatingBasis,
    ModulatingFunction,
    check_properties,
    endpoint_frac_value,
    frac_deriv,
    make_basis,
    sup_frac_deriv,
)
from .fractional import (
    ConvergenceError,
    GeneralizedPolynomial,
    PoleError,
    gamma,
    gl_deriv,
    hyp1f2,
    reciprocal_gamma,
    rl_deriv_monomial,
    rl_deriv_poly,
    rl_deriv_sin,
)
from .identification import (
    BasisConfig,
    EstimateResult,
    LinearSystem,
    RankDeficiencyWarning,
    SystemStructure,
    assemble,
    identify_online,
    relative_errors,
    solve,
)
from .quadrature import QuadratureRule, integrate, modulated_integral, trapezoid_rule
from .signals import SampledSignal

__all__ = [
    "BasisConfig", "ConvergenceError", "EstimateResult", "GeneralizedPolynomial",
    "LinearSystem", "ModulatingBasis", "ModulatingFunction", "PoleError", "QuadratureRule",
    "RankDeficiencyWarning", "SampledSignal", "SystemStructure", "assemble",
    "check_properties", "endpoint_frac_value", "frac_deriv", "gamma", "gl_deriv", "hyp1f2",
    "identify_online", "integrate", "make_basis", "modulated_integral", "reciprocal_gamma",
    "relative_errors", "rl_deriv_monomial", "rl_deriv_poly", "rl_deriv_sin", "solve",
    "sup_frac_deriv", "trapezoid_rule",
]
