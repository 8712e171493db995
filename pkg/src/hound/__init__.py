"""Parameter-free online numerical differentiation by high-order cumulative smoothing."""

__version__ = "0.1.0"

from .coefficients import (
    CharPoly,
    GainTable,
    OrderError,
    a_coeff_table,
    b_coeff,
    char_poly,
    gain,
    gain_table,
    solve_variation_system,
    verify_det_identity,
)
from .core import (
    Differentiator,
    DifferentiatorConfig,
    DifferentiatorState,
    NonMonotoneTimeError,
    Sample,
    ZeroTimeError,
    init,
    state_error,
    update,
)
from .signals import SignalSpec, derivative, sample, samples, variance_slope
from .taylor import TaylorModel, eval_derivative, extract_poly_coeffs

__all__ = [
    "CharPoly",
    "Differentiator",
    "DifferentiatorConfig",
    "DifferentiatorState",
    "GainTable",
    "NonMonotoneTimeError",
    "OrderError",
    "Sample",
    "SignalSpec",
    "TaylorModel",
    "ZeroTimeError",
    "a_coeff_table",
    "b_coeff",
    "char_poly",
    "derivative",
    "eval_derivative",
    "extract_poly_coeffs",
    "gain",
    "gain_table",
    "init",
    "sample",
    "samples",
    "solve_variation_system",
    "state_error",
    "update",
    "variance_slope",
    "verify_det_identity",
]
