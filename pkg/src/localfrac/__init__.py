"""Local fractional derivatives with pluggable kernels.

The generalized N-derivative ``lim (f(t + eps F(t, alpha)) - f(t)) / eps``
is evaluated numerically by Richardson extrapolation, compared with its
closed form ``F f'``, inverted by the matching integral and used to solve
scalar initial value problems. Related local operators (multiplicative,
quotient-based, higher order, general-p and weighted DH) share the same
limit engine.

The hot numerical kernels live in a compiled extension when available
(``localfrac.BACKEND == "cython"``) and fall back to pure Python otherwise.
"""

from localfrac._core import BACKEND
from localfrac._errors import (
    DomainError,
    InputError,
    LocalFracError,
    NonConvergenceError,
    NumericalError,
    OverflowGuardError,
    ParseError,
    PoleError,
    QuadratureError,
    StepUnderflowError,
    UnsupportedFormError,
)
from localfrac.diffops import (
    AdditiveN,
    DerivResult,
    EvalConfig,
    GeneralP,
    HigherOrderG,
    Multiplicative,
    PointQuotient,
    WeightedDH,
    YangQuotient,
    chain_rule_residual,
    closed_form,
    eval_at_zero,
    eval_operator,
    leibniz_defect,
    mass_function,
    parse_operator,
    staircase,
)
from localfrac.expr import compile_expr, diff_classical, evaluate, parse, render
from localfrac.integrals import QuadConfig, QuadResult, fundamental_pair_check, j_integral
from localfrac.kernels import REGISTRY, Kernel, KernelRegistry, get_kernel, kernel_eval
from localfrac.odes import IVProblem, StepConfig, Trajectory, picard_residual, solve_ivp
from localfrac.specfun import SeriesConfig, gamma, lgamma, mellin_ross, mittag_leffler, robotov
from localfrac.verify import PropertyCase, Report, build_grid, default_grid, run_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "LocalFracError",
    "InputError",
    "DomainError",
    "PoleError",
    "ParseError",
    "UnsupportedFormError",
    "NumericalError",
    "OverflowGuardError",
    "NonConvergenceError",
    "QuadratureError",
    "StepUnderflowError",
    "SeriesConfig",
    "gamma",
    "lgamma",
    "mittag_leffler",
    "mellin_ross",
    "robotov",
    "parse",
    "render",
    "evaluate",
    "compile_expr",
    "diff_classical",
    "Kernel",
    "KernelRegistry",
    "REGISTRY",
    "get_kernel",
    "kernel_eval",
    "AdditiveN",
    "Multiplicative",
    "PointQuotient",
    "YangQuotient",
    "HigherOrderG",
    "GeneralP",
    "WeightedDH",
    "EvalConfig",
    "DerivResult",
    "eval_operator",
    "closed_form",
    "eval_at_zero",
    "leibniz_defect",
    "chain_rule_residual",
    "mass_function",
    "staircase",
    "parse_operator",
    "QuadConfig",
    "QuadResult",
    "j_integral",
    "fundamental_pair_check",
    "IVProblem",
    "StepConfig",
    "Trajectory",
    "solve_ivp",
    "picard_residual",
    "PropertyCase",
    "Report",
    "run_suite",
    "build_grid",
    "default_grid",
]
