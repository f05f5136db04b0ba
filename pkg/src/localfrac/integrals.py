"""The integral J f(t) = int_{t0}^{t} f(s) / F(s, alpha) ds and its fundamental pair.

J inverts the additive N-derivative of the same kernel: J(N f) = f(t) - f(t0)
and N(J f) = f(t). :func:`fundamental_pair_check` measures both residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from localfrac import _core
from localfrac._errors import DomainError, InputError, QuadratureError, UnsupportedFormError
from localfrac.diffops import (
    DEFAULT_EVAL,
    AdditiveN,
    EvalConfig,
    FunctionLike,
    _as_expression,
    _as_function,
    closed_form,
    eval_operator,
    limit_of_quotient,
)
from localfrac.expr import Binary, Compiled, Const, Unary, Var
from localfrac.kernels import Kernel, get_kernel

EXPRESSION_TYPES = (Const, Var, Unary, Binary)

__all__ = [
    "QuadConfig",
    "QuadResult",
    "DEFAULT_QUAD",
    "integrate",
    "j_integral",
    "fundamental_residual_a",
    "fundamental_residual_b",
    "fundamental_pair_check",
]


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 100_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InputError("quadrature tolerances must be > 0")
        if not 10 <= self.max_subdivisions <= 10**6:
            raise InputError(f"max_subdivisions must lie in [10, 1e6], got {self.max_subdivisions}")


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    subdivisions_used: int


def integrate(g: Callable[[float], float], a: float, b: float, cfg: QuadConfig = DEFAULT_QUAD) -> QuadResult:
    """Adaptive Simpson quadrature of ``g`` over [a, b]."""
    value, err, used, status = _core.adaptive_simpson(
        g, float(a), float(b), cfg.abs_tol, cfg.rel_tol, int(cfg.max_subdivisions)
    )
    if status != 0 or not math.isfinite(value):
        raise QuadratureError(
            f"adaptive refinement stalled on [{a!r}, {b!r}] after {used} subdivisions "
            "(non-integrable singularity?)"
        )
    return QuadResult(value, err, used)


def j_integral(
    kernel: Kernel | str,
    alpha: float,
    f: FunctionLike,
    t0: float,
    t: float,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> QuadResult:
    """J_{t0}^alpha f(t) for any registry kernel.

    With the conformable kernel and ``t0 = 0`` the endpoint singularity
    s^(alpha-1) is removed by integrating in u = s^alpha.

    >>> round(j_integral("conformable", 0.5, "1", 0.0, 1.0).value, 10)
    2.0
    """
    kernel = get_kernel(kernel)
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"alpha must lie in (0, 1], got {alpha!r}")
    t0, t = float(t0), float(t)
    if t0 > t:
        raise InputError(f"j_integral needs t0 <= t, got t0={t0!r}, t={t!r}")
    fn = _as_function(f)
    if t0 == 0.0 and kernel.name == "conformable" and alpha < 1.0:
        inv = 1.0 / alpha

        def integrand(u):
            return fn(u**inv) * inv

        return integrate(integrand, 0.0, t**alpha, cfg)
    lo = kernel.t_domain[0]
    if t0 < lo or (t0 == lo and kernel.weight_at_zero is None):
        raise DomainError(
            f"kernel '{kernel.label}' is defined for t > {lo:g}; 1/F has no finite limit at t0={t0!r}"
        )

    def integrand(s):
        return fn(s) * kernel.weight(s, alpha)

    return integrate(integrand, t0, t, cfg)


def _additive_n(kernel, alpha, f, eval_cfg):
    """N f as a function: the closed form F f' when available, else the numeric limit."""
    spec = AdditiveN(kernel, alpha)
    if isinstance(f, (str, Compiled, *EXPRESSION_TYPES)):
        try:
            cf = closed_form(spec, _as_expression(f))
        except UnsupportedFormError:
            cf = None
        if cf is not None:
            return cf
    fn = _as_function(f)

    def n_f(s):
        return eval_operator(spec, fn, s, eval_cfg).value

    return n_f


def _check_pair_args(t0):
    if not t0 > 0:
        raise InputError(f"the fundamental pair check needs t0 > 0, got {t0!r}")


def fundamental_residual_a(
    kernel: Kernel | str,
    alpha: float,
    f: FunctionLike,
    t0: float,
    t: float,
    quad: QuadConfig = DEFAULT_QUAD,
    eval_cfg: EvalConfig = DEFAULT_EVAL,
) -> float:
    """J(N f)(t) - (f(t) - f(t0))."""
    kernel = get_kernel(kernel)
    t0, t = float(t0), float(t)
    _check_pair_args(t0)
    fn = _as_function(f)
    n_f = _additive_n(kernel, alpha, f, eval_cfg)
    return j_integral(kernel, alpha, n_f, t0, t, quad).value - (fn(t) - fn(t0))


def fundamental_residual_b(
    kernel: Kernel | str,
    alpha: float,
    f: FunctionLike,
    t0: float,
    t: float,
    quad: QuadConfig = DEFAULT_QUAD,
    eval_cfg: EvalConfig = DEFAULT_EVAL,
) -> float:
    """N(J f)(t) - f(t).

    Each increment J f(t + eps F) - J f(t) is integrated directly over
    [t, t + eps F] and the quotient is extrapolated to eps -> 0.
    """
    kernel = get_kernel(kernel)
    t0, t = float(t0), float(t)
    _check_pair_args(t0)
    if t0 > t:
        raise InputError(f"needs t0 <= t, got t0={t0!r}, t={t!r}")
    fn = _as_function(f)
    F = kernel(t, alpha)

    def integrand(s):
        return fn(s) * kernel.weight(s, alpha)

    def increment_quotient(h):
        x = t + h * F
        if x >= t:
            return integrate(integrand, t, x, quad).value / h
        return -integrate(integrand, x, t, quad).value / h

    exps = [float(k) for k in range(1, eval_cfg.levels)]
    n_of_jf = limit_of_quotient(
        increment_quotient, eval_cfg.step_at(t, F), eval_cfg.levels, exps, eval_cfg.rel_tol
    ).value
    return n_of_jf - fn(t)


def fundamental_pair_check(
    kernel: Kernel | str,
    alpha: float,
    f: FunctionLike,
    t0: float,
    t: float,
    quad: QuadConfig = DEFAULT_QUAD,
    eval_cfg: EvalConfig = DEFAULT_EVAL,
) -> tuple[float, float]:
    """Residuals of J(N f)(t) = f(t) - f(t0) and N(J f)(t) = f(t).

    N f uses the closed form F f' when f is an expression that can be
    differentiated symbolically, otherwise the numeric limit.

    >>> a, b = fundamental_pair_check("conformable", 0.5, "sin(t)", 0.5, 3.0)
    >>> abs(a) < 1e-8 and abs(b) < 1e-8
    True
    """
    return (
        fundamental_residual_a(kernel, alpha, f, t0, t, quad, eval_cfg),
        fundamental_residual_b(kernel, alpha, f, t0, t, quad, eval_cfg),
    )
