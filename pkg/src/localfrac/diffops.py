"""Local limit-quotient derivatives: numeric limits, closed forms, helpers.

Every operator is evaluated the same way: form its difference quotient at
increments ``h0 * 2**-j`` (j = 0 .. levels-1) and Richardson-extrapolate to a
zero increment. Operators whose quotient is smooth in the increment are
extrapolated in integer powers (even powers for the symmetric average);
the Yang quotient uses the powers ``k - alpha`` of a smooth input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

from localfrac import _core, specfun
from localfrac._errors import DomainError, InputError, OverflowGuardError
from localfrac.expr import (
    Binary,
    Compiled,
    Const,
    Expression,
    Unary,
    Var,
    add,
    diff_classical,
    mul,
    parse,
    power,
    render,
    substitute,
)
from localfrac.kernels import Kernel, get_kernel

__all__ = [
    "AdditiveN",
    "Multiplicative",
    "PointQuotient",
    "YangQuotient",
    "HigherOrderG",
    "GeneralP",
    "WeightedDH",
    "OperatorSpec",
    "EvalConfig",
    "DerivResult",
    "ClosedForm",
    "eval_operator",
    "closed_form",
    "eval_at_zero",
    "leibniz_defect",
    "chain_rule_residual",
    "mass_function",
    "staircase",
    "limit_of_quotient",
    "parse_operator",
]

ALPHA_SUM_TOL = 1e-12
MAX_SHRINKS = 8


def _check_alpha(alpha, lo_open=True, hi=1.0, hi_open=False):
    ok = alpha > 0.0 and (alpha < hi if hi_open else alpha <= hi)
    if not ok:
        bracket = ")" if hi_open else "]"
        raise InputError(f"alpha must lie in (0, {hi:g}{bracket}, got {alpha!r}")


@dataclass(frozen=True)
class AdditiveN:
    """N_F^alpha f(t) = lim (f(t + eps F(t, alpha)) - f(t)) / eps."""

    kernel: Kernel
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class Multiplicative:
    """lim (f(t exp(eps t^-alpha)) - f(t)) / eps, 0 < alpha < 1."""

    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha, hi_open=True)


@dataclass(frozen=True)
class PointQuotient:
    """lim_{x -> x0} (f(x) - f(x0)) / (x^alpha - x0^alpha)."""

    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class YangQuotient:
    """lim Gamma(1 + alpha) (f(x) - f(x0)) / (x - x0)^alpha from one side."""

    alpha: float
    side: str = "right"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.side not in ("left", "right"):
            raise InputError(f"side must be 'left' or 'right', got {self.side!r}")


@dataclass(frozen=True)
class HigherOrderG:
    """lim h^-n sum_k (-1)^k C(n, k) f(t - k h T(t, alpha)), n = ceil(alpha)."""

    kernel: Kernel
    alpha: float
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if not self.alpha > 0:
            raise InputError(f"alpha must be > 0, got {self.alpha!r}")
        object.__setattr__(self, "n", math.ceil(self.alpha))


@dataclass(frozen=True)
class GeneralP:
    """lim (f(p(t, eps, alpha)) - f(t)) / eps for a map p with p(t, 0, alpha) = t.

    ``p`` is an expression in ``t``, ``h`` (the increment) and ``a`` (alpha).
    """

    p: Expression
    alpha: float

    def __post_init__(self):
        if isinstance(self.p, str):
            object.__setattr__(self, "p", parse(self.p, ("t", "h", "a")))
        _check_alpha(self.alpha, hi_open=True)


H_VARIANTS = ("linear", "power", "exponential")


@dataclass(frozen=True)
class WeightedDH:
    """lim (H(eps, beta) f(t + eps F(t, alpha)) - f(t)) / eps with alpha + beta = 1.

    H is ``1 + eps beta`` (linear), ``1 + eps beta^r`` (power) or
    ``E_{1,1}(eps beta)`` (exponential); all tend to 1 as eps -> 0.
    """

    kernel: Kernel
    alpha: float
    beta: float
    variant: str = "linear"
    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        # alpha = 0 is allowed here so that beta = 1 is reachable
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1] for weighted DH, got {self.alpha!r}")
        if abs(self.alpha + self.beta - 1.0) > ALPHA_SUM_TOL:
            raise InputError(f"weighted DH needs alpha + beta = 1, got {self.alpha} + {self.beta}")
        if self.variant not in H_VARIANTS:
            raise InputError(f"H variant must be one of {H_VARIANTS}, got {self.variant!r}")
        if self.variant == "power" and not self.r > 0:
            raise InputError(f"power variant needs r > 0, got {self.r!r}")

    @property
    def weight_slope(self) -> float:
        """dH/d(eps) at eps = 0."""
        if self.variant == "power":
            return self.beta**self.r
        return self.beta

    def h(self, eps: float) -> float:
        if self.variant == "linear":
            return 1.0 + eps * self.beta
        if self.variant == "power":
            return 1.0 + eps * self.beta**self.r
        return specfun.mittag_leffler(1.0, 1.0, eps * self.beta)


OperatorSpec = Union[AdditiveN, Multiplicative, PointQuotient, YangQuotient, HigherOrderG, GeneralP, WeightedDH]


@dataclass(frozen=True)
class EvalConfig:
    """Limit-extrapolation controls.

    ``base_step=None`` means ``2**-10 * max(1, |t|)`` for the increment in
    t; when the increment is ``eps * F`` with F > 1, eps starts at that
    value divided by F. An explicit ``base_step`` is used for eps as is.
    """

    base_step: Optional[float] = None
    levels: int = 6
    rel_tol: float = 1e-7
    direction: str = "plus"

    def __post_init__(self):
        if self.base_step is not None and not self.base_step > 0:
            raise InputError(f"base_step must be > 0, got {self.base_step!r}")
        if not 2 <= self.levels <= 12:
            raise InputError(f"levels must lie in [2, 12], got {self.levels!r}")
        if not self.rel_tol > 0:
            raise InputError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if self.direction not in ("plus", "minus", "symmetric"):
            raise InputError(f"direction must be plus, minus or symmetric, got {self.direction!r}")

    def step_at(self, t: float, scale: float = 1.0) -> float:
        if self.base_step is not None:
            return self.base_step
        return 2.0**-10 * max(1.0, abs(t)) / max(1.0, scale)


DEFAULT_EVAL = EvalConfig()


@dataclass(frozen=True)
class DerivResult:
    value: float
    error_estimate: float
    converged: bool
    samples: tuple[tuple[float, float], ...] = ()


FunctionLike = Union[Expression, str, Compiled, Callable[[float], float]]


def _as_function(f: FunctionLike) -> Callable[[float], float]:
    if isinstance(f, str):
        return Compiled(parse(f))
    if isinstance(f, (Const, Var, Unary, Binary)):
        return Compiled(f)
    return f


def _as_expression(f) -> Expression:
    if isinstance(f, str):
        return parse(f)
    if isinstance(f, Compiled):
        return f.expr
    return f


# ---------------------------------------------------------------------------
# Limit engine


def limit_of_quotient(
    quotient: Callable[[float], float],
    h0: float,
    levels: int,
    exponents,
    rel_tol: float,
    symmetric: bool = False,
) -> DerivResult:
    """Richardson-extrapolate ``quotient(h)`` to h -> 0 from h0, h0/2, ...

    With ``symmetric`` the samples are ``(q(h) + q(-h)) / 2``; if the
    negative side leaves the domain the one-sided quotient is used instead.
    Domain and overflow failures shrink h0 by 2, up to eight times.
    """
    last_exc = None
    for attempt in range(MAX_SHRINKS + 1):
        step = h0 * 2.0**-attempt
        try:
            hs = [step * 2.0**-j for j in range(levels)]
            plus = [quotient(h) for h in hs]
            values = plus
            exps = list(exponents)
            if symmetric:
                try:
                    minus = [quotient(-h) for h in hs]
                except (DomainError, OverflowGuardError):
                    pass
                else:
                    values = [0.5 * (p + m) for p, m in zip(plus, minus)]
                    exps = [2.0 * (k + 1) for k in range(levels - 1)]
        except (DomainError, OverflowGuardError) as exc:
            last_exc = exc
            continue
        value, correction = _core.richardson(values, 2.0, exps)
        converged = math.isfinite(value) and correction <= rel_tol * max(1.0, abs(value))
        return DerivResult(value, correction, converged, tuple(zip(hs, values)))
    raise last_exc


def _quotient(spec, f, t):
    """Return (quotient(h), kind, scale): the increment in t is about scale * h."""
    if isinstance(spec, (AdditiveN, WeightedDH)):
        F = spec.kernel(t, spec.alpha)
        ft = f(t)
        weighted = isinstance(spec, WeightedDH)

        def q(h):
            x = t + h * F
            dx = x - t
            # divided difference over the representable increment, rescaled
            slope = (f(x) - ft) / dx * F if dx != 0.0 else math.nan
            if not weighted:
                return slope
            w = spec.h(h)
            return w * slope + (w - 1.0) / h * ft

        return q, None, F
    if isinstance(spec, Multiplicative):
        if not t > 0:
            raise DomainError(f"the multiplicative derivative needs t > 0, got {t!r}")
        c = t ** (-spec.alpha)
        ft = f(t)

        def q(h):
            x = t * math.exp(h * c)
            dx = x - t
            exact = t * math.expm1(h * c) / h
            return (f(x) - ft) / dx * exact if dx != 0.0 else math.nan

        return q, None, 1.0
    if isinstance(spec, GeneralP):
        p = Compiled(spec.p, ("t", "h", "a"))
        base = p(t, 0.0, spec.alpha)
        if abs(base - t) > 1e-12 * max(1.0, abs(t)):
            raise InputError(f"p(t, 0, alpha) must equal t; got p({t!r}, 0) = {base!r}")
        ft = f(t)

        def q(h):
            return (f(p(t, h, spec.alpha)) - ft) / h

        return q, None, 1.0
    if isinstance(spec, HigherOrderG):
        T = spec.kernel(t, spec.alpha)
        n = spec.n
        coef = [(-1) ** k * math.comb(n, k) for k in range(n + 1)]

        def q(h):
            s = 0.0
            for k in range(n + 1):
                s += coef[k] * f(t - k * h * T)
            return s / h**n

        return q, None, T
    if isinstance(spec, PointQuotient):
        if not t > 0:
            raise DomainError(f"the point quotient needs x0 > 0, got {t!r}")
        ft = f(t)
        ta = t**spec.alpha

        def q(h):
            x = t + h
            if not x > 0:
                raise DomainError(f"point quotient increment leaves x > 0 (x={x!r})")
            return (f(x) - ft) / (x**spec.alpha - ta)

        return q, None, 1.0
    if isinstance(spec, YangQuotient):
        ft = f(t)
        g = specfun.gamma(1.0 + spec.alpha)
        sign = 1.0 if spec.side == "right" else -1.0

        def q(h):
            x = t + sign * h
            dx = abs(x - t)
            return g * sign * (f(x) - ft) / dx**spec.alpha

        return q, "yang", 1.0
    raise InputError(f"unknown operator spec {spec!r}")


def _exponents(kind, spec, levels):
    if kind == "yang":
        out, k = [], 1
        while len(out) < levels - 1:
            e = k - spec.alpha
            if e > 1e-12:
                out.append(e)
            k += 1
        return out
    return [float(k) for k in range(1, levels)]


def eval_operator(spec: OperatorSpec, f: FunctionLike, t: float, cfg: EvalConfig = DEFAULT_EVAL) -> DerivResult:
    """Evaluate the local derivative ``spec`` of ``f`` at ``t`` as a numeric limit.

    >>> from localfrac.kernels import get_kernel
    >>> r = eval_operator(AdditiveN(get_kernel("nonconformable_exp"), 0.5), "t^2", 1.0)
    >>> round(r.value, 9), r.converged
    (5.436563657, True)
    """
    t = float(t)
    fn = _as_function(f)
    q, kind, scale = _quotient(spec, fn, t)
    exps = _exponents(kind, spec, cfg.levels)
    h0 = cfg.step_at(t, scale)
    if kind == "yang":
        # the side is part of the operator; the direction setting does not apply
        return limit_of_quotient(q, h0, cfg.levels, exps, cfg.rel_tol)
    if cfg.direction == "minus":
        return limit_of_quotient(lambda h: q(-h), h0, cfg.levels, exps, cfg.rel_tol)
    return limit_of_quotient(q, h0, cfg.levels, exps, cfg.rel_tol, symmetric=cfg.direction == "symmetric")


# ---------------------------------------------------------------------------
# Closed forms

KERNEL_SYMBOL = "F"


@dataclass(frozen=True)
class ClosedForm:
    """A closed-form derivative: an expression in ``t`` and the kernel symbol ``F``.

    ``F`` stands for the operator's kernel value F(t, alpha) (T(t, alpha) for
    the higher-order operator); kernels without an elementary formula stay
    symbolic and are evaluated numerically.
    """

    expr: Expression
    kernel: Optional[Kernel] = None
    alpha: float = 1.0

    @cached_property
    def _program(self) -> Compiled:
        return Compiled(self.expr, ("t", KERNEL_SYMBOL))

    def __call__(self, t: float) -> float:
        t = float(t)
        if self.kernel is None:
            return self._program(t, 0.0)
        return self._program(t, self.kernel(t, self.alpha))

    def as_expression(self) -> Optional[Expression]:
        """The closed form with F substituted, or None if F has no expression."""
        if self.kernel is None:
            return self.expr
        fexpr = self.kernel.expression(self.alpha)
        if fexpr is None:
            return None
        return substitute(self.expr, KERNEL_SYMBOL, fexpr)

    def render(self) -> str:
        e = self.as_expression()
        return render(e if e is not None else self.expr)


def _nth_derivative(f, n):
    for _ in range(n):
        f = diff_classical(f)
    return f


def closed_form(spec: OperatorSpec, f: FunctionLike) -> Optional[ClosedForm]:
    """Closed form of ``spec`` applied to a differentiable ``f``, or None.

    PointQuotient and YangQuotient have no closed form here.
    """
    e = _as_expression(f)
    F = Var(KERNEL_SYMBOL)
    if isinstance(spec, AdditiveN):
        return ClosedForm(mul(F, diff_classical(e)), spec.kernel, spec.alpha)
    if isinstance(spec, Multiplicative):
        return ClosedForm(mul(power(Var("t"), Const(1.0 - spec.alpha)), diff_classical(e)))
    if isinstance(spec, HigherOrderG):
        factor = power(F, Const(float(spec.n)))
        return ClosedForm(mul(factor, _nth_derivative(e, spec.n)), spec.kernel, spec.alpha)
    if isinstance(spec, GeneralP):
        ph = diff_classical(spec.p, "h")
        ph = substitute(substitute(ph, "h", Const(0.0)), "a", Const(spec.alpha))
        return ClosedForm(mul(ph, diff_classical(e)))
    if isinstance(spec, WeightedDH):
        expr = add(mul(F, diff_classical(e)), mul(Const(spec.weight_slope), e))
        return ClosedForm(expr, spec.kernel, spec.alpha)
    return None


# ---------------------------------------------------------------------------
# Derived checks


def _aitken(seq):
    out = []
    for k in range(len(seq) - 2):
        d1 = seq[k + 1] - seq[k]
        d2 = seq[k + 2] - seq[k + 1]
        den = d2 - d1
        out.append(seq[k + 2] if den == 0.0 else seq[k + 2] - d2 * d2 / den)
    return out


def eval_at_zero(
    spec: OperatorSpec,
    f: FunctionLike,
    cfg: EvalConfig = DEFAULT_EVAL,
    t1: float = 1.0,
    points: int = 12,
) -> DerivResult:
    """Limit of ``eval_operator(spec, f, t)`` as t -> 0+, along t1 * 2**-k.

    The sequence is accelerated with iterated Aitken extrapolation. The
    result is flagged converged only if every inner limit converged, the
    tail of the sequence is monotone with shrinking steps, and the last
    acceleration changed the value by at most ``cfg.rel_tol``.
    """
    fn = _as_function(f)
    ts, vals = [], []
    inner_ok = True
    for k in range(points):
        t = t1 * 2.0**-k
        try:
            r = eval_operator(spec, fn, t, cfg)
        except (DomainError, OverflowGuardError):
            inner_ok = False
            break
        if not r.converged:
            inner_ok = False
            break
        ts.append(t)
        vals.append(r.value)
    samples = tuple(zip(ts, vals))
    if len(vals) < 3:
        value = vals[-1] if vals else math.nan
        return DerivResult(value, math.inf, False, samples)
    levels = [vals]
    while len(levels[-1]) >= 3:
        levels.append(_aitken(levels[-1]))
    if not levels[-1]:
        levels.pop()
    value = levels[-1][-1]
    previous = levels[-2][-1] if len(levels) > 1 else vals[-2]
    err = abs(value - previous)
    tail = vals[-4:]
    d = [tail[i + 1] - tail[i] for i in range(len(tail) - 1)]
    monotone = (all(x <= 0 for x in d) or all(x >= 0 for x in d)) and all(
        abs(d[i + 1]) <= abs(d[i]) for i in range(len(d) - 1)
    )
    converged = (
        inner_ok and monotone and math.isfinite(value) and err <= cfg.rel_tol * max(1.0, abs(value))
    )
    return DerivResult(value, err, converged, samples)


def leibniz_defect(spec: OperatorSpec, f: FunctionLike, g: FunctionLike, t: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """D(f g)(t) - D(f)(t) g(t) - f(t) D(g)(t)."""
    fe, ge = _as_expression(f), _as_expression(g)
    fn, gn = Compiled(fe), Compiled(ge)
    d_fg = eval_operator(spec, Binary("*", fe, ge), t, cfg).value
    d_f = eval_operator(spec, fn, t, cfg).value
    d_g = eval_operator(spec, gn, t, cfg).value
    return d_fg - d_f * gn(t) - fn(t) * d_g


def chain_rule_residual(spec: AdditiveN, f: FunctionLike, g: FunctionLike, t: float, cfg: EvalConfig = DEFAULT_EVAL) -> float:
    """N(f o g)(t) - f'(g(t)) N(g)(t) for an additive N operator."""
    if not isinstance(spec, AdditiveN):
        raise InputError("the chain rule residual is defined for the additive N operator")
    fe, ge = _as_expression(f), _as_expression(g)
    composed = substitute(fe, "t", ge)
    fprime = Compiled(diff_classical(fe))
    gt = Compiled(ge)(t)
    lhs = eval_operator(spec, composed, t, cfg).value
    return lhs - fprime(gt) * eval_operator(spec, ge, t, cfg).value


# ---------------------------------------------------------------------------
# Fractal mass and staircase


def mass_function(alpha: float, a: float, b: float) -> float:
    """(b - a)^alpha / Gamma(1 + alpha), the mass of [a, b].

    >>> mass_function(1.0, 0.0, 3.0)
    3.0
    """
    _check_alpha(alpha)
    if b < a:
        raise InputError(f"mass_function needs b >= a, got a={a!r}, b={b!r}")
    return (b - a) ** alpha / specfun.gamma(1.0 + alpha)


def staircase(alpha: float, a: float, x: float) -> float:
    """Signed cumulative mass from the fixed point ``a`` to ``x``."""
    if x >= a:
        return mass_function(alpha, a, x)
    return -mass_function(alpha, x, a)


# ---------------------------------------------------------------------------
# Operator names (command-line contract)

OPERATOR_NAMES = ("n", "mult", "point-quotient", "yang", "g", "p", "dh:linear", "dh:power", "dh:exp")


def parse_operator(
    name: str,
    kernel: Kernel | str = "classical",
    alpha: float = 0.5,
    beta: Optional[float] = None,
    r: float = 1.0,
    p: Optional[str] = None,
    side: str = "right",
) -> OperatorSpec:
    """Build an operator spec from its command-line name and parameters."""
    if name == "n":
        return AdditiveN(get_kernel(kernel), alpha)
    if name == "mult":
        return Multiplicative(alpha)
    if name == "point-quotient":
        return PointQuotient(alpha)
    if name == "yang":
        return YangQuotient(alpha, side)
    if name == "g":
        return HigherOrderG(get_kernel(kernel), alpha)
    if name == "p":
        if p is None:
            raise InputError("operator 'p' needs a map p(t, h, a), e.g. 't + h*t^(1-a)'")
        return GeneralP(parse(p, ("t", "h", "a")), alpha)
    if name.startswith("dh:"):
        variant = {"linear": "linear", "power": "power", "exp": "exponential"}.get(name[3:])
        if variant is None:
            raise InputError(f"unknown DH variant '{name}'; use dh:linear, dh:power or dh:exp")
        if beta is None:
            beta = 1.0 - alpha
        return WeightedDH(get_kernel(kernel), alpha, beta, variant, r)
    raise InputError(f"unknown operator '{name}'; known operators: {', '.join(OPERATOR_NAMES)}")
