"""Kernels F(t, alpha) that turn the generalized N-derivative into named operators.

Every built-in except ``classical`` (F = 1 on the whole line) is defined on
t > 0 and is strictly positive there. Kernel
functions live at module level so kernels pickle cleanly into worker
processes.

Kernel strings (as accepted on the command line) are a registry name,
optionally followed by parameters: ``mellin_ross:a=2.5``, ``robotov:beta=0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Optional

from localfrac import specfun
from localfrac._errors import DomainError, InputError, OverflowGuardError
from localfrac.expr import ONE, Const, Expression, Var, add, call, power

__all__ = [
    "Kernel",
    "KernelRegistry",
    "REGISTRY",
    "kernel_eval",
    "builtin_kernels",
    "get_kernel",
    "CLASSICAL_SLOPE",
    "NON_CLASSICAL",
    "OTHER",
]

CLASSICAL_SLOPE = "classical_slope"
NON_CLASSICAL = "non_classical"
OTHER = "other"

# exp(x) for x above this is refused rather than allowed to overflow
EXP_GUARD = 700.0


def _conformable(t, alpha):
    return t ** (1.0 - alpha)


def _conformable_weight(t, alpha):
    return t ** (alpha - 1.0)


def _conformable_expr(alpha):
    return power(Var("t"), Const(1.0 - alpha))


def _nonconformable_exp(t, alpha):
    x = t ** (-alpha)
    if x > EXP_GUARD:
        raise OverflowGuardError(
            f"kernel exp(t^-alpha) overflows at t={t!r}, alpha={alpha!r} (t^-alpha > {EXP_GUARD:g})"
        )
    return math.exp(x)


def _nonconformable_exp_weight(t, alpha):
    return math.exp(-(t ** (-alpha)))


def _nonconformable_exp_expr(alpha):
    return call("exp", power(Var("t"), Const(-alpha)))


def _reciprocal_power(t, alpha):
    return t ** (-alpha)


def _reciprocal_power_weight(t, alpha):
    return t**alpha


def _reciprocal_power_expr(alpha):
    return power(Var("t"), Const(-alpha))


def _one_plus_reciprocal(t, alpha):
    return 1.0 + t ** (-alpha)


def _one_plus_reciprocal_weight(t, alpha):
    s = t**alpha
    return s / (s + 1.0)


def _one_plus_reciprocal_expr(alpha):
    return add(ONE, power(Var("t"), Const(-alpha)))


def _classical(t, alpha):
    return 1.0


def _classical_weight(t, alpha):
    return 1.0


def _classical_expr(alpha):
    return ONE


def _mellin_ross(t, alpha, a):
    return specfun.mellin_ross(alpha, a, t)


def _robotov(t, alpha, beta):
    return specfun.robotov(alpha, beta, t)


@dataclass(frozen=True)
class Kernel:
    """A positive kernel F(t, alpha) on t > 0.

    ``weight`` computes 1/F directly where that avoids overflow, and
    ``weight_at_zero`` is the limit of 1/F as t -> 0+ when it is finite.
    ``expression`` builds F as an expression tree in t, when one exists.
    """

    name: str
    func: Callable[..., float]
    params: tuple[tuple[str, float], ...] = ()
    limit_alpha_to_1: str = OTHER
    description: str = ""
    weight_func: Optional[Callable[..., float]] = None
    weight_at_zero: Optional[float] = None
    expression_func: Optional[Callable[[float], Expression]] = None
    t_domain: tuple[float, float] = (0.0, math.inf)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v!r}" for k, v in self.params)

    def _check_t(self, t):
        lo, hi = self.t_domain
        if not lo < t < hi:
            raise DomainError(f"kernel '{self.label}' is defined for {lo:g} < t < {hi:g}, got t={t!r}")

    def __call__(self, t: float, alpha: float) -> float:
        """F(t, alpha) without the order-range check (used by higher-order operators)."""
        t = float(t)
        self._check_t(t)
        try:
            value = self.func(t, alpha, *(v for _, v in self.params))
        except OverflowError:
            raise OverflowGuardError(f"kernel '{self.label}' overflows at t={t!r}") from None
        if not math.isfinite(value):
            raise OverflowGuardError(f"kernel '{self.label}' is not finite at t={t!r}")
        if not value > 0.0:
            raise DomainError(f"kernel '{self.label}' is not positive at t={t!r} (value {value!r})")
        return value

    def weight(self, t: float, alpha: float) -> float:
        """1 / F(t, alpha), extended to t = 0 where the limit is finite."""
        t = float(t)
        if t == 0.0 and self.weight_at_zero is not None:
            return self.weight_at_zero
        self._check_t(t)
        if self.weight_func is not None:
            return self.weight_func(t, alpha, *(v for _, v in self.params))
        return 1.0 / self(t, alpha)

    def expression(self, alpha: float) -> Optional[Expression]:
        if self.expression_func is None:
            return None
        return self.expression_func(alpha)


def kernel_eval(k: Kernel, t: float, alpha: float) -> float:
    """F(t, alpha) for alpha in (0, 1] and t in the kernel's domain.

    >>> kernel_eval(get_kernel("conformable"), 4.0, 0.5)
    2.0
    """
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"alpha must lie in (0, 1], got {alpha!r}")
    return k(t, alpha)


def _mellin_ross_kernel(a: float = 1.0) -> Kernel:
    return Kernel(
        name="mellin_ross",
        func=_mellin_ross,
        params=(("a", float(a)),),
        limit_alpha_to_1=NON_CLASSICAL,
        description="t^alpha E_{1,alpha+1}(a t); at alpha = 1 gives t E_{1,2}(a t) f'",
    )


def _robotov_kernel(beta: float = 1.0) -> Kernel:
    return Kernel(
        name="robotov",
        func=_robotov,
        params=(("beta", float(beta)),),
        limit_alpha_to_1=NON_CLASSICAL,
        description="t^alpha E_{alpha+1,alpha+1}(beta t^(alpha+1)); at alpha = 1 gives t E_{2,2}(beta t^2) f'",
    )


_FAMILIES = {
    "mellin_ross": (_mellin_ross_kernel, ("a",)),
    "robotov": (_robotov_kernel, ("beta",)),
}


def builtin_kernels() -> list[Kernel]:
    """The seven built-in kernels (parameterized ones at their default parameter)."""
    return [
        Kernel(
            name="conformable",
            func=_conformable,
            limit_alpha_to_1=CLASSICAL_SLOPE,
            description="t^(1-alpha); equals 1 at alpha = 1",
            weight_func=_conformable_weight,
            expression_func=_conformable_expr,
        ),
        Kernel(
            name="nonconformable_exp",
            func=_nonconformable_exp,
            limit_alpha_to_1=NON_CLASSICAL,
            description="exp(t^-alpha); equals e^(1/t), not 1, at alpha = 1",
            weight_func=_nonconformable_exp_weight,
            weight_at_zero=0.0,
            expression_func=_nonconformable_exp_expr,
        ),
        Kernel(
            name="reciprocal_power",
            func=_reciprocal_power,
            limit_alpha_to_1=NON_CLASSICAL,
            description="t^-alpha; the derivative decays to 0 as t -> infinity",
            weight_func=_reciprocal_power_weight,
            weight_at_zero=0.0,
            expression_func=_reciprocal_power_expr,
        ),
        Kernel(
            name="one_plus_reciprocal",
            func=_one_plus_reciprocal,
            limit_alpha_to_1=OTHER,
            description="1 + t^-alpha; tends to the classical derivative as t -> infinity",
            weight_func=_one_plus_reciprocal_weight,
            weight_at_zero=0.0,
            expression_func=_one_plus_reciprocal_expr,
        ),
        _mellin_ross_kernel(),
        _robotov_kernel(),
        Kernel(
            name="classical",
            func=_classical,
            limit_alpha_to_1=CLASSICAL_SLOPE,
            description="F = 1: the ordinary derivative",
            weight_func=_classical_weight,
            weight_at_zero=1.0,
            expression_func=_classical_expr,
            t_domain=(-math.inf, math.inf),
        ),
    ]


@dataclass
class KernelRegistry:
    """Name -> Kernel mapping; built-ins cannot be replaced."""

    _kernels: dict = field(default_factory=dict)
    _builtin: frozenset = frozenset()

    @classmethod
    def with_builtins(cls) -> "KernelRegistry":
        kernels = {k.name: k for k in builtin_kernels()}
        return cls(kernels, frozenset(kernels))

    @property
    def kernels(self):
        return MappingProxyType(self._kernels)

    def names(self) -> list[str]:
        return list(self._kernels)

    def register(self, kernel: Kernel) -> Kernel:
        if kernel.name in self._kernels or kernel.name in _FAMILIES:
            raise InputError(f"kernel name '{kernel.name}' is already registered")
        self._kernels[kernel.name] = kernel
        return kernel

    def get(self, text: str) -> Kernel:
        """Resolve ``name`` or ``name:key=value,...`` to a kernel."""
        name, _, rest = text.strip().partition(":")
        if not rest:
            if name not in self._kernels:
                raise InputError(
                    f"unknown kernel '{name}'; known kernels: {', '.join(self._kernels)}"
                )
            return self._kernels[name]
        if name not in _FAMILIES:
            raise InputError(f"kernel '{name}' takes no parameters")
        factory, allowed = _FAMILIES[name]
        kwargs = {}
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in allowed:
                raise InputError(
                    f"bad kernel parameter '{item}' for '{name}'; expected one of {allowed} as key=value"
                )
            try:
                kwargs[key] = float(value)
            except ValueError:
                raise InputError(f"kernel parameter {key} must be a number, got '{value}'") from None
        return factory(**kwargs)


REGISTRY = KernelRegistry.with_builtins()


def get_kernel(text: str | Kernel) -> Kernel:
    if isinstance(text, Kernel):
        return text
    return REGISTRY.get(text)
