"""Gamma and two-parameter Mittag-Leffler functions, and the kernels built on them.

Gamma uses a rational Lanczos approximation with reflection below 0.5 and
exact factorials at small positive integers. Mittag-Leffler is summed from
its Taylor series only, inside a fixed safe region:

* ``|z| <= 50`` when ``a >= 1``
* ``|z| <= 10`` when ``a < 1``

Outside it (or when cancellation makes the requested tolerance unreachable)
:class:`~localfrac.NonConvergenceError` is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from localfrac import _core
from localfrac._errors import (
    DomainError,
    InputError,
    NonConvergenceError,
    OverflowGuardError,
    PoleError,
)

__all__ = [
    "SeriesConfig",
    "DEFAULT_SERIES",
    "gamma",
    "lgamma",
    "mittag_leffler",
    "ml_safe_bound",
    "mellin_ross",
    "robotov",
]

GAMMA_OVERFLOW = 171.62437695630272


@dataclass(frozen=True)
class SeriesConfig:
    """Stopping controls for series summation."""

    tol: float = 1e-12
    max_terms: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError(f"series tol must be > 0, got {self.tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise InputError(f"max_terms must be a positive integer, got {self.max_terms}")


DEFAULT_SERIES = SeriesConfig()


def gamma(x: float) -> float:
    """Gamma function for real ``x``.

    >>> gamma(5.0)
    24.0
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at {x!r}")
    if x > GAMMA_OVERFLOW:
        raise OverflowGuardError(f"gamma({x!r}) overflows double precision")
    return _core.gamma(x)


def lgamma(x: float) -> float:
    """Natural log of ``|gamma(x)|``."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at {x!r}")
    return _core.lgamma(x)


def ml_safe_bound(a: float) -> float:
    return 50.0 if a >= 1.0 else 10.0


def mittag_leffler(a: float, b: float, z: float, cfg: SeriesConfig = DEFAULT_SERIES) -> float:
    """Two-parameter Mittag-Leffler function ``sum_k z^k / gamma(a k + b)``.

    Stops once two consecutive terms fall below ``cfg.tol`` times the
    partial sum.

    >>> round(mittag_leffler(1.0, 1.0, 1.0), 12)
    2.718281828459
    """
    a, b, z = float(a), float(b), float(z)
    if not a > 0:
        raise InputError(f"Mittag-Leffler parameter a must be > 0, got {a}")
    if not math.isfinite(b) or not math.isfinite(z):
        raise InputError("Mittag-Leffler arguments must be finite")
    bound = ml_safe_bound(a)
    if abs(z) > bound:
        raise NonConvergenceError(
            f"|z| = {abs(z):g} exceeds the series safe bound {bound:g} for a = {a:g}"
        )
    value, used, status = _core.ml_series(a, b, z, cfg.tol, int(cfg.max_terms))
    if status == 1:
        raise NonConvergenceError(
            f"Mittag-Leffler series E_{{{a:g},{b:g}}}({z:g}) did not converge in {used} terms"
        )
    if status == 3:
        raise OverflowGuardError(f"Mittag-Leffler series E_{{{a:g},{b:g}}}({z:g}) overflows double precision")
    if status == 2:
        raise NonConvergenceError(
            f"Mittag-Leffler series E_{{{a:g},{b:g}}}({z:g}) loses the requested "
            f"accuracy to cancellation"
        )
    return value


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t!r}")
    return t


def mellin_ross(alpha: float, a: float, t: float, cfg: SeriesConfig = DEFAULT_SERIES) -> float:
    """Mellin-Ross function ``t^alpha E_{1, alpha+1}(a t)``."""
    t = _check_t(t)
    return t**alpha * mittag_leffler(1.0, alpha + 1.0, a * t, cfg)


def robotov(alpha: float, beta: float, t: float, cfg: SeriesConfig = DEFAULT_SERIES) -> float:
    """Robotov function ``t^alpha E_{alpha+1, alpha+1}(beta t^(alpha+1))``."""
    t = _check_t(t)
    return t**alpha * mittag_leffler(alpha + 1.0, alpha + 1.0, beta * t ** (alpha + 1.0), cfg)
