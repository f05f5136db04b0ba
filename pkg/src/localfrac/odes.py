"""Initial value problems N_F^alpha x = g(t, x), x(t0) = x0.

For differentiable x the N-derivative is F(t, alpha) x'(t), so the problem is
solved as the ordinary equation x' = g(t, x) / F(t, alpha) with classic RK4.
Step size is controlled by step doubling: each step is taken once with h and
twice with h/2, the difference estimates the local error, and the accepted
value is the Richardson-extrapolated combination of the two.

:func:`picard_residual` checks a trajectory against the integral form
x(t) = x0 + J(g(s, x(s)))(t), integrating the dense output directly.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from localfrac._errors import DomainError, InputError, StepUnderflowError
from localfrac.expr import Compiled, Expression, parse
from localfrac.integrals import DEFAULT_QUAD, QuadConfig, integrate
from localfrac.kernels import Kernel, get_kernel

__all__ = [
    "StepConfig",
    "DEFAULT_STEP",
    "IVProblem",
    "Trajectory",
    "solve_ivp",
    "picard_residual",
    "picard_residuals",
    "solver_corpus",
]

STATE_VARIABLES = ("t", "x")


@dataclass(frozen=True)
class StepConfig:
    """Step control. ``fixed_step`` switches adaptivity off."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    initial_step: Optional[float] = None
    fixed_step: Optional[float] = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InputError("step tolerances must be > 0")
        for name in ("initial_step", "fixed_step"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InputError(f"{name} must be > 0, got {value!r}")
        if self.max_steps < 1:
            raise InputError("max_steps must be >= 1")


DEFAULT_STEP = StepConfig()


@dataclass(frozen=True)
class IVProblem:
    kernel: Kernel
    alpha: float
    rhs: Expression
    t0: float
    x0: float
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if isinstance(self.rhs, str):
            object.__setattr__(self, "rhs", parse(self.rhs, STATE_VARIABLES))
        for name in ("alpha", "t0", "x0", "t_end"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0.0 < self.alpha <= 1.0:
            raise InputError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not self.t_end > self.t0:
            raise InputError(f"t_end must exceed t0, got t0={self.t0!r}, t_end={self.t_end!r}")
        if not all(math.isfinite(v) for v in (self.t0, self.x0, self.t_end)):
            raise InputError("t0, x0 and t_end must be finite")
        lo, hi = self.kernel.t_domain
        if not (lo < self.t0 and self.t_end < hi):
            raise DomainError(
                f"kernel '{self.kernel.label}' is defined for {lo:g} < t < {hi:g}; "
                f"[{self.t0!r}, {self.t_end!r}] leaves that range"
            )

    def slope_function(self):
        """x' = g(t, x) / F(t, alpha) as a plain function."""
        g = Compiled(self.rhs, STATE_VARIABLES)
        weight, alpha = self.kernel.weight, self.alpha

        def slope(t, x):
            return g(t, x) * weight(t, alpha)

        return slope


@dataclass(frozen=True)
class Trajectory:
    """Accepted solver points with slopes for cubic Hermite dense output."""

    t: tuple[float, ...]
    x: tuple[float, ...]
    dxdt: tuple[float, ...]
    accepted_steps: int
    rejected_steps: int
    max_local_error_estimate: float
    steps: tuple[float, ...] = field(default=(), repr=False)

    @property
    def final(self) -> float:
        return self.x[-1]

    def __len__(self) -> int:
        return len(self.t)

    def __call__(self, s: float) -> float:
        """Dense output at ``s`` inside [t0, t_end]."""
        ts = self.t
        if not ts[0] <= s <= ts[-1]:
            raise DomainError(f"t={s!r} is outside the trajectory [{ts[0]!r}, {ts[-1]!r}]")
        i = min(max(bisect.bisect_right(ts, s) - 1, 0), len(ts) - 2)
        h = ts[i + 1] - ts[i]
        u = (s - ts[i]) / h
        u2, u3 = u * u, u * u * u
        return (
            (2 * u3 - 3 * u2 + 1) * self.x[i]
            + (u3 - 2 * u2 + u) * h * self.dxdt[i]
            + (-2 * u3 + 3 * u2) * self.x[i + 1]
            + (u3 - u2) * h * self.dxdt[i + 1]
        )

    def sample(self, n: int) -> list[tuple[float, float]]:
        """``n`` evenly spaced dense-output samples from t0 to t_end."""
        if n < 2:
            raise InputError("at least two samples are needed")
        a, b = self.t[0], self.t[-1]
        pts = [a + (b - a) * k / (n - 1) for k in range(n)]
        pts[-1] = b
        return [(s, self(s)) for s in pts]


def _rk4(f, t, x, h, k1):
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _doubled(f, t, x, h, k1):
    """(extrapolated value, two-half-step value, error estimate)."""
    full = _rk4(f, t, x, h, k1)
    half = _rk4(f, t, x, 0.5 * h, k1)
    two = _rk4(f, t + 0.5 * h, half, 0.5 * h, f(t + 0.5 * h, half))
    diff = (two - full) / 15.0
    return two + diff, two, abs(diff)


def solve_ivp(p: IVProblem, cfg: StepConfig = DEFAULT_STEP) -> Trajectory:
    """Integrate ``p`` from t0 to t_end.

    >>> traj = solve_ivp(IVProblem("conformable", 0.5, "x", 1.0, 1.0, 4.0))
    >>> round(traj.final, 8)
    7.3890561
    """
    f = p.slope_function()
    t, x = p.t0, p.x0
    k = f(t, x)
    ts, xs, ks, hs = [t], [x], [k], []
    span = p.t_end - p.t0
    rejected = 0
    worst = 0.0

    if cfg.fixed_step is not None:
        n = max(1, math.ceil(span / cfg.fixed_step - 1e-9))
        h = span / n
        for i in range(n):
            _, x, err = _doubled(f, t, x, h, k)
            t = p.t_end if i == n - 1 else p.t0 + (i + 1) * h
            k = f(t, x)
            worst = max(worst, err)
            ts.append(t)
            xs.append(x)
            ks.append(k)
            hs.append(h)
        return Trajectory(tuple(ts), tuple(xs), tuple(ks), n, 0, worst, tuple(hs))

    h = cfg.initial_step or span / 100.0
    h = min(h, span)
    while t < p.t_end:
        if len(hs) >= cfg.max_steps:
            raise StepUnderflowError(f"exceeded {cfg.max_steps} steps before t_end (stopped at t={t!r})")
        last = t + h >= p.t_end
        if last:
            h = p.t_end - t
        if h <= 16 * math.ulp(max(abs(t), 1.0)):
            raise StepUnderflowError(
                f"step size underflow at t={t!r} (stiff or singular right-hand side?)"
            )
        try:
            new, _, err = _doubled(f, t, x, h, k)
        except (OverflowError, ZeroDivisionError):
            new, err = math.nan, math.inf
        tol = cfg.abs_tol + cfg.rel_tol * max(abs(x), abs(new) if math.isfinite(new) else 0.0)
        if math.isfinite(new) and err <= tol:
            t = p.t_end if last else t + h
            x = new
            k = f(t, x)
            worst = max(worst, err)
            ts.append(t)
            xs.append(x)
            ks.append(k)
            hs.append(h)
            grow = 5.0 if err == 0 else min(5.0, 0.9 * (tol / err) ** 0.2)
            h *= max(grow, 1.0)
        else:
            rejected += 1
            shrink = 0.2 if not math.isfinite(err) or err == 0 else max(0.2, 0.9 * (tol / err) ** 0.2)
            h *= shrink
    return Trajectory(tuple(ts), tuple(xs), tuple(ks), len(hs), rejected, worst, tuple(hs))


def picard_residuals(
    p: IVProblem,
    traj: Trajectory,
    points: Optional[Sequence[float]] = None,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> list[float]:
    """|x(s) - x0 - J(g(., x(.)))(s)| at each of ``points`` (default: the solver points).

    ``points`` must be increasing and inside [t0, t_end]; the integral is
    accumulated piece by piece between consecutive points.
    """
    if traj.t[0] != p.t0 or traj.t[-1] != p.t_end:
        raise InputError("trajectory does not cover [t0, t_end] of the problem")
    pts = list(traj.t if points is None else points)
    if any(b < a for a, b in zip(pts, pts[1:])):
        raise InputError("Picard check points must be increasing")
    g = Compiled(p.rhs, STATE_VARIABLES)
    weight, alpha = p.kernel.weight, p.alpha

    def integrand(s):
        return g(s, traj(s)) * weight(s, alpha)

    out, total, previous = [], 0.0, p.t0
    for s in pts:
        # knots inside the piece keep the dense output smooth under the integrator
        lo = bisect.bisect_right(traj.t, previous)
        hi = bisect.bisect_left(traj.t, s)
        for a, b in zip([previous, *traj.t[lo:hi]], [*traj.t[lo:hi], s]):
            if b > a:
                total += integrate(integrand, a, b, cfg).value
        previous = s
        out.append(abs(traj(s) - p.x0 - total))
    return out


def picard_residual(p: IVProblem, traj: Trajectory, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """max_i |x_i - x0 - J(g(s, x(s)))(t_i)| over the trajectory points."""
    return max(picard_residuals(p, traj, None, cfg))


def solver_corpus() -> list[tuple[str, IVProblem]]:
    """Named problems across the built-in kernels used to check the solver."""
    return [
        ("conformable_exponential", IVProblem("conformable", 0.5, "x", 1.0, 1.0, 4.0)),
        ("zero_rhs", IVProblem("nonconformable_exp", 0.5, "0", 1.0, 3.0, 3.0)),
        ("unit_rhs", IVProblem("nonconformable_exp", 0.5, "1", 1.0, 0.0, 3.0)),
        ("classical_decay", IVProblem("classical", 1.0, "-x", 0.01, 1.0, 1.0)),
        ("logistic", IVProblem("conformable", 0.9, "x*(1-x)", 0.5, 0.1, 5.0)),
        ("forced_relaxation", IVProblem("mellin_ross", 0.5, "sin(t) - x", 0.5, 1.0, 4.0)),
        ("quadratic_decay", IVProblem("robotov", 0.5, "-x^2", 1.0, 1.0, 3.0)),
        ("growth", IVProblem("reciprocal_power", 0.5, "t*x/10", 0.5, 1.0, 3.0)),
        ("oscillating_rate", IVProblem("one_plus_reciprocal", 0.1, "cos(t)*x", 0.25, 2.0, 5.0)),
    ]
