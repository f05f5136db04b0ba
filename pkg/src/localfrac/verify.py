"""Property harness: checks the N-derivative's calculus rules over grids of cases.

A :class:`PropertyCase` names a property, the kernel and order it is checked
under, the functions involved (expression strings), the evaluation points and
a tolerance. :func:`run_suite` evaluates every case and returns a
:class:`Report`. Reports contain no timings, so the same grid always produces
byte-identical JSON.

Most properties pass when the measured residual is within tolerance. Two
properties are expected violations: ``leibniz_defect_model`` (the weighted DH
operator breaks the product rule by exactly -beta f g) and ``non_semigroup``
(applying N twice is not F^2 f''). These pass when the violation exceeds ten
times the tolerance and, where a model value exists, matches it.
"""

from __future__ import annotations

import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from localfrac._errors import InputError, LocalFracError
from localfrac.diffops import (
    AdditiveN,
    WeightedDH,
    chain_rule_residual,
    closed_form,
    eval_operator,
    leibniz_defect,
)
from localfrac.expr import Compiled, diff_classical, parse
from localfrac.integrals import fundamental_residual_a, fundamental_residual_b
from localfrac.kernels import get_kernel

__all__ = [
    "PROPERTIES",
    "RULE_ITEMS",
    "CORPUS",
    "DEFAULT_SEED",
    "PropertyCase",
    "CaseResult",
    "Report",
    "resolve_seed",
    "default_grid",
    "build_grid",
    "run_case",
    "run_suite",
    "load_suite",
]

PROPERTIES = (
    "linearity",
    "power_rule",
    "constant",
    "product",
    "quotient",
    "chain",
    "closed_form_match",
    "fundamental_a",
    "fundamental_b",
    "leibniz_defect_model",
    "non_semigroup",
    "kernel_decay",
    "kernel_classical_at_infinity",
)
EXPECTED_VIOLATIONS = frozenset({"leibniz_defect_model", "non_semigroup"})

# rule item -> property checked for it (g is the closed form at alpha = 1)
RULE_ITEMS = {
    "a": "linearity",
    "b": "power_rule",
    "c": "constant",
    "d": "product",
    "e": "quotient",
    "f": "closed_form_match",
    "g": "closed_form_match",
}

CORPUS = (
    "t",
    "t^2",
    "t^3",
    "t^0.5",
    "sin(t)",
    "cos(t)",
    "exp(t)",
    "ln(t)",
    "1/(1+t^2)",
    "t*sin(t)",
    "exp(-t)",
    "7",
)
DOMAIN = (0.25, 5.0)
DEFAULT_SEED = 20190611
DEFAULT_KERNELS = ("conformable", "nonconformable_exp")
DEFAULT_ALPHAS = (0.1, 0.5, 0.9)

# functions positive on DOMAIN, used as denominators
_POSITIVE = ("t", "t^2", "exp(t)", "1/(1+t^2)", "t^0.5", "exp(-t)", "7")
# outer functions for compositions, differentiable everywhere they are used
_OUTER = ("sin(t)", "cos(t)", "exp(t)", "t^2", "t^3", "1/(1+t^2)", "exp(-t)")
# chain inner functions stay small on this interval so compositions stay moderate
_CHAIN_DOMAIN = (0.25, 1.5)
# factors of the Leibniz cases: |f g| >= 1 on [1, 5]
_LEIBNIZ = ("t", "t^2", "t^3", "t^0.5", "exp(t)", "7")
_LEIBNIZ_DOMAIN = (1.0, 5.0)
_BETAS = (0.25, 0.5, 1.0)
_FAR_POINTS = tuple(10.0**k for k in range(1, 7))


def resolve_seed(seed: Optional[int] = None) -> int:
    """``seed`` if given, else $LOCALFRAC_SEED, else the built-in default."""
    if seed is not None:
        return int(seed)
    env = os.environ.get("LOCALFRAC_SEED")
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise InputError(f"LOCALFRAC_SEED must be an integer, got '{env}'") from None


@dataclass(frozen=True)
class PropertyCase:
    property: str
    kernel: str
    alpha: float
    functions: tuple[str, ...]
    points: tuple[float, ...]
    tolerance: float
    params: tuple[tuple[str, float], ...] = ()
    item: str = ""

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise InputError(f"unknown property '{self.property}'; known: {', '.join(PROPERTIES)}")
        if not self.tolerance > 0:
            raise InputError(f"tolerance must be > 0, got {self.tolerance!r}")
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "params", tuple((str(k), float(v)) for k, v in self.params))

    def param(self, name: str, default: Optional[float] = None) -> float:
        return dict(self.params).get(name, default)

    @property
    def operator(self) -> str:
        if self.property == "leibniz_defect_model":
            return f"dh:linear@{self.kernel}"
        return f"n@{self.kernel}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["functions"] = list(self.functions)
        d["points"] = list(self.points)
        d["params"] = dict(self.params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PropertyCase":
        try:
            return cls(
                property=d["property"],
                kernel=d["kernel"],
                alpha=float(d["alpha"]),
                functions=tuple(d["functions"]),
                points=tuple(d["points"]),
                tolerance=float(d["tolerance"]),
                params=tuple(dict(d.get("params", {})).items()),
                item=d.get("item", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed property case {d!r}: {exc}") from None


@dataclass(frozen=True)
class CaseResult:
    case: PropertyCase
    status: str
    residual: float
    measured: Optional[float] = None
    reason: str = ""

    def to_dict(self) -> dict:
        d = self.case.to_dict()
        d["operator"] = self.case.operator
        d["status"] = self.status
        d["residual"] = _json_number(self.residual)
        if self.measured is not None:
            d["measured"] = _json_number(self.measured)
        if self.reason:
            d["reason"] = self.reason
        return d


def _json_number(x):
    return x if math.isfinite(x) else repr(x)


@dataclass(frozen=True)
class Report:
    seed: int
    results: tuple[CaseResult, ...] = ()
    suite: str = "custom"

    @property
    def totals(self) -> dict:
        counts = {"cases": len(self.results), "pass": 0, "fail": 0, "skipped": 0}
        for r in self.results:
            counts[r.status] += 1
        return counts

    @property
    def ok(self) -> bool:
        return self.totals["fail"] == 0

    def failures(self) -> list[CaseResult]:
        return [r for r in self.results if r.status == "fail"]

    def by_property(self) -> dict:
        out = {}
        for r in self.results:
            row = out.setdefault(r.case.property, {"pass": 0, "fail": 0, "skipped": 0, "max_residual": 0.0})
            row[r.status] += 1
            if r.status != "skipped" and r.case.property not in EXPECTED_VIOLATIONS:
                row["max_residual"] = max(row["max_residual"], r.residual)
        return out

    def to_dict(self) -> dict:
        return {
            "command": "verify",
            "inputs": {"suite": self.suite, "seed": self.seed},
            "converged": self.ok,
            "totals": self.totals,
            "cases": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_table(self) -> str:
        lines = [f"seed {self.seed}", f"{'property':<30}{'pass':>6}{'fail':>6}{'skip':>6}  max residual"]
        for name, row in self.by_property().items():
            lines.append(
                f"{name:<30}{row['pass']:>6}{row['fail']:>6}{row['skipped']:>6}  {row['max_residual']:.6g}"
            )
        t = self.totals
        lines.append(f"{'total':<30}{t['pass']:>6}{t['fail']:>6}{t['skipped']:>6}")
        for r in self.failures():
            lines.append(
                f"FAIL {r.case.property} {r.case.operator} alpha={r.case.alpha:g} "
                f"{list(r.case.functions)} residual={r.residual:.6g} {r.reason}".rstrip()
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Checks


def _rel(measured: float, expected: float) -> float:
    if expected == 0.0:
        return abs(measured)
    return abs(measured - expected) / abs(expected)


def _n(case, f, t):
    return eval_operator(AdditiveN(get_kernel(case.kernel), case.alpha), f, t).value


def _fn(text):
    return Compiled(parse(text))


def _check_closed_form(case):
    spec = AdditiveN(get_kernel(case.kernel), case.alpha)
    f = parse(case.functions[0])
    cf = closed_form(spec, f)
    return max(_rel(eval_operator(spec, f, t).value, cf(t)) for t in case.points)


def _check_linearity(case):
    f, g = case.functions
    a, b = case.param("a"), case.param("b")
    combo = f"({a!r})*({f}) + ({b!r})*({g})"
    return max(
        _rel(_n(case, combo, t), a * _n(case, f, t) + b * _n(case, g, t)) for t in case.points
    )


def _check_power_rule(case):
    p = case.param("p")
    kernel = get_kernel(case.kernel)
    return max(
        _rel(_n(case, f"t^({p!r})", t), kernel(t, case.alpha) * p * t ** (p - 1.0))
        for t in case.points
    )


def _check_constant(case):
    return max(abs(_n(case, case.functions[0], t)) for t in case.points)


def _check_product(case):
    f, g = case.functions
    fv, gv = _fn(f), _fn(g)
    return max(
        _rel(_n(case, f"({f})*({g})", t), fv(t) * _n(case, g, t) + gv(t) * _n(case, f, t))
        for t in case.points
    )


def _check_quotient(case):
    f, g = case.functions
    fv, gv = _fn(f), _fn(g)
    worst = 0.0
    for t in case.points:
        den = gv(t)
        model = (den * _n(case, f, t) - fv(t) * _n(case, g, t)) / (den * den)
        worst = max(worst, _rel(_n(case, f"({f})/({g})", t), model))
    return worst


def _check_chain(case):
    spec = AdditiveN(get_kernel(case.kernel), case.alpha)
    outer, inner = case.functions
    return max(abs(chain_rule_residual(spec, parse(outer), parse(inner), t)) for t in case.points)


def _check_fundamental(which):
    residual = fundamental_residual_a if which == "a" else fundamental_residual_b

    def check(case):
        t0 = case.param("t0", DOMAIN[0])
        return max(abs(residual(case.kernel, case.alpha, case.functions[0], t0, t)) for t in case.points)

    return check


def _check_leibniz(case):
    """(model residual, measured defect); the model is -beta f g."""
    beta = case.param("beta")
    spec = WeightedDH(get_kernel(case.kernel), case.alpha, beta, "linear")
    f, g = case.functions
    fv, gv = _fn(f), _fn(g)
    worst_model, measured = 0.0, None
    for t in case.points:
        defect = leibniz_defect(spec, f, g, t)
        model = -beta * fv(t) * gv(t)
        if measured is None or abs(defect - model) >= worst_model:
            measured = defect
        worst_model = max(worst_model, abs(defect - model))
        if model == 0.0:
            return worst_model, measured
    return worst_model, measured


def _check_non_semigroup(case):
    """Smallest relative gap between F (F f')' and F^2 f'' over the points."""
    kernel = get_kernel(case.kernel)
    spec = AdditiveN(kernel, case.alpha)
    f = parse(case.functions[0])
    once = closed_form(spec, f)
    f2 = Compiled(diff_classical(diff_classical(f)))
    gaps = []
    for t in case.points:
        twice = eval_operator(spec, once, t).value
        squared = kernel(t, case.alpha) ** 2 * f2(t)
        gaps.append(_rel(twice, squared))
    return min(gaps)


def _far_sequence(case, transform):
    kernel = get_kernel(case.kernel)
    f = parse(case.functions[0])
    fprime = Compiled(diff_classical(f))
    values, worst = [], 0.0
    for t in case.points:
        measured = _n(case, f, t)
        values.append(transform(measured / fprime(t)))
        worst = max(worst, _rel(measured, kernel(t, case.alpha) * fprime(t)))
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    return worst, decreasing, values[-1]


def _check_decay(case):
    """N f / f' = F must shrink toward 0 along increasing t."""
    return _far_sequence(case, abs)


def _check_classical_at_infinity(case):
    """|N f / f' - 1| = |F - 1| must shrink toward 0 along increasing t."""
    return _far_sequence(case, lambda ratio: abs(ratio - 1.0))


_CHECKS: dict[str, Callable] = {
    "closed_form_match": _check_closed_form,
    "linearity": _check_linearity,
    "power_rule": _check_power_rule,
    "constant": _check_constant,
    "product": _check_product,
    "quotient": _check_quotient,
    "chain": _check_chain,
    "fundamental_a": _check_fundamental("a"),
    "fundamental_b": _check_fundamental("b"),
}


def run_case(case: PropertyCase) -> CaseResult:
    """Evaluate one case. Numerical failures become failed results, never exceptions."""
    prop, tol = case.property, case.tolerance
    try:
        if prop == "leibniz_defect_model":
            model_residual, defect = _check_leibniz(case)
            needed = 10 * tol
            model = defect - model_residual if defect is not None else 0.0
            if model_residual > tol:
                return CaseResult(case, "fail", model_residual, defect, "defect does not match -beta f g")
            if abs(defect) <= needed and abs(model) > 0:
                return CaseResult(case, "fail", model_residual, defect, "defect too small to detect")
            return CaseResult(case, "pass", model_residual, defect)
        if prop == "non_semigroup":
            gap = _check_non_semigroup(case)
            status = "pass" if gap > 10 * tol else "fail"
            reason = "" if status == "pass" else "composition indistinguishable from F^2 f''"
            return CaseResult(case, status, gap, gap, reason)
        if prop in ("kernel_decay", "kernel_classical_at_infinity"):
            check = _check_decay if prop == "kernel_decay" else _check_classical_at_infinity
            worst, decreasing, last = check(case)
            if not decreasing:
                return CaseResult(case, "fail", worst, last, "sequence does not decrease")
            status = "pass" if worst <= tol else "fail"
            return CaseResult(case, status, worst, last, "" if status == "pass" else "numeric N disagrees with F f'")
        residual = _CHECKS[prop](case)
    except LocalFracError as exc:
        return CaseResult(case, "fail", math.inf, None, f"{type(exc).__name__}: {exc}")
    if not math.isfinite(residual):
        return CaseResult(case, "fail", residual, None, "non-finite residual")
    return CaseResult(case, "pass" if residual <= tol else "fail", residual)


def run_suite(
    grid: Sequence[PropertyCase],
    seed: Optional[int] = None,
    jobs: int = 1,
    suite: str = "custom",
) -> Report:
    """Run every case; results keep the grid's order whatever ``jobs`` is."""
    grid = list(grid)
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_case, grid, chunksize=max(1, len(grid) // (4 * jobs))))
    else:
        results = [run_case(c) for c in grid]
    return Report(resolve_seed(seed), tuple(results), suite)


# ---------------------------------------------------------------------------
# Grids


def _points(rng, n, lo=DOMAIN[0], hi=DOMAIN[1]):
    return tuple(sorted(round(rng.uniform(lo, hi), 6) for _ in range(n)))


@dataclass
class _GridBuilder:
    rng: random.Random
    points: int
    tolerances: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)

    def add(self, prop, kernel, alpha, functions, points, params=(), item=""):
        tol = self.tolerances.get(prop, DEFAULT_TOLERANCES[prop])
        self.cases.append(PropertyCase(prop, kernel, alpha, tuple(functions), points, tol, tuple(params), item))


DEFAULT_TOLERANCES = {
    "closed_form_match": 1e-6,
    "linearity": 1e-6,
    "power_rule": 1e-6,
    "constant": 1e-9,
    "product": 1e-6,
    "quotient": 1e-6,
    "chain": 1e-5,
    "fundamental_a": 1e-5,
    "fundamental_b": 1e-5,
    "leibniz_defect_model": 1e-5,
    "non_semigroup": 1e-4,
    "kernel_decay": 1e-6,
    "kernel_classical_at_infinity": 1e-6,
}


def build_grid(
    kernels: Iterable[str] = DEFAULT_KERNELS,
    alphas: Iterable[float] = DEFAULT_ALPHAS,
    seed: Optional[int] = None,
    points: int = 5,
    properties: Optional[Iterable[str]] = None,
    tolerances: Optional[dict] = None,
) -> list[PropertyCase]:
    """Cases for every property applicable to each (kernel, alpha).

    Per kernel and order this instantiates rule items a to f over the
    corpus, 17 chain compositions, both fundamental residuals and two
    non-semigroup cases. Item g (alpha = 1) and 21 Leibniz defect cases
    (alpha = 1 - beta) are added once per kernel.
    """
    seed = resolve_seed(seed)
    wanted = set(PROPERTIES if properties is None else properties)
    unknown = wanted - set(PROPERTIES)
    if unknown:
        raise InputError(f"unknown properties: {', '.join(sorted(unknown))}")
    b = _GridBuilder(random.Random(seed), points, dict(tolerances or {}))
    rng = b.rng
    kernels, alphas = list(kernels), [float(a) for a in alphas]
    for name in kernels:
        kernel = get_kernel(name)
        for alpha in alphas:
            for i, f in enumerate(CORPUS):
                b.add("closed_form_match", name, alpha, (f,), _points(rng, points), item="f")
            for i, f in enumerate(CORPUS):
                g = CORPUS[(i + 5) % len(CORPUS)]
                coeffs = (("a", round(rng.uniform(-3, 3), 3)), ("b", round(rng.uniform(-3, 3), 3)))
                b.add("linearity", name, alpha, (f, g), _points(rng, points), coeffs, item="a")
            for _ in range(7):
                p = round(rng.uniform(-2.0, 3.0), 3)
                b.add("power_rule", name, alpha, (f"t^({p!r})",), _points(rng, 1), (("p", p),), item="b")
            lam = round(rng.uniform(-10, 10), 3)
            for c in ("7", repr(lam)):
                b.add("constant", name, alpha, (c,), _points(rng, points), item="c")
            for i, f in enumerate(CORPUS):
                g = CORPUS[(i + 1) % len(CORPUS)]
                b.add("product", name, alpha, (f, g), _points(rng, points), item="d")
            for i, f in enumerate(CORPUS):
                g = _POSITIVE[i % len(_POSITIVE)]
                b.add("quotient", name, alpha, (f, g), _points(rng, points), item="e")
            for k in range(17):
                outer = _OUTER[k % len(_OUTER)]
                inner = CORPUS[k % (len(CORPUS) - 1)]
                b.add("chain", name, alpha, (outer, inner), _points(rng, 1, *_CHAIN_DOMAIN))
            for f in CORPUS:
                b.add("fundamental_a", name, alpha, (f,), _points(rng, 2), (("t0", DOMAIN[0]),))
            for f in CORPUS:
                b.add("fundamental_b", name, alpha, (f,), _points(rng, 2), (("t0", DOMAIN[0]),))
            if name != "classical":
                b.add("non_semigroup", name, alpha, ("t^3",), (1.0,))
                b.add("non_semigroup", name, alpha, ("exp(t)",), _points(rng, points))
            if name == "reciprocal_power":
                b.add("kernel_decay", name, alpha, ("t",), _FAR_POINTS)
            if name in ("nonconformable_exp", "one_plus_reciprocal"):
                b.add("kernel_classical_at_infinity", name, alpha, ("t^2",), _FAR_POINTS)
        for f in CORPUS:
            b.add("closed_form_match", name, 1.0, (f,), _points(rng, points), item="g")
        # the DH order is tied to beta by alpha + beta = 1
        b.add("leibniz_defect_model", name, 0.5, ("t", "t"), (1.0,), (("beta", 0.5),))
        for k in range(20):
            f = _LEIBNIZ[k % len(_LEIBNIZ)]
            g = _LEIBNIZ[(k // len(_LEIBNIZ) + k + 1) % len(_LEIBNIZ)]
            beta = _BETAS[k % len(_BETAS)]
            pts = _points(rng, 1, *_LEIBNIZ_DOMAIN)
            b.add("leibniz_defect_model", name, 1.0 - beta, (f, g), pts, (("beta", beta),))
    return [c for c in b.cases if c.property in wanted]


def default_grid(seed: Optional[int] = None) -> list[PropertyCase]:
    """{conformable, nonconformable_exp} x alpha in {0.1, 0.5, 0.9} over the corpus."""
    return build_grid(DEFAULT_KERNELS, DEFAULT_ALPHAS, seed)


def load_suite(path: str, seed: Optional[int] = None) -> tuple[list[PropertyCase], int]:
    """Read a suite file.

    The file is JSON: either ``{"cases": [...]}`` with explicit case objects,
    or grid options ``{"kernels": [...], "alphas": [...], "points": n,
    "seed": s, "properties": [...], "tolerances": {...}}``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read suite file '{path}': {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"suite file '{path}' is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise InputError("a suite file must hold a JSON object")
    seed = resolve_seed(seed if seed is not None else spec.get("seed"))
    if "cases" in spec:
        return [PropertyCase.from_dict(d) for d in spec["cases"]], seed
    allowed = {"kernels", "alphas", "points", "seed", "properties", "tolerances"}
    extra = set(spec) - allowed
    if extra:
        raise InputError(f"unknown suite keys: {', '.join(sorted(extra))}")
    grid = build_grid(
        spec.get("kernels", DEFAULT_KERNELS),
        spec.get("alphas", DEFAULT_ALPHAS),
        seed,
        int(spec.get("points", 5)),
        spec.get("properties"),
        spec.get("tolerances"),
    )
    return grid, seed
