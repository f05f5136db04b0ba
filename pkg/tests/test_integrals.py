import math

import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sp_integrate

from localfrac import InputError, QuadratureError
from localfrac.expr import compile_expr
from localfrac.integrals import QuadConfig, fundamental_pair_check, integrate, j_integral
from localfrac.kernels import builtin_kernels, get_kernel
from localfrac.verify import CORPUS

KERNELS = [k.name for k in builtin_kernels()]


def scipy_j(kernel, alpha, f, t0, t):
    k, fn = get_kernel(kernel), compile_expr(f)
    value, _ = sp_integrate.quad(lambda s: fn(s) / k(s, alpha), t0, t, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def test_conformable_from_zero():
    r = j_integral("conformable", 0.5, "1", 0.0, 1.0)
    assert r.value == pytest.approx(2.0, rel=1e-10)
    assert r.error_estimate >= 0


@pytest.mark.parametrize("kernel", KERNELS)
def test_zero_integrand(kernel):
    assert j_integral(kernel, 0.5, "0", 0.5, 3.0).value == 0.0


def test_integrand_identically_one():
    assert j_integral("nonconformable_exp", 0.5, "exp(t^-0.5)", 1.0, 3.0).value == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("f", ["t^2", "sin(t)", "exp(-t)*cos(t)", "ln(t)"])
def test_matches_scipy(kernel, f):
    ref = scipy_j(kernel, 0.4, f, 0.3, 4.0)
    assert j_integral(kernel, 0.4, f, 0.3, 4.0).value == pytest.approx(ref, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_conformable_substitution_matches_scipy(alpha):
    # scipy handles the s^(alpha-1) endpoint singularity with its own algebraic weight
    ref, _ = sp_integrate.quad(lambda s: math.cos(s), 0.0, 2.0, weight="alg", wvar=(alpha - 1.0, 0.0))
    assert j_integral("conformable", alpha, "cos(t)", 0.0, 2.0).value == pytest.approx(ref, rel=QuadConfig().rel_tol)


def test_nonconformable_from_zero():
    # 1/F = exp(-t^-alpha) -> 0 as t -> 0+, so the integral starts at 0
    ref = scipy_j("nonconformable_exp", 0.5, "1", 1e-9, 2.0)
    assert j_integral("nonconformable_exp", 0.5, "1", 0.0, 2.0).value == pytest.approx(ref, rel=1e-8)


def test_empty_interval():
    assert j_integral("reciprocal_power", 0.5, "t", 2.0, 2.0).value == 0.0


@given(st.sampled_from(KERNELS), st.floats(0.1, 1.0), st.sampled_from(CORPUS),
       st.floats(0.25, 5.0), st.floats(0.25, 5.0), st.floats(0.25, 5.0))
def test_additivity(kernel, alpha, f, a, b, c):
    t0, t1, t2 = sorted((a, b, c))
    cfg = QuadConfig()
    whole = j_integral(kernel, alpha, f, t0, t2, cfg).value
    parts = j_integral(kernel, alpha, f, t0, t1, cfg).value + j_integral(kernel, alpha, f, t1, t2, cfg).value
    assert abs(whole - parts) <= 2 * max(cfg.abs_tol, cfg.rel_tol * abs(whole))


@given(st.sampled_from(KERNELS), st.floats(0.1, 1.0),
       st.sampled_from(["t", "t^2", "exp(t)", "1/(1+t^2)", "exp(-t)", "7", "sin(t)^2"]),
       st.floats(0.25, 5.0), st.floats(0.0, 4.0))
def test_monotonicity(kernel, alpha, f, t0, span):
    assert j_integral(kernel, alpha, f, t0, t0 + span).value >= 0.0


def test_stalled_singularity_is_an_error():
    with pytest.raises(QuadratureError):
        j_integral("classical", 1.0, "1/(t - 1)^2", 0.5, 2.0, QuadConfig(max_subdivisions=1000))


def test_integrate_plain():
    r = integrate(math.sin, 0.0, math.pi)
    assert r.value == pytest.approx(2.0, rel=1e-10)
    assert r.subdivisions_used >= 1


@pytest.mark.parametrize(
    "args",
    [("conformable", 0.0, "1", 0.0, 1.0), ("conformable", 1.5, "1", 0.0, 1.0), ("conformable", 0.5, "1", 2.0, 1.0),
     ("reciprocal_power", 0.5, "1", -1.0, 1.0)],
)
def test_bad_arguments(args):
    with pytest.raises(InputError):
        j_integral(*args)


def test_reciprocal_power_starts_at_zero():
    # 1/F = t^alpha is finite at 0
    assert j_integral("reciprocal_power", 0.5, "1", 0.0, 1.0).value == pytest.approx(1 / 1.5, rel=1e-9)


def test_quad_config_validation():
    for kwargs in ({"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_subdivisions": 5}, {"max_subdivisions": 10**7}):
        with pytest.raises(InputError):
            QuadConfig(**kwargs)


def test_fundamental_examples():
    a, b = fundamental_pair_check("nonconformable_exp", 0.5, "t^2", 1.0, 2.0)
    assert abs(a) <= 1e-8 and abs(b) <= 1e-8
    a, b = fundamental_pair_check("conformable", 0.5, "sin(t)", 0.5, 3.0)
    assert abs(a) <= 1e-8 and abs(b) <= 1e-8
    a, _ = fundamental_pair_check("robotov", 0.3, "7", 0.5, 3.0)
    assert a == 0.0


def test_fundamental_with_callable():
    """A plain callable goes through the numeric limit instead of the closed form."""
    a, b = fundamental_pair_check("one_plus_reciprocal", 0.5, math.cos, 0.5, 2.5)
    assert abs(a) <= 1e-6 and abs(b) <= 1e-6


def test_fundamental_needs_positive_start():
    with pytest.raises(InputError):
        fundamental_pair_check("conformable", 0.5, "t", 0.0, 1.0)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_fundamental_over_corpus(kernel, alpha):
    worst = 0.0
    for f in CORPUS:
        a, b = fundamental_pair_check(kernel, alpha, f, 0.25, 3.7)
        worst = max(worst, abs(a), abs(b))
    assert worst <= 1e-5
