import math
import random

import pytest
from hypothesis import given, strategies as st

from localfrac import DomainError, InputError, NonConvergenceError, OverflowGuardError
from localfrac.expr import evaluate
from localfrac.kernels import (
    CLASSICAL_SLOPE,
    NON_CLASSICAL,
    REGISTRY,
    Kernel,
    KernelRegistry,
    builtin_kernels,
    get_kernel,
    kernel_eval,
)

from oracles import mp_kernel, rel_err

NAMES = [k.name for k in builtin_kernels()]


def test_builtin_names():
    assert NAMES == [
        "conformable",
        "nonconformable_exp",
        "reciprocal_power",
        "one_plus_reciprocal",
        "mellin_ross",
        "robotov",
        "classical",
    ]


def test_examples():
    assert kernel_eval(get_kernel("conformable"), 4.0, 0.5) == 2.0
    assert kernel_eval(get_kernel("nonconformable_exp"), 1.0, 0.7) == pytest.approx(math.e, rel=1e-15)
    assert kernel_eval(get_kernel("classical"), 3.3, 0.2) == 1.0
    assert kernel_eval(get_kernel("reciprocal_power"), 8.0, 1 / 3) == pytest.approx(0.5, rel=1e-15)
    assert kernel_eval(get_kernel("mellin_ross:a=1"), 1.0, 1.0) == pytest.approx(math.e - 1, rel=1e-12)


def test_one_plus_reciprocal_at_infinity():
    value = kernel_eval(get_kernel("one_plus_reciprocal"), 1e12, 0.5)
    assert 1.0 <= value <= 1.0 + 1e-6


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("t", [0.3, 1.0, 2.7, 6.5])
def test_kernel_matches_mpmath(name, alpha, t):
    assert rel_err(kernel_eval(get_kernel(name), t, alpha), mp_kernel(name, t, alpha)) < 1e-12


def test_positivity():
    rng = random.Random(11)
    for kernel in builtin_kernels():
        for _ in range(10_000):
            t, alpha = rng.uniform(0.01, 6.0), rng.uniform(1e-3, 1.0)
            value = kernel_eval(kernel, t, alpha)
            assert value > 0 and math.isfinite(value), (kernel.name, t, alpha)


@given(st.floats(1e-3, 1e6))
def test_conformable_is_classical_at_one(t):
    assert kernel_eval(get_kernel("conformable"), t, 1.0) == 1.0


def test_series_kernels_stop_at_the_safe_bound():
    # beta t^(alpha+1) = 9^1.9 > 50
    with pytest.raises(NonConvergenceError):
        get_kernel("robotov")(9.0, 0.9)
    with pytest.raises(NonConvergenceError):
        get_kernel("mellin_ross:a=2")(30.0, 0.5)


def test_limit_tags():
    assert get_kernel("conformable").limit_alpha_to_1 == CLASSICAL_SLOPE
    nc = get_kernel("nonconformable_exp")
    assert nc.limit_alpha_to_1 == NON_CLASSICAL
    assert kernel_eval(nc, 1.0, 1.0) == pytest.approx(math.e) != 1.0


@pytest.mark.parametrize("name", [n for n in NAMES if n != "classical"])
@pytest.mark.parametrize("t", [0.0, -1.0])
def test_outside_domain_is_an_error(name, t):
    with pytest.raises(DomainError):
        kernel_eval(get_kernel(name), t, 0.5)


def test_classical_is_defined_everywhere():
    assert kernel_eval(get_kernel("classical"), -3.0, 0.5) == 1.0


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
def test_alpha_range(alpha):
    with pytest.raises(InputError):
        kernel_eval(get_kernel("conformable"), 1.0, alpha)


def test_overflow_guard():
    nc = get_kernel("nonconformable_exp")
    with pytest.raises(OverflowGuardError):
        kernel_eval(nc, 1e-4, 0.8)  # t^-alpha ~ 1585 > 700
    kernel_eval(nc, 1e-3, 0.9)  # t^-alpha ~ 501


@pytest.mark.parametrize("name", NAMES)
def test_weight_is_reciprocal(name):
    k = get_kernel(name)
    for t in (0.2, 1.0, 4.0):
        assert k.weight(t, 0.6) == pytest.approx(1.0 / k(t, 0.6), rel=1e-14)


def test_weight_survives_kernel_overflow():
    nc = get_kernel("nonconformable_exp")
    assert nc.weight(1e-6, 0.9) == 0.0  # exp(-t^-alpha) underflows quietly
    assert nc.weight(0.0, 0.5) == 0.0


@pytest.mark.parametrize("name", NAMES)
def test_expression_matches_function(name):
    k = get_kernel(name)
    e = k.expression(0.4)
    if e is None:
        assert name in ("mellin_ross", "robotov")
        return
    for t in (0.5, 2.0, 7.0):
        assert evaluate(e, t) == pytest.approx(k(t, 0.4), rel=1e-14)


def test_parameterized_lookup():
    k = get_kernel("robotov:beta=2.5")
    assert k.params == (("beta", 2.5),)
    assert rel_err(k(1.3, 0.5), mp_kernel("robotov", 1.3, 0.5, 2.5)) < 1e-12
    assert get_kernel("mellin_ross") is REGISTRY.get("mellin_ross")


@pytest.mark.parametrize(
    "text", ["nope", "mellin_ross:b=1", "mellin_ross:a", "mellin_ross:a=x", "conformable:a=1"]
)
def test_bad_lookup(text):
    with pytest.raises(InputError):
        get_kernel(text)


def test_registry_add_and_protect():
    reg = KernelRegistry.with_builtins()
    k = reg.register(Kernel("double", lambda t, a: 2.0))
    assert reg.get("double") is k
    with pytest.raises(InputError):
        reg.register(Kernel("double", lambda t, a: 3.0))
    with pytest.raises(InputError):
        reg.register(Kernel("conformable", lambda t, a: 3.0))
    with pytest.raises(InputError):
        reg.register(Kernel("mellin_ross", lambda t, a: 3.0))
    with pytest.raises(TypeError):
        reg.kernels["x"] = k
    assert "double" not in REGISTRY.names()


def test_user_kernel_must_be_positive():
    bad = Kernel("sign", lambda t, a: math.sin(t))
    with pytest.raises(DomainError):
        bad(4.0, 0.5)
