import math

import numpy as np
import pytest

from ostrokernel import (
    DomainError,
    EvaluationError,
    Lagrangian1,
    Lagrangian2,
    builtin_lagrangian,
    eval_jet1,
    eval_jet2,
    expression_lagrangian,
)
from ostrokernel.jet import BUILTIN_NAMES

BUILTINS = {
    "free": {"m": 1.3},
    "harmonic": {"m": 0.7, "omega": 1.9},
    "linear-potential": {"m": 1.1, "force": 0.4},
    "riemann-kinetic": {"m": 2.0, "alpha": 0.5},
    "pais-uhlenbeck": {"omega": 1.3},
    "quartic-accel": {"lam": 0.6, "omega": 0.8},
}


def _lag1(f):
    return Lagrangian1(f)


def _lag2(f):
    return Lagrangian2(f)


def test_free_kinetic_jet():
    J = eval_jet1(_lag1(lambda t, x, v: v * v / 2), 0.0, 0.0, 2.0)
    assert J.value == 2.0
    np.testing.assert_array_equal(J.grad, [0.0, 0.0, 2.0])
    expected = np.zeros((3, 3))
    expected[2, 2] = 1.0
    np.testing.assert_array_equal(J.hess, expected)


def test_riemann_kinetic_jet_at_unit_point():
    L = builtin_lagrangian("riemann-kinetic", m=1.0, alpha=1.0)
    for method in ("closed", "dual"):
        J = eval_jet1(L, 0.0, 1.0, 2.0, method=method)
        assert J.value == pytest.approx(1.0, abs=1e-15)
        assert J.grad[2] == pytest.approx(1.0, abs=1e-15)


def test_linear_potential_gradient():
    L = _lag1(lambda t, x, v: v * v / 2 - x)
    for x in (-3.0, 0.0, 5.0):
        J = eval_jet1(L, 0.2, x, 0.7)
        assert J.grad[1] == -1.0
        assert J.hess[1, 1] == 0.0


def test_second_order_examples():
    J = eval_jet2(_lag2(lambda t, x, v, a: a * a / 2), 0.0, 0.0, 0.0, 3.0)
    assert (J.value, J.grad[3], J.hess[3, 3]) == (4.5, 3.0, 1.0)
    J = eval_jet2(builtin_lagrangian("pais-uhlenbeck", omega=1.0), 0.0, 0.0, 1.0, 0.0)
    assert J.value == -0.5 and J.grad[2] == -1.0
    J = eval_jet2(_lag2(lambda t, x, v, a: a * a / 2 + x * a), 0.0, 2.0, 0.0, 1.0)
    assert J.grad[3] == 3.0 and J.hess[1, 3] == 1.0


def test_builtin_values():
    free = builtin_lagrangian("free", m=1.0)
    assert free(0.0, 0.3, 2.0) == 2.0
    rk = builtin_lagrangian("riemann-kinetic", {"m": 1.0, "alpha": 1.0})
    assert rk(0.0, 1.0, 2.0) == pytest.approx(1.0)
    pu = builtin_lagrangian("pais-uhlenbeck", omega=1.0)
    assert pu(0.0, 0.5, 2.0, 3.0) == pytest.approx(4.5 - 2.0)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_closed_jet_matches_dual_and_finite_differences(name):
    L = builtin_lagrangian(name, BUILTINS[name])
    rng = np.random.default_rng(11)
    n = L.nargs
    h = 1e-4
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(-1.5, 1.5, n)
        evalj = eval_jet1 if n == 3 else eval_jet2
        Jc = evalj(L, *p, method="closed")
        Jd = evalj(L, *p, method="dual")
        np.testing.assert_allclose(Jc.grad, Jd.grad, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(Jc.hess, Jd.hess, rtol=1e-12, atol=1e-12)
        e = np.eye(n)
        for i in range(n):
            gfd = (L(*(p + h * e[i])) - L(*(p - h * e[i]))) / (2 * h)
            worst = max(worst, abs(gfd - Jd.grad[i]) / max(1.0, abs(Jd.grad[i])))
            for j in range(n):
                hfd = (
                    L(*(p + h * e[i] + h * e[j]))
                    - L(*(p + h * e[i] - h * e[j]))
                    - L(*(p - h * e[i] + h * e[j]))
                    + L(*(p - h * e[i] - h * e[j]))
                ) / (4 * h * h)
                worst = max(worst, abs(hfd - Jd.hess[i, j]) / max(1.0, abs(Jd.hess[i, j])))
        np.testing.assert_array_equal(Jd.hess, Jd.hess.T)
    assert worst <= 1e-6


def test_unknown_builtin_rejected():
    with pytest.raises(ValueError, match="unknown Lagrangian"):
        builtin_lagrangian("nope")


def test_domain_violation_rejected():
    L = Lagrangian1(lambda t, x, v: v * v / 2, domain=((-1, 1), (-1, 1), (-5, 5)))
    with pytest.raises(DomainError):
        eval_jet1(L, 0.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        L(0.0, 0.0, 6.0)


def test_nonfinite_value_is_evaluation_error():
    L = Lagrangian1(lambda t, x, v: v * v * 1e308 * 1e308)
    with np.errstate(over="ignore"), pytest.raises(EvaluationError):
        eval_jet1(L, 0.0, 1.0, 1.0)


def test_expression_lagrangian_matches_builtin():
    L = expression_lagrangian("a**2/2 - w**2*v**2/2", 2, {"w": 1.3})
    pu = builtin_lagrangian("pais-uhlenbeck", omega=1.3)
    p = (0.1, 0.4, -0.2, 0.9)
    Je, Jb = eval_jet2(L, *p), eval_jet2(pu, *p)
    assert Je.value == pytest.approx(Jb.value, rel=1e-14)
    np.testing.assert_allclose(Je.hess, Jb.hess, atol=1e-14)
    assert L.autonomous


def test_expression_with_functions_and_time():
    L = expression_lagrangian("v**2/2 + sin(x)*t - exp(-x**2) + pi", 1)
    J = eval_jet1(L, 0.5, 0.3, 1.0)
    assert J.value == pytest.approx(0.5 + math.sin(0.3) * 0.5 - math.exp(-0.09) + math.pi)
    assert J.grad[0] == pytest.approx(math.sin(0.3))
    assert not L.autonomous


@pytest.mark.parametrize(
    "expr",
    [
        "__import__('os').system('true')",
        "v.real",
        "(lambda q: q)(v)",
        "open('x')",
        "v if x else a",
        "y*v",
        "sin(x, y=1)",
    ],
)
def test_expression_rejects_unsafe_or_unknown(expr):
    with pytest.raises(ValueError):
        expression_lagrangian(expr, 2)


def test_expression_rejects_reserved_parameter_names():
    with pytest.raises(ValueError, match="shadow"):
        expression_lagrangian("v**2", 1, {"sin": 1.0})
