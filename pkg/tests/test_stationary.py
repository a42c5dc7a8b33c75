import cmath
import math

import numpy as np
import pytest

from ostrokernel import (
    Lagrangian1,
    Lagrangian2,
    StationaryPointError,
    builtin_lagrangian,
    norm1,
    norm2,
    solve_sp1,
    solve_sp2,
)
from ostrokernel.convergence import fit_slope
from ostrokernel.legendre import invert_momentum1, invert_p1, invert_p2
from ostrokernel.stationary import (
    PhaseFunction,
    cancellation_diagnostic,
    cancellation_groups,
    fd_hessian2,
    fresnel_oracle_1d,
    fresnel_oracle_2d,
    hessian_det2,
)

FREE = builtin_lagrangian("free", m=1.0)
RK = builtin_lagrangian("riemann-kinetic", m=1.0, alpha=1.0)
ACC = Lagrangian2(lambda t, x, v, a: a * a / 2)
PU = builtin_lagrangian("pais-uhlenbeck", omega=1.0)
QA = builtin_lagrangian("quartic-accel", lam=0.5, omega=1.0)


def test_sp1_free_examples():
    p = solve_sp1(FREE, 0.0, 0.1, 0.0, 1.0)
    assert p.converged and p.x1_sp == pytest.approx(-0.1, abs=1e-14)
    assert solve_sp1(FREE, 0.0, 0.1, 0.7, 0.0).x1_sp == pytest.approx(0.7, abs=1e-15)


def test_sp1_quadratic_converges_in_one_iteration():
    L = builtin_lagrangian("harmonic", m=1.0, omega=2.0)
    p = solve_sp1(L, 0.0, 0.05, 0.3, 1.2, guess=5.0)
    assert p.iterations <= 1
    phase = PhaseFunction(L, 0.0, 0.05, 0.3, 1.2)
    h = 1e-5
    assert abs(phase(p.x1_sp + h) - phase(p.x1_sp - h)) / (2 * h) <= 1e-7


def test_sp1_slope_tends_to_F_at_first_order():
    x2, k = 0.5, 1.3
    F = invert_momentum1(RK, 0.0, x2, k).value
    deltas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    errs = [abs(solve_sp1(RK, 0.0, d, x2, k).slope - F) for d in deltas]
    assert fit_slope(list(zip(deltas, errs))).slope >= 0.8


def test_sp1_riemann_at_origin_gives_second_order_offset():
    # F = p at x2 = 0, so x1 -> x2 - ħkΔ with at least O(Δ²) error
    # (the x -> -x symmetry of L makes it O(Δ³) here)
    deltas = [1e-1, 5e-2, 2.5e-2, 1.25e-2]
    errs = [abs(solve_sp1(RK, 0.0, d, 0.0, 1.0).x1_sp + d) for d in deltas]
    assert fit_slope(list(zip(deltas, errs))).slope >= 1.7


def test_sp2_free_cell_is_straight_line():
    p = solve_sp2(ACC, 0.0, 0.2, 0.4, 0.9, 0.0, 0.0)
    assert p.converged
    assert p.x1_sp == pytest.approx(0.4 - 0.2 * 0.9, abs=1e-14)
    assert p.xdot1_sp == pytest.approx(0.9, abs=1e-14)
    assert p.accel == pytest.approx(0.0, abs=1e-12) and p.jerk == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("L", [PU, QA], ids=["pais-uhlenbeck", "quartic-accel"])
def test_sp2_recovers_F2_and_F1(L):
    x2, v2, k, kp = 0.3, 0.7, 0.4, 0.6
    F2 = invert_p2(L, 0.0, x2, v2, kp).value
    F1 = invert_p1(L, 0.0, x2, v2, k, kp).value
    deltas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    pts = [solve_sp2(L, 0.0, d, x2, v2, k, kp) for d in deltas]
    assert all(p.converged for p in pts)
    ea = fit_slope([(d, abs(p.accel - F2)) for d, p in zip(deltas, pts)]).slope
    ej = fit_slope([(d, abs(p.jerk - F1)) for d, p in zip(deltas, pts)]).slope
    assert ea >= 0.8 and ej >= 0.8


def test_sp2_stationarity_on_quadrature_action():
    p = solve_sp2(QA, 0.0, 0.05, 0.3, 0.7, 0.4, 0.6)
    phase = PhaseFunction(QA, 0.0, 0.05, 0.3, 0.4, xdot2=0.7, kprime=0.6)
    hx, hv = 1e-7, 1e-6
    gx = (phase(p.x1_sp + hx, p.xdot1_sp) - phase(p.x1_sp - hx, p.xdot1_sp)) / (2 * hx)
    gv = (phase(p.x1_sp, p.xdot1_sp + hv) - phase(p.x1_sp, p.xdot1_sp - hv)) / (2 * hv)
    assert abs(gx) <= 1e-3 and abs(gv) <= 1e-4


def test_sp2_failure_surfaces():
    with pytest.raises(StationaryPointError):
        solve_sp2(QA, 0.0, 0.1, 0.3, 0.7, 0.4, 0.6, max_iter=0)
    p = solve_sp2(QA, 0.0, 0.1, 0.3, 0.7, 0.4, 0.6, max_iter=0, raise_on_fail=False)
    assert not p.converged


def test_cancellation_zero_for_straight_cell():
    p = solve_sp2(ACC, 0.0, 0.01, 0.0, 0.5, 0.0, 0.0)
    g1, g2, tot = cancellation_groups(ACC, p)
    assert abs(g1) <= 1e-9 and abs(g2) <= 1e-9 and abs(tot) <= 1e-9


def test_cancellation_groups_diverge_while_sum_stays_bounded():
    deltas = np.geomspace(1e-2, 1e-4, 6)
    pts = [solve_sp2(PU, 0.0, d, 0.3, 0.7, 0.4, 0.6) for d in deltas]
    rep = cancellation_diagnostic(PU, pts)
    assert rep.slopes["group_L"] == pytest.approx(-1.0, abs=0.1)
    assert rep.slopes["group_La"] == pytest.approx(-1.0, abs=0.1)
    assert rep.slopes["total"] >= -0.1


def test_norm1_free_example():
    n = norm1(FREE, 0.0, 0.1, 0.0, 1.0)
    assert abs(n) == pytest.approx(1.26157, abs=1e-5)
    assert abs(n) == pytest.approx((2 * math.pi * 0.1) ** -0.5, rel=1e-14)
    assert cmath.phase(n) == pytest.approx(-math.pi / 4, abs=1e-14)
    assert abs(norm1(FREE, 0.0, 0.4, 0.0, 1.0)) == pytest.approx(abs(n) / 2, rel=1e-14)


def test_norm2_and_determinant_examples():
    assert hessian_det2(ACC, 0.0, 0.5, 0.0, 0.0, 0.0).det == pytest.approx(192.0, rel=1e-14)
    n = norm2(ACC, 0.0, 1.0, 0.0, 0.0, 0.0)
    assert abs(n) == pytest.approx(0.55133, abs=1e-5)
    assert abs(n) == pytest.approx(math.sqrt(12) / (2 * math.pi), rel=1e-14)
    assert cmath.phase(n) == pytest.approx(-math.pi / 2, abs=1e-14)
    assert abs(norm2(ACC, 0.0, 2.0, 0.0, 0.0, 0.0)) == pytest.approx(abs(n) / 4, rel=1e-14)


def test_hessian_entries_in_ratio():
    H = hessian_det2(PU, 0.0, 0.2, 0.1, 0.3, 0.4)
    d = 0.2
    assert H.d_x1x1 * d**3 / 12 == pytest.approx(H.laa)
    assert H.d_x1xdot1 * d**2 / -6 == pytest.approx(H.laa)
    assert H.d_xdot1xdot1 * d / 4 == pytest.approx(H.laa)


def test_fd_determinant_quartic_first_order_agreement():
    x2, v2, k, kp = 0.3, 0.7, 0.4, 0.6
    deltas = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3]
    errs = []
    for d in deltas:
        p = solve_sp2(QA, 0.0, d, x2, v2, k, kp)
        Dfd = np.linalg.det(fd_hessian2(QA, p))
        errs.append(abs(Dfd / hessian_det2(QA, 0.0, d, x2, v2, kp).det - 1.0))
    assert fit_slope(list(zip(deltas, errs))).slope == pytest.approx(1.0, abs=0.3)


def test_fd_determinant_pais_uhlenbeck_meets_lower_bound():
    x2, v2, k, kp = 0.3, 0.7, 0.4, 0.6
    deltas = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3]
    errs = []
    for d in deltas:
        p = solve_sp2(PU, 0.0, d, x2, v2, k, kp)
        errs.append(abs(np.linalg.det(fd_hessian2(PU, p)) / hessian_det2(PU, 0.0, d, x2, v2, kp).det - 1.0))
    assert fit_slope(list(zip(deltas, errs))).slope >= 0.7


def test_fresnel_oracles():
    # closed forms √(2π/|s|) e^{±iπ/4}
    for s in (2.5, -0.7):
        exact = math.sqrt(2 * math.pi / abs(s)) * cmath.exp(1j * math.copysign(math.pi / 4, s))
        assert abs(fresnel_oracle_1d(s) - exact) <= 1e-9
    B = np.array([[3.0, 1.0], [1.0, -2.0]])
    w = np.linalg.eigvalsh(B)
    exact = np.prod([math.sqrt(2 * math.pi / abs(x)) * cmath.exp(1j * math.copysign(math.pi / 4, x)) for x in w])
    assert abs(fresnel_oracle_2d(B) - exact) <= 1e-9


def test_normalizations_cancel_fresnel_integrals():
    d = 0.01
    n = norm1(RK, 0.0, d, 0.5, 1.3)
    F = invert_momentum1(RK, 0.0, 0.5, 1.3).value
    c = 1.0 / (1 + 0.25)  # ∂²L/∂v² at x = 0.5
    assert abs(n * fresnel_oracle_1d(c / d) - 1.0) <= 1e-8
    assert F == pytest.approx(1.3 * 1.25)
    for L in (PU, QA):
        H = hessian_det2(L, 0.0, d, 0.3, 0.7, 0.6)
        assert abs(norm2(L, 0.0, d, 0.3, 0.7, 0.6) * fresnel_oracle_2d(H.as_matrix()) - 1.0) <= 1e-8


def test_negative_curvature_branch():
    L = Lagrangian2(lambda t, x, v, a: -(a * a) / 2)
    H = hessian_det2(L, 0.0, 0.1, 0.0, 0.0, 0.0)
    assert abs(norm2(L, 0.0, 0.1, 0.0, 0.0, 0.0) * fresnel_oracle_2d(H.as_matrix()) - 1.0) <= 1e-8
    L1 = Lagrangian1(lambda t, x, v: -(v * v) / 2)
    assert abs(norm1(L1, 0.0, 0.1, 0.0, 0.5) * fresnel_oracle_1d(-1.0 / 0.1) - 1.0) <= 1e-8
