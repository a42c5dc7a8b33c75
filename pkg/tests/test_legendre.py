import numpy as np
import pytest

from ostrokernel import (
    IntegrationBlowUp,
    Lagrangian1,
    Lagrangian2,
    builtin_lagrangian,
    check_canonical_equivalence,
    hamiltonian1,
    hamiltonian2,
    invert_momentum1,
    invert_p1,
    invert_p2,
    ostrogradsky_map,
)
from ostrokernel.jet import eval_jet1
from ostrokernel.legendre import PhaseState, euler_lagrange_snap

FREE = Lagrangian1(lambda t, x, v: v * v / 2)
QUARTIC_V = Lagrangian1(lambda t, x, v: v**4 / 4)
RK = builtin_lagrangian("riemann-kinetic", m=1.0, alpha=1.0)
PU = builtin_lagrangian("pais-uhlenbeck", omega=1.0)
ACC = Lagrangian2(lambda t, x, v, a: a * a / 2)
ACC_X = Lagrangian2(lambda t, x, v, a: a * a / 2 + x * a)


def test_invert_momentum_examples():
    assert invert_momentum1(FREE, 0.0, 0.0, 3.0).value == pytest.approx(3.0)
    assert invert_momentum1(RK, 0.0, 1.0, 2.0).value == pytest.approx(4.0, abs=1e-12)
    res = invert_momentum1(QUARTIC_V, 0.0, 0.0, 8.0, guess=1.0)
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert abs(res.residual) <= 1e-12


def test_hamiltonian1_examples():
    assert hamiltonian1(FREE, 0.0, 0.0, 3.0) == pytest.approx(4.5)
    assert hamiltonian1(RK, 0.0, 1.0, 2.0) == pytest.approx(4.0, abs=1e-12)
    assert hamiltonian1(QUARTIC_V, 0.0, 0.0, 8.0, guess=1.0) == pytest.approx(12.0, abs=1e-11)


@pytest.mark.parametrize(
    "name, params",
    [("free", {"m": 1.5}), ("harmonic", {"m": 1.0, "omega": 2.0}), ("riemann-kinetic", {"m": 2.0, "alpha": 0.5})],
)
def test_momentum_round_trip(name, params):
    L = builtin_lagrangian(name, params)
    rng = np.random.default_rng(3)
    for x, v in rng.uniform(-2, 2, (50, 2)):
        p = eval_jet1(L, 0.0, x, v).grad[2]
        assert invert_momentum1(L, 0.0, x, p).value == pytest.approx(v, abs=1e-9)


def test_array_inversion_broadcasts():
    X, P = np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-3, 3, 5), indexing="ij")
    H = hamiltonian1(RK, 0.0, X, P)
    np.testing.assert_allclose(H, P * P * (1 + X * X) / 2, rtol=1e-12)


def test_invert_p2_examples():
    assert invert_p2(ACC, 0.0, 0.0, 0.0, 3.0).value == pytest.approx(3.0)
    assert invert_p2(PU, 0.0, 0.0, 0.0, -1.5).value == pytest.approx(-1.5)
    assert invert_p2(ACC_X, 0.0, 2.0, 0.0, 3.0).value == pytest.approx(1.0)


def test_invert_p1_examples():
    assert invert_p1(PU, 0.0, 0.0, 1.0, 2.0, 0.0).value == pytest.approx(-3.0)
    assert invert_p1(ACC, 0.0, 0.0, 0.0, 5.0, 0.0).value == pytest.approx(-5.0)


def test_invert_p1_round_trip_on_quartic():
    L = builtin_lagrangian("quartic-accel", lam=0.5, omega=0.7)
    x, v, a, j = 0.3, -0.4, 0.8, 1.7
    s = ostrogradsky_map(L, 0.0, x, v, a, j)
    assert invert_p2(L, 0.0, s.q1, s.q2, s.p2).value == pytest.approx(a, abs=1e-12)
    assert invert_p1(L, 0.0, s.q1, s.q2, s.p1, s.p2).value == pytest.approx(j, abs=1e-12)


def test_ostrogradsky_map_examples():
    assert ostrogradsky_map(PU, 0.0, 0.0, 1.0, 0.0, 0.0) == PhaseState(0.0, 1.0, -1.0, 0.0)
    s = ostrogradsky_map(ACC, 0.0, 0.0, 0.0, 2.0, 3.0)
    assert (s.p2, s.p1) == (2.0, -3.0)


def test_hamiltonian2_examples():
    assert hamiltonian2(PU, 0.0, 0.0, 1.0, 2.0, 3.0) == pytest.approx(7.0)
    assert hamiltonian2(ACC, 0.0, 0.0, 1.0, 2.0, 3.0) == pytest.approx(6.5)


def test_hamiltonian2_is_affine_in_p1():
    L = builtin_lagrangian("quartic-accel", lam=0.3, omega=1.1)
    q1, q2, p2 = 0.2, -0.7, 0.9
    h = [hamiltonian2(L, 0.0, q1, q2, p1, p2) for p1 in (-1.0, 0.0, 1.0)]
    assert abs(h[0] - 2 * h[1] + h[2]) <= 1e-12
    assert (h[2] - h[0]) / 2 == pytest.approx(q2, abs=1e-12)


def test_euler_lagrange_snap_pais_uhlenbeck():
    # x'''' = -ω² x'' for a²/2 - ω² v²/2
    assert euler_lagrange_snap(PU, 0.0, 0.1, 0.2, 0.5, 0.4) == pytest.approx(-0.5)
    assert euler_lagrange_snap(ACC, 0.0, 0.1, 0.2, 0.5, 0.4) == pytest.approx(0.0, abs=1e-15)


def test_canonical_zero_state_is_exact():
    assert check_canonical_equivalence(PU, PhaseState(0.0, 0.0, 0.0, 0.0), 1.0, 1e-2) == 0.0


def test_canonical_pure_acceleration_cubic_solution():
    worst, ts, zs, ys = check_canonical_equivalence(ACC, [0.0, 1.0, 0.0, 0.0], 1.0, 1e-3, trajectories=True)
    assert worst <= 1e-8
    # initial (0, 1, 0, 0): a = p2 = 0, jerk = -p1 = 0, so x = t
    np.testing.assert_allclose(zs[-1], [1.0, 1.0, 0.0, 0.0], atol=1e-9)


def test_canonical_pais_uhlenbeck_short_horizon():
    assert check_canonical_equivalence(PU, [0.1, 0.05, -0.02, 0.03], 1.0, 1e-3) <= 1e-9


def test_canonical_blow_up_reports_escape_time():
    L = Lagrangian2(lambda t, x, v, a: a * a / 2 + 50.0 * x * x)
    with pytest.raises(IntegrationBlowUp) as info:
        check_canonical_equivalence(L, [1.0, 0.0, 0.0, 0.0], 50.0, 1e-2, bound=1e3)
    assert 0 < info.value.escape_time < 50.0
