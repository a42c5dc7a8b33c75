"""Legendre and Ostrogradsky transformations.

Momentum relations are inverted numerically with :func:`newton_solve`; the
Hamiltonians follow from the inverted velocities/accelerations.  All
functions broadcast over numpy arrays so that symbol fields on phase-space
grids can be built in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual import Dual2, hess_index, new_level, seed
from .errors import IntegrationBlowUp, SingularLagrangianError
from .jet import closed_or_dual, partials
from .newton import newton_solve

__all__ = [
    "PhaseState",
    "InversionResult",
    "invert_momentum1",
    "hamiltonian1",
    "invert_p2",
    "invert_p1",
    "ostrogradsky_map",
    "hamiltonian2",
    "euler_lagrange_snap",
    "check_canonical_equivalence",
    "TOL_NEWTON",
    "MAX_ITER",
]

TOL_NEWTON = 1e-12
MAX_ITER = 50


@dataclass(frozen=True)
class PhaseState:
    """Ostrogradsky canonical coordinates."""

    q1: float
    q2: float
    p1: float
    p2: float

    def as_array(self):
        return np.array([self.q1, self.q2, self.p1, self.p2], dtype=float)

    @classmethod
    def from_array(cls, z):
        q1, q2, p1, p2 = (float(c) for c in z)
        return cls(q1, q2, p1, p2)


@dataclass(frozen=True)
class InversionResult:
    value: object
    residual: object
    iterations: int


def _top_derivs(L, args):
    """``∂L/∂u`` and ``∂²L/∂u²`` for the last argument ``u``."""
    if L.closed_jet is not None:
        L.check_domain(*args)
        _, g, h = L.closed_jet(*args)
        return g[-1], h[-1][-1]
    _, g, h = partials(L, args, wrt=(L.nargs - 1,))
    return g[0], h[(0, 0)]


def _invert_last(L, head, target, guess, tol, max_iter, bracket, what):
    def fun(u):
        d1, d2 = _top_derivs(L, (*head, u))
        return d1 - target, d2

    if guess is None:
        guess = 0.0
    shape = np.broadcast_shapes(*(np.shape(u) for u in (*head, target, guess)))
    if np.shape(guess) != shape:
        guess = np.broadcast_to(np.asarray(guess, dtype=float), shape) if shape else float(guess)
    value, res, d2, it = newton_solve(
        fun, guess, tol=tol, max_iter=max_iter, bracket=bracket, eps_sing=L.eps_sing, what=what
    )
    if np.any(np.abs(d2) < L.eps_sing):
        raise SingularLagrangianError(f"{what}: singular second derivative at the solution")
    return InversionResult(value, res, it)


def invert_momentum1(L, t, x, p, guess=None, *, tol=TOL_NEWTON, max_iter=MAX_ITER, bracket=None):
    """Solve ``∂L/∂v(t, x, v) = p`` for the velocity ``v = F(t, x, p)``.

    For non-convex Lagrangians the branch is selected by ``guess`` or
    ``bracket``; no global root search is attempted.
    """
    return _invert_last(L, (t, x), p, guess, tol, max_iter, bracket, "invert_momentum1")


def hamiltonian1(L, t, x, p, guess=None, **kw):
    """``H(t, x, p) = p F - L(t, x, F)`` with ``F`` from :func:`invert_momentum1`."""
    F = invert_momentum1(L, t, x, p, guess, **kw).value
    return p * F - L(t, x, F)


def invert_p2(L, t, q1, q2, p2, guess=None, *, tol=TOL_NEWTON, max_iter=MAX_ITER, bracket=None):
    """Solve ``∂L/∂a(t, q1, q2, a) = p2`` for ``a = F2(t, q1, q2, p2)``.

    ``p1`` is deliberately absent from the signature: the acceleration never
    depends on it.
    """
    return _invert_last(L, (t, q1, q2), p2, guess, tol, max_iter, bracket, "invert_p2")


def _p1_pieces(L, t, x, v, a):
    """``(p2, c, L_aa)`` with ``p1 = c - jerk·L_aa`` along the expanded Ostrogradsky momentum."""
    _, g, h = closed_or_dual(L, (t, x, v, a))
    c = g[2] - h[0][3] - v * h[1][3] - a * h[2][3]
    return g[3], c, h[3][3]


def invert_p1(L, t, q1, q2, p1, p2, guess=None, **kw):
    """Solve the expanded first Ostrogradsky momentum for the jerk ``F1``.

    The relation is affine in the jerk with slope ``-∂²L/∂a²``, so a single
    Newton step from any start is exact; ``guess`` is accepted for symmetry
    with the other inversions and ignored.
    """
    a = invert_p2(L, t, q1, q2, p2, **kw).value
    _, c, laa = _p1_pieces(L, t, q1, q2, a)
    if np.any(np.abs(laa) < L.eps_sing):
        raise SingularLagrangianError("invert_p1: ∂²L/∂a² vanishes")
    j = (c - p1) / laa
    residual = c - j * laa - p1
    if np.ndim(j) == 0:
        j, residual = float(j), float(residual)
    return InversionResult(j, residual, 1)


def ostrogradsky_map(L, t, x, v, a, j):
    """Map a fourth-order state ``(x, v, a, jerk)`` to ``(q1, q2, p1, p2)``."""
    p2, c, laa = _p1_pieces(L, t, x, v, a)
    p1 = c - j * laa
    if np.ndim(p1) == 0 and np.ndim(x) == 0:
        return PhaseState(float(x), float(v), float(p1), float(p2))
    return PhaseState(x, v, p1, p2)


def hamiltonian2(L, t, q1, q2, p1, p2, guess=None, **kw):
    """Ostrogradsky Hamiltonian ``-L(t, q1, q2, F2) + p1 q2 + p2 F2``."""
    F2 = invert_p2(L, t, q1, q2, p2, guess, **kw).value
    return -L(t, q1, q2, F2) + p1 * q2 + p2 * F2


def _part(u, *path):
    """Walk ``path`` of ``('v'|'g'|'h', index)`` steps through nested duals."""
    for kind, idx in path:
        if not isinstance(u, Dual2):
            return 0.0
        u = u.v if kind == "v" else (u.g[idx] if kind == "g" else u.h[idx])
    return u.v if isinstance(u, Dual2) else u


def euler_lagrange_snap(L, t, x, v, a, j):
    """Fourth derivative ``x''''`` from the Euler–Lagrange equation of ``L``.

    Solves ``∂L/∂x - d/dt ∂L/∂v + d²/dt² ∂L/∂a = 0``, which is affine in the
    snap.  The total time derivatives are taken along the Taylor curve of the
    state with a second-order dual in time whose components are themselves
    duals in ``(x, v, a)``.
    """
    sx, sv, sa = seed((x, v, a))
    lev = new_level()
    tc = Dual2(t, [1.0], [0.0], lev)
    xc = Dual2(sx, [v], [a], lev)
    vc = Dual2(sv, [a], [j], lev)
    ac = Dual2(sa, [j], [0.0], lev)
    R = L.eval(tc, xc, vc, ac)
    d2_la = _part(R, ("h", 0), ("g", 2))
    d1_lv = _part(R, ("g", 0), ("g", 1))
    l_x = _part(R, ("v", 0), ("g", 0))
    l_aa = _part(R, ("v", 0), ("h", hess_index(3, 2, 2)))
    if abs(l_aa) < L.eps_sing:
        raise SingularLagrangianError("Euler–Lagrange: ∂²L/∂a² vanishes")
    return -(l_x - d1_lv + d2_la) / l_aa


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def hamilton_rhs(L, t, fd_rel=1e-6):
    """Right-hand side of Hamilton's equations for ``H2`` by central differences."""
    signs = np.concatenate([np.eye(4), -np.eye(4)])

    def rhs(z):
        h = fd_rel * np.maximum(1.0, np.abs(z))
        pts = z + signs * h
        q1, q2, p1, p2 = pts.T
        F2 = _invert_last(L, (t, q1, q2), p2, rhs.guess, TOL_NEWTON, MAX_ITER, None, "invert_p2").value
        H = p1 * q2 + p2 * F2 - L(t, q1, q2, F2)
        rhs.guess = F2
        grad = (H[:4] - H[4:]) / (2.0 * h)
        return np.array([grad[2], grad[3], -grad[0], -grad[1]])

    rhs.guess = np.zeros(8)
    return rhs


def check_canonical_equivalence(L, initial, horizon, dt, *, fd_rel=1e-6, t=0.0, bound=1e8, trajectories=False):
    """Compare Hamilton's flow of ``H2`` with the Euler–Lagrange flow of ``L``.

    Both systems are advanced with fixed-step RK4 from the same canonical
    initial state (the fourth-order side starts from the inverted
    ``(x, v, F2, F1)``).  Returns the maximum Euclidean phase-space distance
    between the Hamiltonian trajectory and the Ostrogradsky image of the
    Euler–Lagrange trajectory; with ``trajectories=True`` also the sample
    times and both trajectories.

    Only time-independent Lagrangians are integrated exactly as autonomous
    systems; ``t`` fixes the time argument.
    """
    if isinstance(initial, PhaseState):
        z = initial.as_array()
    else:
        z = np.asarray(initial, dtype=float).copy()
    q1, q2, p1, p2 = z
    a0 = invert_p2(L, t, q1, q2, p2).value
    j0 = invert_p1(L, t, q1, q2, p1, p2).value
    y = np.array([q1, q2, a0, j0], dtype=float)

    ham = hamilton_rhs(L, t, fd_rel)
    ham.guess = np.full(8, a0)

    def el(s):
        return np.array([s[1], s[2], s[3], euler_lagrange_snap(L, t, *s)])

    nsteps = int(round(horizon / dt))
    times = [0.0]
    zs, ys = [z.copy()], [ostrogradsky_map(L, t, *y).as_array()]
    worst = float(np.linalg.norm(zs[0] - ys[0]))
    for n in range(1, nsteps + 1):
        z = _rk4(ham, z, dt)
        y = _rk4(el, y, dt)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))) or max(np.max(np.abs(z)), np.max(np.abs(y))) > bound:
            raise IntegrationBlowUp(f"trajectory escaped |z| > {bound:g}", escape_time=n * dt)
        mapped = ostrogradsky_map(L, t, *y).as_array()
        worst = max(worst, float(np.linalg.norm(z - mapped)))
        if trajectories:
            times.append(n * dt)
            zs.append(z.copy())
            ys.append(mapped)
    if trajectories:
        return worst, np.array(times), np.array(zs), np.array(ys)
    return worst
