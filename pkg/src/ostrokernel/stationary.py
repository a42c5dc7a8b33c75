"""Stationary-phase analysis of the one-cell propagator.

The phase of the cell integral is ``Ξ = ħk·x1 [+ ħk'·ẋ1] + S``, with ``S`` the
exact (quadrature) action of the cell.  The solvers below locate its
stationary point, and the normalization helpers return the Gaussian
prefactors that cancel the quadratic fluctuation integral about it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cell import DEFAULT_NODES, action_expansion2, cubic_action, cubic_coefficients, linear_action
from .dual import Dual2, seed
from .errors import InversionError, SingularLagrangianError, StationaryPointError
from .jet import closed_or_dual
from .legendre import invert_momentum1, invert_p1, invert_p2
from .newton import newton_solve

__all__ = [
    "PhaseFunction",
    "StationaryPoint1",
    "StationaryPoint2",
    "Hessian2",
    "solve_sp1",
    "solve_sp2",
    "cancellation_groups",
    "cancellation_diagnostic",
    "norm1",
    "norm1_from_curvature",
    "hessian_det2",
    "norm2",
    "norm2_from_curvature",
    "fd_hessian2",
    "fresnel_oracle_1d",
    "fresnel_oracle_2d",
    "sp1_field",
    "sp2_field",
    "TOL_SP",
]

TOL_SP = 1e-9
MAX_ITER_SP = 50


@dataclass(frozen=True)
class PhaseFunction:
    """``Ξ`` for a first-order (``xdot2 is None``) or second-order cell."""

    L: object
    t2: float
    delta: float
    x2: float
    k: float
    hbar: float = 1.0
    xdot2: Optional[float] = None
    kprime: float = 0.0
    nodes: int = DEFAULT_NODES

    def __call__(self, x1, xdot1=None):
        hk = self.hbar * self.k
        if self.xdot2 is None:
            slope = (self.x2 - x1) / self.delta
            return hk * x1 + linear_action(self.L, self.t2, self.delta, self.x2, slope, self.nodes)
        a, j = cubic_coefficients(self.delta, x1, xdot1, self.x2, self.xdot2)
        S = cubic_action(self.L, self.t2, self.delta, self.x2, self.xdot2, a, j, self.nodes)
        return hk * x1 + self.hbar * self.kprime * xdot1 + S


@dataclass(frozen=True)
class StationaryPoint1:
    x1_sp: float
    residual: float
    converged: bool
    iterations: int = 0
    t2: float = 0.0
    delta: float = 0.0
    x2: float = 0.0

    @property
    def slope(self):
        return (self.x2 - self.x1_sp) / self.delta


@dataclass(frozen=True)
class StationaryPoint2:
    x1_sp: float
    xdot1_sp: float
    residual: float
    converged: bool
    iterations: int = 0
    t2: float = 0.0
    delta: float = 0.0
    x2: float = 0.0
    xdot2: float = 0.0
    accel: float = 0.0
    jerk: float = 0.0
    k: float = 0.0
    kprime: float = 0.0
    hbar: float = 1.0


# -- first order -------------------------------------------------------------------


def _slope_derivs(L, t2, delta, x2, slope, nodes):
    (s,) = seed((slope,))
    S = linear_action(L, t2, delta, x2, s, nodes)
    return S.g[0], S.h[0]


def solve_sp1(L, t2, delta, x2, k, hbar=1.0, guess=None, *, tol=TOL_SP, max_iter=MAX_ITER_SP, nodes=DEFAULT_NODES):
    """Stationary point of ``ħk·x1 + S1`` in ``x1`` on the quadrature action.

    The default guess is ``x2 - F(t2, x2, ħk)·Δ``.  Raises
    :class:`StationaryPointError` when Newton fails.
    """
    if not delta > 0:
        raise StationaryPointError("delta must be positive")
    hk = hbar * k
    if guess is None:
        guess = x2 - invert_momentum1(L, t2, x2, hk).value * delta

    # Newton in the slope u = (x2 - x1)/Δ: ∂Ξ/∂x1 = ħk - S'(u)/Δ
    def fun(u):
        g, h = _slope_derivs(L, t2, delta, x2, float(u), nodes)
        return (hk - g / delta) * delta, -h

    u0 = (x2 - guess) / delta
    try:
        u, r, dr, it = newton_solve(fun, u0, tol=tol * max(1.0, abs(hk) * delta), max_iter=max_iter, what="solve_sp1")
    except (InversionError, SingularLagrangianError) as exc:
        raise StationaryPointError(f"first-order stationary point: {exc}") from exc
    x1 = x2 - u * delta
    residual = abs(r) / delta
    return StationaryPoint1(x1, residual, True, it, t2, delta, x2)


def norm1_from_curvature(c, delta, hbar=1.0):
    """``[c/(2πiħΔ)]^{1/2}`` with ``i^{-1/2} = e^{-iπ/4}`` and the sign of ``c`` in the phase."""
    if abs(c) == 0.0:
        raise SingularLagrangianError("vanishing second derivative in N1")
    mod = math.sqrt(abs(c) / (2.0 * math.pi * hbar * delta))
    return mod * cmath.exp(-1j * math.copysign(1.0, c) * math.pi / 4)


def norm1(L, t2, delta, x2, k, hbar=1.0):
    """Normalization ``N1`` at ``v = F(t2, x2, ħk)``."""
    F = invert_momentum1(L, t2, x2, hbar * k).value
    _, _, h = closed_or_dual(L, (t2, x2, F))
    c = float(h[2][2])
    if abs(c) < L.eps_sing:
        raise SingularLagrangianError(f"|∂²L/∂v²| = {abs(c):.3e} in N1")
    return norm1_from_curvature(c, delta, hbar)


# -- second order ------------------------------------------------------------------


def _sens_matrix(delta):
    # rows (accel, jerk), columns (x1, ẋ1)
    return np.array([[6.0 / delta**2, 2.0 / delta], [12.0 / delta**3, 6.0 / delta**2]])


def _aj_derivs(L, t2, delta, x2, v2, a, j, nodes):
    sa, sj = seed((a, j))
    S = cubic_action(L, t2, delta, x2, v2, sa, sj, nodes)
    g = np.array([S.g[0], S.g[1]], dtype=float)
    H = np.array([[S.h[0], S.h[1]], [S.h[1], S.h[2]]], dtype=float)
    return g, H


def solve_sp2(
    L,
    t2,
    delta,
    x2,
    xdot2,
    k,
    kprime,
    hbar=1.0,
    guess=None,
    *,
    tol=TOL_SP,
    max_iter=MAX_ITER_SP,
    nodes=DEFAULT_NODES,
    raise_on_fail=True,
):
    """Stationary point of ``Ξ = ħk·x1 + ħk'·ẋ1 + S2`` in ``(x1, ẋ1)``.

    Newton runs in the cell coefficients ``(a, j) = (ẍ(t2), x⃛(t2))``, which
    are affine in ``(x1, ẋ1)`` through the sensitivity matrix ``M``; the
    gradient of ``Ξ`` is ``ħ(k, k') + Mᵀ∇S`` so stationarity reads
    ``∇_{a,j} S = -M⁻ᵀ ħ(k, k')``.  ``guess`` is ``(x1, ẋ1)``; the default
    comes from the limiting coefficients ``(F2, F1)``.

    Converged means ``‖∇Ξ‖ ≤ tol·scale`` where ``scale`` is the largest of 1
    and the individual summands of ``Mᵀ∇S`` (these grow like ``Δ⁻¹``).
    """
    if not delta > 0:
        raise StationaryPointError("delta must be positive")
    hk, hkp = hbar * k, hbar * kprime
    M = _sens_matrix(delta)
    # -M^{-T} ħ(k, k')
    target = -np.array([delta**2 / 2 * hk - delta * hkp, -(delta**3) / 6 * hk + delta**2 / 2 * hkp])
    if guess is None:
        try:
            a = float(invert_p2(L, t2, x2, xdot2, hkp).value)
            j = float(invert_p1(L, t2, x2, xdot2, hk, hkp).value)
        except (InversionError, SingularLagrangianError):
            a, j = 0.0, 0.0
    else:
        a, j = cubic_coefficients(delta, guess[0], guess[1], x2, xdot2)
    K = np.array([hk, hkp])

    def grad_xi(g):
        parts = M.T * g[None, :]
        return K + parts.sum(axis=1), float(np.max(np.abs(parts)))

    it = 0
    converged = False
    while True:
        g, H = _aj_derivs(L, t2, delta, x2, xdot2, a, j, nodes)
        gx, scale = grad_xi(g)
        res = float(np.linalg.norm(gx))
        if res <= tol * max(1.0, scale):
            converged = True
            break
        if it >= max_iter:
            break
        det = H[0, 0] * H[1, 1] - H[0, 1] ** 2
        if not abs(det) > 0:
            raise StationaryPointError("singular action Hessian in (a, j)")
        step = np.linalg.solve(H, target - g)
        a, j = a + step[0], j + step[1]
        it += 1
    if not converged and raise_on_fail:
        raise StationaryPointError(f"second-order stationary point: no convergence (residual {res:.3e})")
    x1 = x2 - xdot2 * delta + a * delta**2 / 2 - j * delta**3 / 6
    xdot1 = xdot2 - a * delta + j * delta**2 / 2
    return StationaryPoint2(x1, xdot1, res, converged, it, t2, delta, x2, xdot2, a, j, k, kprime, hbar)


def cancellation_groups(L, point: StationaryPoint2):
    """The two ``Δ⁻¹`` groups of ``∂S2/∂x1`` from the expansion terms.

    Differentiates the ``L`` and ``L_a`` summands of the short-cell expansion
    with respect to ``x1`` (through ``a`` and ``j``) at the stationary point.
    Returns ``(group_L, group_La, sum)``: ``+6L_a/Δ``, ``-6L_a/Δ - 3j L_aa``
    and their bounded sum.
    """
    d = point.delta
    (x1,) = seed((point.x1_sp,))
    a, j = cubic_coefficients(d, x1, point.xdot1_sp, point.x2, point.xdot2)
    _, terms = action_expansion2(L, point.t2, d, point.x2, point.xdot2, a, j, breakdown=True)

    def dx1(u):
        return float(u.g[0]) if isinstance(u, Dual2) else 0.0

    g1, g2 = dx1(terms["L"]), dx1(terms["L_a"])
    return g1, g2, g1 + g2


@dataclass(frozen=True)
class CancellationReport:
    deltas: np.ndarray
    group_L: np.ndarray
    group_La: np.ndarray
    total: np.ndarray
    slopes: dict = field(default_factory=dict)


def cancellation_diagnostic(L, points):
    """Tabulate :func:`cancellation_groups` over stationary points at several ``Δ``.

    Slopes are least-squares log-log fits of the absolute values against ``Δ``.
    """
    from .convergence import fit_slope

    rows = sorted(((p.delta, *cancellation_groups(L, p)) for p in points), reverse=True)
    arr = np.array(rows, dtype=float)
    deltas, gl, gla, tot = arr.T
    slopes = {}
    for name, col in (("group_L", gl), ("group_La", gla), ("total", tot)):
        if len(deltas) >= 4 and np.all(np.abs(col) > 0):
            slopes[name] = fit_slope(list(zip(deltas, np.abs(col)))).slope
    return CancellationReport(deltas, gl, gla, tot, slopes)


@dataclass(frozen=True)
class Hessian2:
    """Leading second partials of ``S2`` in ``(x1, ẋ1)`` and their determinant."""

    d_x1x1: float
    d_x1xdot1: float
    d_xdot1xdot1: float
    det: float
    laa: float

    def as_matrix(self):
        return np.array([[self.d_x1x1, self.d_x1xdot1], [self.d_x1xdot1, self.d_xdot1xdot1]])


def _laa_at_F2(L, t2, x2, xdot2, kprime, hbar):
    F2 = invert_p2(L, t2, x2, xdot2, hbar * kprime).value
    _, _, h = closed_or_dual(L, (t2, x2, xdot2, F2))
    laa = float(h[3][3])
    if abs(laa) < L.eps_sing:
        raise SingularLagrangianError(f"|∂²L/∂a²| = {abs(laa):.3e} at F2")
    return laa


def hessian_det2(L, t2, delta, x2, xdot2, kprime, hbar=1.0) -> Hessian2:
    """``12/Δ³, -6/Δ², 4/Δ`` times ``L_aa`` at ``F2`` and ``D = 12 L_aa²/Δ⁴``."""
    laa = _laa_at_F2(L, t2, x2, xdot2, kprime, hbar)
    return Hessian2(12 * laa / delta**3, -6 * laa / delta**2, 4 * laa / delta, 12 * laa**2 / delta**4, laa)


def norm2_from_curvature(laa, delta, hbar=1.0):
    """``√12·L_aa/(2πiħΔ²)``; the sign of ``L_aa`` selects the branch ``±D^{1/2}``."""
    if laa == 0.0:
        raise SingularLagrangianError("vanishing second derivative in N2")
    return math.sqrt(12.0) * laa / (2j * math.pi * hbar * delta**2)


def norm2(L, t2, delta, x2, xdot2, kprime, hbar=1.0):
    """Normalization ``N2`` at ``a = F2(t2, x2, ẋ2, ħk')``."""
    return norm2_from_curvature(_laa_at_F2(L, t2, x2, xdot2, kprime, hbar), delta, hbar)


def fd_hessian2(L, point: StationaryPoint2, c=0.05, nodes=DEFAULT_NODES):
    """Central-difference Hessian of the quadrature ``S2`` in ``(x1, ẋ1)``.

    Steps are ``c·Δ³/12`` and ``c·Δ²/6``, which move the cell's jerk by
    ``O(c)``.
    """
    d = point.delta

    def S(x1, xd1):
        a, j = cubic_coefficients(d, x1, xd1, point.x2, point.xdot2)
        return cubic_action(L, point.t2, d, point.x2, point.xdot2, a, j, nodes)

    x0 = np.array([point.x1_sp, point.xdot1_sp])
    h = np.array([c * d**3 / 12, c * d**2 / 6])
    H = np.empty((2, 2))
    f0 = S(*x0)
    e = np.eye(2)
    for i in range(2):
        H[i, i] = (S(*(x0 + h[i] * e[i])) - 2 * f0 + S(*(x0 - h[i] * e[i]))) / h[i] ** 2
    pp = S(*(x0 + h[0] * e[0] + h[1] * e[1]))
    pm = S(*(x0 + h[0] * e[0] - h[1] * e[1]))
    mp = S(*(x0 - h[0] * e[0] + h[1] * e[1]))
    mm = S(*(x0 - h[0] * e[0] - h[1] * e[1]))
    H[0, 1] = H[1, 0] = (pp - pm - mp + mm) / (4 * h[0] * h[1])
    return H


# -- Fresnel oracles ---------------------------------------------------------------


def _damped_canonical(sign, eps):
    """Trapezoid value of ``∫ exp(i·sign·u²/2 - eps·u²) du``."""
    Z = math.sqrt(37.0 / eps)
    h = 0.5 / Z
    u = np.arange(-Z, Z + 0.5 * h, h)
    f = np.exp((0.5j * sign - eps) * u * u)
    return h * (f.sum() - 0.5 * (f[0] + f[-1]))


def _neville(xs, ys, x=0.0):
    p = list(ys)
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = ((x - xs[i + m]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + m])
    return p[0]


_CANON = {}


def _canonical(sign):
    if sign not in _CANON:
        eps = [2.0 ** (-k) for k in range(3, 11)]
        _CANON[sign] = complex(_neville(eps, [_damped_canonical(sign, e) for e in eps]))
    return _CANON[sign]


def fresnel_oracle_1d(s):
    """Numerical ``∫ exp(i s z²/2) dz`` by damped quadrature and Richardson ``ε → 0``.

    The integral is rescaled to ``|s|^{-1/2} ∫ exp(±iu²/2) du``; the canonical
    integral is computed once per sign.
    """
    if s == 0:
        raise ValueError("degenerate quadratic phase")
    return _canonical(1 if s > 0 else -1) / math.sqrt(abs(s))


def fresnel_oracle_2d(B):
    """Numerical ``∫∫ exp(i zᵀBz/2) d²z`` for a symmetric nondegenerate ``B``."""
    w = np.linalg.eigvalsh(np.asarray(B, dtype=float))
    out = 1.0 + 0j
    for lam in w:
        out *= fresnel_oracle_1d(float(lam))
    return out


# -- vectorized fields for the spectral kernel steppers ----------------------------


def sp1_field(L, t2, delta, x2, k, hbar=1.0, *, tol=TOL_SP, max_iter=MAX_ITER_SP, nodes=DEFAULT_NODES):
    """Stationary points for arrays of ``(x2, k)``.

    Returns ``(slope, xi, curvature)``: the cell slope ``(x2 - x1)/Δ`` at the
    stationary point, the phase ``Ξ`` there and ``∂²S1/∂x1²``.
    """
    x2, k = np.broadcast_arrays(np.asarray(x2, dtype=float), np.asarray(k, dtype=float))
    hk = hbar * k
    u0 = invert_momentum1(L, t2, x2, hk).value

    def fun(u):
        g, h = _slope_derivs(L, t2, delta, x2, u, nodes)
        return hk * delta - g, -h

    try:
        u, _, _, _ = newton_solve(fun, u0, tol=tol * max(1.0, float(np.max(np.abs(hk))) * delta), max_iter=max_iter, what="sp1_field")
    except (InversionError, SingularLagrangianError) as exc:
        raise StationaryPointError(f"first-order stationary field: {exc}") from exc
    (s,) = seed((u,))
    S = linear_action(L, t2, delta, x2, s, nodes)
    xi = hk * (x2 - u * delta) + S.v
    return u, xi, S.h[0] / delta**2


def sp2_field(L, t2, delta, x2, v2, k, kprime, hbar=1.0, *, tol=TOL_SP, max_iter=MAX_ITER_SP, nodes=DEFAULT_NODES):
    """Stationary points for arrays of ``(x2, ẋ2, k, k')``.

    Returns ``(xi, det_b, sign_b, accel)``: the phase at the stationary
    point, the determinant of the ``(x1, ẋ1)`` Hessian of ``S2`` there, the
    signature ``n₊ - n₋`` of that Hessian and the cell acceleration.
    """
    x2, v2, k, kprime = np.broadcast_arrays(*(np.asarray(u, dtype=float) for u in (x2, v2, k, kprime)))
    hk, hkp = hbar * k, hbar * kprime
    M = _sens_matrix(delta)
    ta = -(delta**2 / 2 * hk - delta * hkp)
    tj = -(-(delta**3) / 6 * hk + delta**2 / 2 * hkp)
    a = np.array(invert_p2(L, t2, x2, v2, hkp).value, dtype=float)
    j = np.array(invert_p1(L, t2, x2, v2, hk, hkp).value, dtype=float)
    it = 0
    while True:
        sa, sj = seed((a, j))
        S = cubic_action(L, t2, delta, x2, v2, sa, sj, nodes)
        ga, gj = S.g
        haa, haj, hjj = S.h
        pa, pj = M[0, 0] * ga, M[1, 0] * gj
        qa, qj = M[0, 1] * ga, M[1, 1] * gj
        res = np.hypot(hk + pa + pj, hkp + qa + qj)
        scale = np.maximum.reduce([np.ones_like(res), np.abs(pa), np.abs(pj), np.abs(qa), np.abs(qj)])
        if np.all(res <= tol * scale):
            break
        if it >= max_iter:
            raise StationaryPointError(f"second-order stationary field: no convergence (residual {float(np.max(res)):.3e})")
        det = haa * hjj - haj * haj
        if np.any(det == 0):
            raise StationaryPointError("singular action Hessian in (a, j)")
        ra, rj = ta - ga, tj - gj
        a = a + (hjj * ra - haj * rj) / det
        j = j + (haa * rj - haj * ra) / det
        it += 1
    x1 = x2 - v2 * delta + a * delta**2 / 2 - j * delta**3 / 6
    xd1 = v2 - a * delta + j * delta**2 / 2
    xi = hk * x1 + hkp * xd1 + S.v
    det_aj = haa * hjj - haj * haj
    det_b = (12.0 / delta**4) ** 2 * det_aj
    tr = haa + hjj
    sign_b = np.where(det_aj > 0, np.where(tr > 0, 2, -2), 0)
    return xi, det_b, sign_b, a
