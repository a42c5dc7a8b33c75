"""One-cell lattice paths and their actions.

A first-order cell is the chord between ``(t2 - Δ, x1)`` and ``(t2, x2)``.
A second-order cell is the Hermite cubic matching position and velocity at
both ends, parametrized internally by its data at ``t2``::

    x(t) = x2 - v2 τ + a τ²/2 - j τ³/6,        τ = t2 - t.

Actions are integrated with Gauss–Legendre quadrature.  Every routine here
accepts :class:`~ostrokernel.dual.Dual2` inputs for the end data, so that the
stationary-phase solver can differentiate the exact quadrature action.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dual import real
from .errors import DomainError
from .jet import closed_or_dual

__all__ = [
    "LinearCell",
    "CubicCell",
    "CellSensitivities",
    "linear_cell",
    "cubic_cell",
    "cubic_cell_from_jet",
    "cubic_coefficients",
    "cell_sensitivities",
    "gauss_legendre",
    "action_quadrature",
    "quadrature_change",
    "linear_action",
    "cubic_action",
    "action_expansion1",
    "action_expansion2",
    "EXPANSION2_TERMS",
    "DEFAULT_NODES",
]

DEFAULT_NODES = 10


def _check_delta(delta):
    d = real(delta)
    if not np.all(np.asarray(d) > 0):
        raise DomainError(f"cell length delta must be positive, got {d!r}")


@dataclass(frozen=True)
class LinearCell:
    t2: float
    delta: float
    x1: float
    x2: float

    @property
    def slope(self):
        return (self.x2 - self.x1) / self.delta

    @property
    def d_slope_dx1(self):
        return -1.0 / self.delta

    def position(self, t):
        return self.x2 - (self.t2 - t) * self.slope

    def velocity(self, t):
        return self.slope + 0.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class CubicCell:
    t2: float
    delta: float
    x1: float
    xdot1: float
    x2: float
    xdot2: float
    accel_t2: float
    jerk_t2: float

    def position(self, t):
        tau = self.t2 - np.asarray(t, dtype=float)
        return self.x2 - self.xdot2 * tau + self.accel_t2 * tau**2 / 2 - self.jerk_t2 * tau**3 / 6

    def velocity(self, t):
        tau = self.t2 - np.asarray(t, dtype=float)
        return self.xdot2 - self.accel_t2 * tau + self.jerk_t2 * tau**2 / 2

    def acceleration(self, t):
        tau = self.t2 - np.asarray(t, dtype=float)
        return self.accel_t2 - self.jerk_t2 * tau

    def reconstruction_error(self):
        """Relative mismatch of the cubic's ``(x, ẋ)`` at ``t2 - Δ`` with ``(x1, ẋ1)``."""
        # evaluate at lag τ = Δ directly; t2 - (t2 - Δ) would round
        tau = self.delta
        x = self.x2 - self.xdot2 * tau + self.accel_t2 * tau**2 / 2 - self.jerk_t2 * tau**3 / 6
        v = self.xdot2 - self.accel_t2 * tau + self.jerk_t2 * tau**2 / 2
        ex = abs(x - self.x1) / max(1.0, abs(self.x1))
        ev = abs(v - self.xdot1) / max(1.0, abs(self.xdot1))
        return float(max(ex, ev))


@dataclass(frozen=True)
class CellSensitivities:
    d_accel_dx1: float
    d_accel_dxdot1: float
    d_jerk_dx1: float
    d_jerk_dxdot1: float

    def as_matrix(self):
        """Jacobian ``∂(accel, jerk)/∂(x1, ẋ1)``."""
        return np.array([[self.d_accel_dx1, self.d_accel_dxdot1], [self.d_jerk_dx1, self.d_jerk_dxdot1]])


def linear_cell(t2, delta, x1, x2) -> LinearCell:
    _check_delta(delta)
    return LinearCell(t2, delta, x1, x2)


def cubic_coefficients(delta, x1, xdot1, x2, xdot2):
    """``(accel, jerk)`` at ``t2`` of the Hermite cubic through the end data."""
    gap = x2 - x1 - delta * xdot2
    dv = xdot2 - xdot1
    accel = -(6.0 / delta**2) * (gap + (delta / 3.0) * dv)
    jerk = -(12.0 / delta**3) * (gap + (delta / 2.0) * dv)
    return accel, jerk


def cubic_cell(t2, delta, x1, xdot1, x2, xdot2) -> CubicCell:
    _check_delta(delta)
    accel, jerk = cubic_coefficients(delta, x1, xdot1, x2, xdot2)
    return CubicCell(t2, delta, x1, xdot1, x2, xdot2, accel, jerk)


def cubic_cell_from_jet(t2, delta, x2, xdot2, accel, jerk) -> CubicCell:
    """Cubic cell whose data at ``t2`` is ``(x2, ẋ2, accel, jerk)``."""
    _check_delta(delta)
    x1 = x2 - xdot2 * delta + accel * delta**2 / 2 - jerk * delta**3 / 6
    xdot1 = xdot2 - accel * delta + jerk * delta**2 / 2
    return CubicCell(t2, delta, x1, xdot1, x2, xdot2, accel, jerk)


def cell_sensitivities(cell: CubicCell) -> CellSensitivities:
    d = cell.delta
    return CellSensitivities(6.0 / d**2, 2.0 / d, 12.0 / d**3, 6.0 / d**2)


@lru_cache(maxsize=None)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n=DEFAULT_NODES):
    """Gauss–Legendre nodes and weights on ``[-1, 1]``."""
    if int(n) < 1:
        raise ValueError("need at least one quadrature node")
    return _gl(int(n))


def linear_action(L, t2, delta, x2, slope, nodes=DEFAULT_NODES):
    """Action of ``L1`` along ``x = x2 - slope·τ`` over ``τ ∈ [0, Δ]``."""
    xi, w = gauss_legendre(nodes)
    total = 0.0
    for xk, wk in zip(xi, w):
        tau = 0.5 * delta * (1.0 + xk)
        total = total + wk * L(t2 - tau, x2 - slope * tau, slope)
    return 0.5 * delta * total


def cubic_action(L, t2, delta, x2, v2, accel, jerk, nodes=DEFAULT_NODES):
    """Action of ``L2`` along the cubic with data ``(x2, v2, accel, jerk)`` at ``t2``."""
    xi, w = gauss_legendre(nodes)
    total = 0.0
    for xk, wk in zip(xi, w):
        tau = 0.5 * delta * (1.0 + xk)
        x = x2 - v2 * tau + accel * (tau * tau / 2) - jerk * (tau**3 / 6)
        v = v2 - accel * tau + jerk * (tau * tau / 2)
        a = accel - jerk * tau
        total = total + wk * L(t2 - tau, x, v, a)
    return 0.5 * delta * total


def action_quadrature(L, cell, nodes=DEFAULT_NODES):
    """Gauss–Legendre action of ``L`` along a :class:`LinearCell` or :class:`CubicCell`.

    Raises :class:`DomainError` if a quadrature node leaves the domain of ``L``.
    """
    if isinstance(cell, LinearCell):
        return linear_action(L, cell.t2, cell.delta, cell.x2, cell.slope, nodes)
    if isinstance(cell, CubicCell):
        return cubic_action(L, cell.t2, cell.delta, cell.x2, cell.xdot2, cell.accel_t2, cell.jerk_t2, nodes)
    raise TypeError(f"not a cell: {type(cell).__name__}")


def quadrature_change(L, cell, nodes=DEFAULT_NODES):
    """Relative change of :func:`action_quadrature` when the node count doubles."""
    s1 = action_quadrature(L, cell, nodes)
    s2 = action_quadrature(L, cell, 2 * nodes)
    return float(abs(s2 - s1) / max(abs(s2), np.finfo(float).tiny))


def action_expansion1(L, t2, delta, x2, v):
    """Short-cell expansion ``LΔ - L_t Δ²/2 - L_x v Δ²/2`` at ``(t2, x2, v)``."""
    _check_delta(delta)
    val, g, _ = closed_or_dual(L, (t2, x2, v))
    return val * delta - g[0] * delta**2 / 2 - g[1] * v * delta**2 / 2


EXPANSION2_TERMS = (
    "L",
    "L_t",
    "L_x",
    "L_v",
    "L_a",
    "L_tt",
    "L_xx",
    "L_vv",
    "L_aa",
    "L_tx",
    "L_tv",
    "L_ta",
    "L_xv",
    "L_xa",
    "L_va",
)


def action_expansion2(L, t2, delta, x2, v2, accel, jerk, breakdown=False):
    """Cubic-cell action through order ``Δ³``, derivatives at ``(t2, x2, v2, accel)``.

    With ``breakdown=True`` returns ``(total, terms)`` where ``terms`` maps
    each name in :data:`EXPANSION2_TERMS` to its summand.
    """
    _check_delta(delta)
    val, g, h = closed_or_dual(L, (t2, x2, v2, accel))
    d1, d2, d3 = delta, delta**2, delta**3
    a, j = accel, jerk
    terms = {
        "L": val * d1,
        "L_t": -g[0] * d2 / 2,
        "L_x": g[1] * (-v2 * d2 / 2 + a * d3 / 6),
        "L_v": g[2] * (-a * d2 / 2 + j * d3 / 6),
        "L_a": -g[3] * j * d2 / 2,
        "L_tt": h[0][0] * d3 / 6,
        "L_xx": h[1][1] * v2 * v2 * d3 / 6,
        "L_vv": h[2][2] * a * a * d3 / 6,
        "L_aa": h[3][3] * j * j * d3 / 6,
        "L_tx": h[0][1] * v2 * d3 / 3,
        "L_tv": h[0][2] * a * d3 / 3,
        "L_ta": h[0][3] * j * d3 / 3,
        "L_xv": h[1][2] * v2 * a * d3 / 3,
        "L_xa": h[1][3] * v2 * j * d3 / 3,
        "L_va": h[2][3] * a * j * d3 / 3,
    }
    total = 0.0
    for name in EXPANSION2_TERMS:
        total = total + terms[name]
    if breakdown:
        return total, terms
    return total
