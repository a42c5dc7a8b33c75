"""Second-order forward-mode dual numbers.

A :class:`Dual2` carries a value, its gradient and its (upper-triangular)
Hessian with respect to ``n`` seeded variables.  Components may be Python
floats, numpy arrays, or other :class:`Dual2` instances of a lower nesting
level, which is how derivatives of derivatives are formed.

Elementary functions (:func:`sin`, :func:`exp`, ...) dispatch on the argument
type and fall back to numpy for plain numbers, so Lagrangians written with
them evaluate on floats, arrays and duals alike.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

__all__ = [
    "Dual2",
    "seed",
    "real",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "sinh",
    "cosh",
    "tanh",
    "arctan",
]

_level_counter = itertools.count(1)


@lru_cache(maxsize=None)
def _pairs(n):
    return tuple((i, j) for i in range(n) for j in range(i, n))


@lru_cache(maxsize=None)
def _index(n):
    return {p: k for k, p in enumerate(_pairs(n))}


def hess_index(n, i, j):
    """Position of the ``(i, j)`` second partial in a :class:`Dual2` Hessian list."""
    if i > j:
        i, j = j, i
    return _index(n)[(i, j)]


class Dual2:
    """Truncated second-order Taylor expansion in ``n`` variables.

    ``h`` holds the full second partials ``∂²f/∂i∂j`` for ``i <= j`` in the
    row-major order of :func:`_pairs`.  ``level`` orders nested duals: an
    operand of a lower level is treated as a constant.
    """

    __slots__ = ("v", "g", "h", "level")
    __array_ufunc__ = None

    def __init__(self, v, g, h, level):
        self.v = v
        self.g = g
        self.h = h
        self.level = level

    @property
    def n(self):
        return len(self.g)

    def __repr__(self):
        return f"Dual2(v={self.v!r}, g={self.g!r}, h={self.h!r}, level={self.level})"

    # -- helpers -----------------------------------------------------------
    def _outer(self, other):
        """True when ``other`` must handle the operation (it is the outer dual)."""
        return isinstance(other, Dual2) and other.level > self.level

    def _same(self, other):
        return isinstance(other, Dual2) and other.level == self.level

    def _scale(self, c):
        g = self.g
        if len(g) == 1:
            return Dual2(self.v * c, [g[0] * c], [self.h[0] * c], self.level)
        return Dual2(self.v * c, [gi * c for gi in g], [hi * c for hi in self.h], self.level)

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self):
        return Dual2(-self.v, [-gi for gi in self.g], [-hi for hi in self.h], self.level)

    def __pos__(self):
        return self

    def __add__(self, other):
        if self._same(other):
            return Dual2(
                self.v + other.v,
                [a + b for a, b in zip(self.g, other.g)],
                [a + b for a, b in zip(self.h, other.h)],
                self.level,
            )
        if self._outer(other):
            return other.__radd__(self)
        return Dual2(self.v + other, self.g, self.h, self.level)

    __radd__ = __add__

    def __sub__(self, other):
        if self._same(other):
            return Dual2(
                self.v - other.v,
                [a - b for a, b in zip(self.g, other.g)],
                [a - b for a, b in zip(self.h, other.h)],
                self.level,
            )
        if self._outer(other):
            return other.__rsub__(self)
        return Dual2(self.v - other, self.g, self.h, self.level)

    def __rsub__(self, other):
        return Dual2(other - self.v, [-gi for gi in self.g], [-hi for hi in self.h], self.level)

    def __mul__(self, other):
        if self._same(other):
            av, ag, ah = self.v, self.g, self.h
            bv, bg, bh = other.v, other.g, other.h
            if len(ag) == 1:
                a0, b0 = ag[0], bg[0]
                return Dual2(
                    av * bv, [av * b0 + a0 * bv], [av * bh[0] + ah[0] * bv + 2.0 * (a0 * b0)], self.level
                )
            g = [av * b + a * bv for a, b in zip(ag, bg)]
            h = [
                av * bh[k] + ah[k] * bv + ag[i] * bg[j] + ag[j] * bg[i]
                for k, (i, j) in enumerate(_pairs(len(ag)))
            ]
            return Dual2(av * bv, g, h, self.level)
        if self._outer(other):
            return other.__rmul__(self)
        return self._scale(other)

    def __rmul__(self, other):
        return self._scale(other)

    def reciprocal(self):
        inv = 1.0 / self.v
        return _apply(self, inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if self._same(other):
            return self * other.reciprocal()
        if self._outer(other):
            return other.__rtruediv__(self)
        return self._scale(1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Dual2):
            return exp(log(self) * p)
        if p == 0:
            return Dual2(self.v * 0 + 1.0, [gi * 0 for gi in self.g], [hi * 0 for hi in self.h], self.level)
        if p == 1:
            return self
        if p == 2:
            return self * self
        if p == 3:
            return self * self * self
        if p == 4:
            s = self * self
            return s * s
        if p == -1:
            return self.reciprocal()
        v = self.v
        return _apply(self, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        return exp(self * np.log(base))


def _apply(u, f0, f1, f2):
    """Chain rule for a scalar function with derivatives ``f1``, ``f2`` at ``u.v``."""
    g = u.g
    h = [f1 * hk + f2 * g[i] * g[j] for hk, (i, j) in zip(u.h, _pairs(len(g)))]
    return Dual2(f0, [f1 * gi for gi in g], h, u.level)


def seed(values, wrt=None):
    """Promote ``values`` to duals of a fresh level.

    ``wrt`` lists the positions to differentiate with respect to; the other
    values pass through untouched.  Returns the new argument tuple.
    """
    values = list(values)
    if wrt is None:
        wrt = range(len(values))
    wrt = list(wrt)
    n = len(wrt)
    level = next(_level_counter)
    zeros_h = [0.0] * len(_pairs(n))
    out = list(values)
    for k, pos in enumerate(wrt):
        g = [0.0] * n
        g[k] = 1.0
        out[pos] = Dual2(values[pos], g, list(zeros_h), level)
    return tuple(out)


def new_level():
    """Return a fresh nesting level for hand-seeded duals."""
    return next(_level_counter)


def real(u):
    """Strip all dual layers and return the underlying value."""
    while isinstance(u, Dual2):
        u = u.v
    return u


def sin(u):
    if isinstance(u, Dual2):
        s, c = sin(u.v), cos(u.v)
        return _apply(u, s, c, -s)
    return np.sin(u)


def cos(u):
    if isinstance(u, Dual2):
        s, c = sin(u.v), cos(u.v)
        return _apply(u, c, -s, -c)
    return np.cos(u)


def tan(u):
    if isinstance(u, Dual2):
        t = tan(u.v)
        sec2 = 1.0 + t * t
        return _apply(u, t, sec2, 2.0 * t * sec2)
    return np.tan(u)


def exp(u):
    if isinstance(u, Dual2):
        e = exp(u.v)
        return _apply(u, e, e, e)
    return np.exp(u)


def log(u):
    if isinstance(u, Dual2):
        inv = 1.0 / u.v
        return _apply(u, log(u.v), inv, -inv * inv)
    return np.log(u)


def sqrt(u):
    if isinstance(u, Dual2):
        r = sqrt(u.v)
        d1 = 0.5 / r
        return _apply(u, r, d1, -0.5 * d1 / u.v)
    return np.sqrt(u)


def sinh(u):
    if isinstance(u, Dual2):
        s, c = sinh(u.v), cosh(u.v)
        return _apply(u, s, c, s)
    return np.sinh(u)


def cosh(u):
    if isinstance(u, Dual2):
        s, c = sinh(u.v), cosh(u.v)
        return _apply(u, c, s, c)
    return np.cosh(u)


def tanh(u):
    if isinstance(u, Dual2):
        t = tanh(u.v)
        d1 = 1.0 - t * t
        return _apply(u, t, d1, -2.0 * t * d1)
    return np.tanh(u)


def arctan(u):
    if isinstance(u, Dual2):
        v = u.v
        d1 = 1.0 / (1.0 + v * v)
        return _apply(u, arctan(v), d1, -2.0 * v * d1 * d1)
    return np.arctan(u)
