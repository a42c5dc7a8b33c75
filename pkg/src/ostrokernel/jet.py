"""Lagrangians and their derivative jets.

A :class:`Lagrangian1` is a function of ``(t, x, v)``; a :class:`Lagrangian2`
adds the acceleration ``a``.  Both carry an axis-aligned trust box.  Jets are
produced in one forward pass of :class:`~ostrokernel.dual.Dual2` numbers
unless the Lagrangian ships closed-form partials.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional

import numpy as np

from . import dual
from .dual import Dual2, hess_index, real, seed
from .errors import DomainError, EvaluationError, SingularLagrangianError

__all__ = [
    "Lagrangian1",
    "Lagrangian2",
    "Jet1",
    "Jet2",
    "eval_jet1",
    "eval_jet2",
    "partials",
    "closed_or_dual",
    "builtin_lagrangian",
    "expression_lagrangian",
    "BUILTIN_NAMES",
    "EPS_SING",
]

EPS_SING = 1e-10

_INF = (-math.inf, math.inf)


@dataclass(frozen=True)
class _LagrangianBase:
    eval: Callable
    domain: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)
    closed_jet: Optional[Callable] = None
    eps_sing: float = EPS_SING
    autonomous: bool = False

    nargs: ClassVar[int] = 0
    arg_names: ClassVar[tuple] = ()

    def __post_init__(self):
        dom = tuple(self.domain) if self.domain else (_INF,) * self.nargs
        if len(dom) != self.nargs:
            raise ValueError(f"domain must list {self.nargs} (lo, hi) pairs")
        for lo, hi in dom:
            if not lo < hi:
                raise ValueError(f"empty domain interval ({lo}, {hi})")
        dom = tuple((float(lo), float(hi)) for lo, hi in dom)
        object.__setattr__(self, "domain", dom)
        bounded = tuple(k for k, (lo, hi) in enumerate(dom) if lo > -math.inf or hi < math.inf)
        object.__setattr__(self, "_bounded", bounded)

    def check_domain(self, *args):
        """Raise :class:`DomainError` if any argument leaves the trust box."""
        for k in self._bounded:
            name, (lo, hi), arg = self.arg_names[k], self.domain[k], args[k]
            val = np.asarray(real(arg))
            if np.any(val < lo) or np.any(val > hi):
                raise DomainError(f"{name} outside domain [{lo}, {hi}] for Lagrangian {self.name!r}")

    def __call__(self, *args):
        self.check_domain(*args)
        out = self.eval(*args)
        if not np.isfinite(real(out)).all():
            raise EvaluationError(f"non-finite value of Lagrangian {self.name!r}")
        return out


@dataclass(frozen=True)
class Lagrangian1(_LagrangianBase):
    """First-order Lagrangian ``L(t, x, v)``."""

    nargs = 3
    arg_names = ("t", "x", "v")


@dataclass(frozen=True)
class Lagrangian2(_LagrangianBase):
    """Second-order Lagrangian ``L(t, x, v, a)``."""

    nargs = 4
    arg_names = ("t", "x", "v", "a")


@dataclass(frozen=True)
class Jet1:
    value: float
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray
    hess: np.ndarray


def partials(L, args, wrt=None):
    """Single dual pass: value, gradient list and Hessian dict over ``wrt``.

    Works for array-valued arguments; the returned components broadcast
    against them.  ``wrt`` defaults to every argument.
    """
    L.check_domain(*args)
    if wrt is None:
        wrt = tuple(range(L.nargs))
    out = L.eval(*seed(args, wrt))
    n = len(wrt)
    if not isinstance(out, Dual2):
        zero = np.zeros_like(np.asarray(out, dtype=float))
        grad = [zero] * n
        hess = {(i, j): zero for i in range(n) for j in range(i, n)}
        value = out
    else:
        value, grad = out.v, list(out.g)
        hess = {p: out.h[hess_index(n, *p)] for p in ((i, j) for i in range(n) for j in range(i, n))}
    if not np.isfinite(real(value)).all():
        raise EvaluationError(f"non-finite value of Lagrangian {L.name!r}")
    return value, grad, hess


def closed_or_dual(L, args):
    """``(value, grad, hess)`` as nested lists, from the closed form when one exists.

    Entries broadcast against array-valued ``args``.
    """
    if L.closed_jet is None:
        value, g, h = partials(L, args)
        n = L.nargs
        return value, g, [[h[(min(i, j), max(i, j))] for j in range(n)] for i in range(n)]
    L.check_domain(*args)
    return L.closed_jet(*args)


def _jet(L, args, method, cls):
    n = L.nargs
    if method == "auto":
        method = "closed" if L.closed_jet is not None else "dual"
    if method == "closed":
        if L.closed_jet is None:
            raise ValueError(f"Lagrangian {L.name!r} has no closed-form jet")
        L.check_domain(*args)
        value, grad, hess = L.closed_jet(*args)
        grad = np.array([float(g) for g in grad])
        hess = np.array([[float(h) for h in row] for row in hess])
        hess = 0.5 * (hess + hess.T)
    elif method == "dual":
        value, g, h = partials(L, args)
        grad = np.array([float(gi) for gi in g])
        hess = np.empty((n, n))
        for (i, j), hij in h.items():
            hess[i, j] = hess[j, i] = float(hij)
    else:
        raise ValueError(f"unknown jet method {method!r}")
    value = float(value)
    if not (math.isfinite(value) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise EvaluationError(f"non-finite jet of Lagrangian {L.name!r}")
    return cls(value, grad, hess)


def eval_jet1(L: Lagrangian1, t, x, v, method="auto") -> Jet1:
    """Value, gradient ``(∂t, ∂x, ∂v)`` and Hessian of ``L`` at one point."""
    return _jet(L, (t, x, v), method, Jet1)


def eval_jet2(L: Lagrangian2, t, x, v, a, method="auto") -> Jet2:
    """Value, gradient ``(∂t, ∂x, ∂v, ∂a)`` and Hessian of ``L`` at one point."""
    return _jet(L, (t, x, v, a), method, Jet2)


def check_nonsingular(L, jet, where=""):
    top = jet.hess[-1, -1]
    if abs(top) < L.eps_sing:
        raise SingularLagrangianError(
            f"|∂²L/∂{L.arg_names[-1]}²| = {abs(top):.3e} below {L.eps_sing:g}{where}"
        )
    return top


# -- built-in Lagrangians -----------------------------------------------------------


def _diag(*d):
    # nested lists so that entries may be arrays
    n = len(d)
    return [[d[i] if i == j else 0.0 for j in range(n)] for i in range(n)]


def _require(params, key, default=None):
    if key in params:
        return float(params[key])
    if default is None:
        raise ValueError(f"missing parameter {key!r}")
    return float(default)


def _free(p):
    m = _require(p, "m", 1.0)
    if m <= 0:
        raise ValueError("m must be positive")

    def L(t, x, v):
        return 0.5 * m * v * v

    def jet(t, x, v):
        return 0.5 * m * v * v, [0.0, 0.0, m * v], _diag(0.0, 0.0, m)

    return Lagrangian1(L, name="free", params={"m": m}, closed_jet=jet, autonomous=True)


def _harmonic(p):
    m = _require(p, "m", 1.0)
    w = _require(p, "omega", 1.0)
    if m <= 0:
        raise ValueError("m must be positive")
    if w < 0:
        raise ValueError("omega must be non-negative")
    k = m * w * w

    def L(t, x, v):
        return 0.5 * m * v * v - 0.5 * k * x * x

    def jet(t, x, v):
        return L(t, x, v), [0.0, -k * x, m * v], _diag(0.0, -k, m)

    return Lagrangian1(L, name="harmonic", params={"m": m, "omega": w}, closed_jet=jet, autonomous=True)


def _linear_potential(p):
    m = _require(p, "m", 1.0)
    f = _require(p, "force", 1.0)
    if m <= 0:
        raise ValueError("m must be positive")

    def L(t, x, v):
        return 0.5 * m * v * v - f * x

    def jet(t, x, v):
        return L(t, x, v), [0.0, -f, m * v], _diag(0.0, 0.0, m)

    return Lagrangian1(L, name="linear-potential", params={"m": m, "force": f}, closed_jet=jet, autonomous=True)


def _riemann_kinetic(p):
    m = _require(p, "m", 1.0)
    alpha = _require(p, "alpha", 1.0)
    if m <= 0:
        raise ValueError("m must be positive")
    a2 = alpha * alpha

    def L(t, x, v):
        return 0.5 * m * v * v / (1.0 + a2 * x * x)

    def jet(t, x, v):
        w = 1.0 / (1.0 + a2 * x * x)
        dw = -2.0 * a2 * x * w * w
        ddw = -2.0 * a2 * w * w + 8.0 * a2 * a2 * x * x * w * w * w
        T = 0.5 * m * v * v
        grad = [0.0, T * dw, m * v * w]
        hess = [
            [0.0, 0.0, 0.0],
            [0.0, T * ddw, m * v * dw],
            [0.0, m * v * dw, m * w],
        ]
        return T * w, grad, hess

    return Lagrangian1(L, name="riemann-kinetic", params={"m": m, "alpha": alpha}, closed_jet=jet, autonomous=True)


def _pais_uhlenbeck(p):
    w = _require(p, "omega", 1.0)
    if w < 0:
        raise ValueError("omega must be non-negative")
    w2 = w * w

    def L(t, x, v, a):
        return 0.5 * a * a - 0.5 * w2 * v * v

    def jet(t, x, v, a):
        return L(t, x, v, a), [0.0, 0.0, -w2 * v, a], _diag(0.0, 0.0, -w2, 1.0)

    return Lagrangian2(L, name="pais-uhlenbeck", params={"omega": w}, closed_jet=jet, autonomous=True)


def _quartic_accel(p):
    lam = _require(p, "lam", 0.5)
    w = _require(p, "omega", 1.0)
    if lam < 0:
        raise ValueError("lam must be non-negative (nonsingularity)")
    if w < 0:
        raise ValueError("omega must be non-negative")
    w2 = w * w

    def L(t, x, v, a):
        a2 = a * a
        return 0.5 * a2 + 0.25 * lam * a2 * a2 - 0.5 * w2 * v * v

    def jet(t, x, v, a):
        grad = [0.0, 0.0, -w2 * v, a + lam * a * a * a]
        return L(t, x, v, a), grad, _diag(0.0, 0.0, -w2, 1.0 + 3.0 * lam * a * a)

    return Lagrangian2(L, name="quartic-accel", params={"lam": lam, "omega": w}, closed_jet=jet, autonomous=True)


_BUILTINS = {
    "free": _free,
    "harmonic": _harmonic,
    "linear-potential": _linear_potential,
    "riemann-kinetic": _riemann_kinetic,
    "pais-uhlenbeck": _pais_uhlenbeck,
    "quartic-accel": _quartic_accel,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_lagrangian(name: str, params: Optional[dict] = None, **kwargs):
    """Return a named built-in Lagrangian.

    ========================  ================================================
    name                      Lagrangian
    ========================  ================================================
    ``free``                  ``m v²/2``
    ``harmonic``              ``m v²/2 - m ω² x²/2``
    ``linear-potential``      ``m v²/2 - force·x``
    ``riemann-kinetic``       ``(m v²/2) / (1 + α² x²)``
    ``pais-uhlenbeck``        ``a²/2 - ω² v²/2``
    ``quartic-accel``         ``a²/2 + lam a⁴/4 - ω² v²/2``
    ========================  ================================================
    """
    params = dict(params or {}, **kwargs)
    if name not in _BUILTINS:
        raise ValueError(f"unknown Lagrangian {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    aliases = {"α": "alpha", "ω": "omega", "λ": "lam"}
    params = {aliases.get(k, k): v for k, v in params.items()}
    return _BUILTINS[name](params)


# -- expression Lagrangians ------------------------------------------------------------

_FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "arctan")
_OPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def _check_expr(tree, allowed):
    callees = {id(n.func) for n in ast.walk(tree) if isinstance(n, ast.Call)}
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Load) + _OPS):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            continue
        if isinstance(node, ast.Name):
            if id(node) in callees:
                continue
            if node.id not in allowed:
                raise ValueError(f"unknown name {node.id!r} in Lagrangian expression")
            continue
        if isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or node.keywords:
                raise ValueError("only calls to elementary functions are allowed")
            continue
        raise ValueError(f"unsupported syntax {type(node).__name__} in Lagrangian expression")


def expression_lagrangian(expr: str, order: int, params: Optional[dict] = None, domain=(), name=None):
    """Lagrangian from an arithmetic expression in ``t, x, v`` (and ``a`` for order 2).

    Allowed are numbers, ``pi``, parameter names, ``+ - * / **`` and the
    functions ``sin cos tan exp log sqrt sinh cosh tanh arctan``.  Derivatives
    come from the dual-number pass, so no closed-form jet is attached.

    >>> L = expression_lagrangian("a**2/2 - v**2/2 + g*x*a", 2, {"g": 0.3})
    >>> float(L(0.0, 2.0, 0.0, 1.0))
    1.1
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    args = ("t", "x", "v") if order == 1 else ("t", "x", "v", "a")
    params = {str(k): float(v) for k, v in (params or {}).items()}
    clash = set(params) & (set(args) | set(_FUNCS) | {"pi"})
    if clash:
        raise ValueError(f"parameter names shadow reserved names: {sorted(clash)}")
    tree = ast.parse(str(expr), mode="eval")
    _check_expr(tree, set(args) | set(params) | {"pi"})
    code = compile(tree, "<lagrangian>", "eval")
    names = {f: getattr(dual, f) for f in _FUNCS}
    names.update(params, pi=math.pi)
    uses_t = any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(tree))

    def L(*vals):
        return eval(code, {"__builtins__": {}}, dict(names, **dict(zip(args, vals))))

    cls = Lagrangian1 if order == 1 else Lagrangian2
    return cls(L, domain=domain, name=name or str(expr), params=params, autonomous=not uses_t)
