"""Safeguarded scalar Newton iteration, vectorized over arrays of problems."""

from __future__ import annotations

import numpy as np

from .errors import InversionError, SingularLagrangianError

__all__ = ["newton_solve"]


def _as(shape, u):
    u = np.asarray(u, dtype=float)
    if u.shape != shape:
        u = np.full(shape, u) if u.ndim == 0 else np.broadcast_to(u, shape).copy()
    return u


def newton_solve(fun, x0, *, tol=1e-12, max_iter=50, bracket=None, eps_sing=1e-10, what="root"):
    """Solve ``fun(x)[0] = 0`` elementwise.

    ``fun`` returns ``(residual, derivative)`` for an array of iterates.
    Steps are halved while they fail to reduce ``|residual|``.  When a
    ``(lo, hi)`` bracket with a sign change is supplied, iterates that would
    leave it are replaced by bisection of the current bracket.

    Returns ``(x, residual, derivative, iterations)``.  Raises
    :class:`InversionError` carrying the best iterate if ``max_iter`` is
    exhausted, and :class:`SingularLagrangianError` if the derivative
    vanishes.
    """
    scalar = np.ndim(x0) == 0
    x = np.array(x0, dtype=float)
    r, dr = fun(x)
    shape = np.broadcast_shapes(x.shape, np.shape(r), np.shape(dr))
    x, r, dr = _as(shape, x), _as(shape, r), _as(shape, dr)

    lo = hi = None
    if bracket is not None:
        lo, hi = _as(shape, bracket[0]), _as(shape, bracket[1])
        r_lo = _as(shape, fun(lo)[0])
        r_hi = _as(shape, fun(hi)[0])
        if np.any(np.sign(r_lo) * np.sign(r_hi) > 0):
            raise InversionError(f"{what}: bracket does not enclose a sign change")
        sign_lo = np.sign(r_lo)

    it = 0
    while True:
        ar = np.abs(r)
        active = ~(ar <= tol)
        if not active.any():
            break
        if it >= max_iter:
            res = float(np.max(ar))
            raise InversionError(
                f"{what}: no convergence after {max_iter} iterations (residual {res:.3e})",
                best=float(x) if scalar else x,
                residual=res,
            )
        if (active & ~(np.abs(dr) >= eps_sing)).any():
            raise SingularLagrangianError(f"{what}: derivative below {eps_sing:g} during Newton iteration")
        it += 1
        every = active.all()
        step = -r / dr if every else np.where(active, -r / np.where(active, dr, 1.0), 0.0)
        xn = x + step
        if lo is not None:
            inside = (xn > np.minimum(lo, hi)) & (xn < np.maximum(lo, hi))
            xn = np.where(active & ~inside, 0.5 * (lo + hi), xn)
        rn, drn = fun(xn)
        rn, drn = _as(shape, rn), _as(shape, drn)
        worse = ~(np.abs(rn) < ar)
        if not every:
            worse &= active
        lam = 1.0
        tries = 0
        while tries < 30 and worse.any():
            tries += 1
            lam *= 0.5
            xn = np.where(worse, x + lam * step, xn)
            rt, drt = fun(xn)
            rn, drn = _as(shape, rt), _as(shape, drt)
            worse = active & ~(np.abs(rn) < ar)
        x, r, dr = xn, rn, drn
        if lo is not None:
            same = np.sign(r) == sign_lo
            lo = np.where(active & same, x, lo)
            hi = np.where(active & ~same, x, hi)
    if scalar:
        return float(x), float(r), float(dr), it
    return x, r, dr, it
