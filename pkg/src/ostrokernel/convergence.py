"""Log-log slope fits for convergence studies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConvergenceReport", "fit_slope", "NONCONVERGENT_SLOPE"]

# slopes below this are reported as "no convergence"
NONCONVERGENT_SLOPE = 0.1


@dataclass(frozen=True)
class ConvergenceReport:
    """Fitted ``log(error) ~ slope·log(Δ)`` with a bootstrap interval."""

    deltas: tuple
    errors: tuple
    slope: float
    intercept: float
    interval: tuple
    convergent: bool
    expected: tuple = None
    passed: bool = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "deltas": list(self.deltas),
            "errors": list(self.errors),
            "slope": self.slope,
            "intercept": self.intercept,
            "interval": list(self.interval),
            "convergent": self.convergent,
            "expected": None if self.expected is None else list(self.expected),
            "passed": self.passed,
        }


def _lsq(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_slope(pairs, *, expected=None, n_boot=400, level=0.95, seed=0):
    """Least-squares slope of ``log(error)`` against ``log(Δ)``.

    Parameters
    ----------
    pairs : iterable of (delta, error)
        At least four points with positive ``delta`` and ``error``.
    expected : (lo, hi), optional
        Slope band; sets ``passed`` on the report.
    n_boot : int
        Bootstrap resamples (pairs resampled with replacement) for the
        interval.  The generator is seeded, so reports are reproducible.

    Raises
    ------
    ValueError
        Fewer than four points, or a nonpositive value.
    """
    pairs = [(float(d), float(e)) for d, e in pairs]
    if len(pairs) < 4:
        raise ValueError(f"slope fit needs at least 4 points, got {len(pairs)}")
    d = np.array([p[0] for p in pairs])
    e = np.array([p[1] for p in pairs])
    if np.any(d <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise ValueError("slope fit needs strictly positive, finite deltas and errors")
    x, y = np.log(d), np.log(e)
    slope, icpt = _lsq(x, y)

    rng = np.random.default_rng(seed)
    boots = []
    n = len(x)
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        if np.ptp(x[idx]) == 0:
            continue
        boots.append(_lsq(x[idx], y[idx])[0])
    if boots:
        q = (1 - level) / 2
        lo, hi = np.quantile(boots, [q, 1 - q])
        interval = (float(min(lo, slope)), float(max(hi, slope)))
    else:
        interval = (slope, slope)
    passed = None
    if expected is not None:
        passed = bool(expected[0] <= slope <= expected[1])
    return ConvergenceReport(
        tuple(d.tolist()),
        tuple(e.tolist()),
        slope,
        icpt,
        interval,
        bool(slope >= NONCONVERGENT_SLOPE),
        None if expected is None else tuple(expected),
        passed,
    )
