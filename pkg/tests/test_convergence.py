import numpy as np
import pytest

from ostrokernel import fit_slope


def test_exact_square_law():
    d = np.geomspace(1e-1, 1e-3, 6)
    rep = fit_slope(list(zip(d, d**2)))
    assert rep.slope == pytest.approx(2.0, abs=1e-3)
    assert rep.interval[0] <= rep.slope <= rep.interval[1]
    assert rep.convergent


def test_first_order_with_small_correction():
    d = np.geomspace(1e-1, 1e-3, 8)
    rep = fit_slope(list(zip(d, 3 * d + 0.01 * d**2)), expected=(0.95, 1.05))
    assert 0.95 <= rep.slope <= 1.05
    assert rep.passed


def test_constant_error_flagged():
    d = np.geomspace(1e-1, 1e-3, 5)
    rep = fit_slope([(x, 0.2) for x in d])
    assert rep.slope == pytest.approx(0.0, abs=1e-12)
    assert not rep.convergent


def test_validation():
    with pytest.raises(ValueError, match="at least 4"):
        fit_slope([(0.1, 1.0), (0.05, 0.5), (0.02, 0.2)])
    with pytest.raises(ValueError, match="positive"):
        fit_slope([(0.1, 1.0), (0.05, 0.0), (0.02, 0.2), (0.01, 0.1)])


def test_bootstrap_reproducible():
    rng = np.random.default_rng(0)
    d = np.geomspace(1e-1, 1e-3, 6)
    e = d * np.exp(0.1 * rng.standard_normal(6))
    a, b = fit_slope(list(zip(d, e))), fit_slope(list(zip(d, e)))
    assert a.to_dict() == b.to_dict()
