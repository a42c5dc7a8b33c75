"""Short-time propagation of wave functions on periodic grids.

Two families of one-step maps are provided:

* symbol steppers, which apply ``[1 - (iΔ/ħ) H(x, ħk)]`` under the inverse
  Fourier integral with the symbol placed to the left (Kohn–Nirenberg);
* kernel steppers, which sum ``N·exp(iS/ħ)`` over the one-cell paths.

The momentum representation uses ``ψ(x) = (2π)^{-1/2} ∫ dk e^{ikx} φ(k)``,
discretized so that the grid transform is unitary with respect to the
``dx`` and ``dk`` weights.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .cell import DEFAULT_NODES, linear_action
from .errors import ConfigError, NormBlowUp
from .jet import Lagrangian1, Lagrangian2, closed_or_dual
from .legendre import _rk4, hamilton_rhs, invert_momentum1, invert_p2
from .stationary import sp1_field, sp2_field

__all__ = [
    "WaveGrid1D",
    "WaveGrid2D",
    "SymbolField1",
    "SymbolField2",
    "to_momentum",
    "from_momentum",
    "symbol_field1",
    "symbol_field2",
    "apply_symbol1",
    "apply_symbol2",
    "kernel_matrix1",
    "kernel_step1",
    "kernel_amplitude1",
    "kernel_step2",
    "make_stepper",
    "evolve",
    "gaussian1d",
    "gaussian2d",
    "analytic_reference",
    "inner_half_mass",
    "l2_distance",
    "save_snapshot",
    "load_snapshot",
    "MAX_2D_NODES",
    "CHUNK",
]

MAX_2D_NODES = 64
# output rows per work item; fixed so that results do not depend on the thread count
CHUNK = 32


def _pow2(n):
    return n >= 2 and (n & (n - 1)) == 0


def _check_box(box):
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError(f"empty box [{lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class WaveGrid1D:
    """Complex amplitudes on ``n`` uniform nodes of the periodic box ``[x_min, x_max)``."""

    n: int
    box: tuple
    psi: np.ndarray
    hbar: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        if not _pow2(int(self.n)):
            raise ValueError(f"node count must be a power of two, got {self.n}")
        object.__setattr__(self, "box", _check_box(self.box))
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (self.n,):
            raise ValueError(f"amplitudes have shape {psi.shape}, expected ({self.n},)")
        object.__setattr__(self, "psi", psi)

    @property
    def dims(self):
        return 1

    @property
    def length(self):
        return self.box[1] - self.box[0]

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return self.box[0] + self.dx * np.arange(self.n)

    @property
    def dk(self):
        return 2 * math.pi / self.length

    @property
    def k(self):
        return self.dk * np.arange(-self.n // 2, self.n // 2)

    def norm(self):
        return float(math.sqrt(np.sum(np.abs(self.psi) ** 2) * self.dx))

    def mean_x(self):
        w = np.abs(self.psi) ** 2
        return float(np.sum(w * self.x) / np.sum(w))

    def mean_p(self):
        phi = to_momentum(self)
        w = np.abs(phi) ** 2
        return float(self.hbar * np.sum(w * self.k) / np.sum(w))

    def with_psi(self, psi, time=None):
        return replace(self, psi=psi, time=self.time if time is None else time)


@dataclass(frozen=True)
class WaveGrid2D:
    """Amplitudes ``ψ(x, ẋ)`` on an ``n[0] × n[1]`` periodic grid."""

    n: tuple
    box: tuple
    psi: np.ndarray
    hbar: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        n = tuple(int(m) for m in self.n)
        if len(n) != 2 or not all(_pow2(m) for m in n):
            raise ValueError(f"node counts must be two powers of two, got {self.n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box", (_check_box(self.box[0]), _check_box(self.box[1])))
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != n:
            raise ValueError(f"amplitudes have shape {psi.shape}, expected {n}")
        object.__setattr__(self, "psi", psi)

    @property
    def dims(self):
        return 2

    def _axis(self, i):
        lo, hi = self.box[i]
        return lo, (hi - lo) / self.n[i]

    @property
    def dx(self):
        return self._axis(0)[1]

    @property
    def dv(self):
        return self._axis(1)[1]

    @property
    def x(self):
        lo, d = self._axis(0)
        return lo + d * np.arange(self.n[0])

    @property
    def v(self):
        lo, d = self._axis(1)
        return lo + d * np.arange(self.n[1])

    @property
    def dk(self):
        return 2 * math.pi / (self.box[0][1] - self.box[0][0])

    @property
    def dkp(self):
        return 2 * math.pi / (self.box[1][1] - self.box[1][0])

    @property
    def k(self):
        return self.dk * np.arange(-self.n[0] // 2, self.n[0] // 2)

    @property
    def kp(self):
        return self.dkp * np.arange(-self.n[1] // 2, self.n[1] // 2)

    def norm(self):
        return float(math.sqrt(np.sum(np.abs(self.psi) ** 2) * self.dx * self.dv))

    def _w(self):
        return np.abs(self.psi) ** 2

    def mean_x(self):
        w = self._w()
        return float(np.sum(w * self.x[:, None]) / np.sum(w))

    def mean_v(self):
        w = self._w()
        return float(np.sum(w * self.v[None, :]) / np.sum(w))

    def mean_p(self):
        w = np.abs(to_momentum(self)) ** 2
        return float(self.hbar * np.sum(w * self.k[:, None]) / np.sum(w))

    def mean_p2(self):
        w = np.abs(to_momentum(self)) ** 2
        return float(self.hbar * np.sum(w * self.kp[None, :]) / np.sum(w))

    def with_psi(self, psi, time=None):
        return replace(self, psi=psi, time=self.time if time is None else time)


# -- Fourier pair --------------------------------------------------------------------


def _phase(lo, k):
    return np.exp(-1j * k * lo)


def to_momentum(grid):
    """``φ`` on the centered wavenumber grid (``k`` ascending)."""
    if grid.dims == 1:
        phi = np.fft.fftshift(np.fft.fft(grid.psi))
        return grid.dx / math.sqrt(2 * math.pi) * _phase(grid.box[0], grid.k) * phi
    phi = np.fft.fftshift(np.fft.fft2(grid.psi))
    ph = np.outer(_phase(grid.box[0][0], grid.k), _phase(grid.box[1][0], grid.kp))
    return grid.dx * grid.dv / (2 * math.pi) * ph * phi


def from_momentum(phi, grid):
    """Inverse of :func:`to_momentum`; returns ``grid`` with the new amplitudes."""
    phi = np.asarray(phi, dtype=complex)
    if grid.dims == 1:
        u = np.conj(_phase(grid.box[0], grid.k)) * phi
        psi = np.fft.ifft(np.fft.ifftshift(u)) * grid.n * grid.dk / math.sqrt(2 * math.pi)
        return grid.with_psi(psi)
    ph = np.outer(_phase(grid.box[0][0], grid.k), _phase(grid.box[1][0], grid.kp))
    u = np.conj(ph) * phi
    psi = np.fft.ifft2(np.fft.ifftshift(u)) * grid.n[0] * grid.n[1] * grid.dk * grid.dkp / (2 * math.pi)
    return grid.with_psi(psi)


def inner_half_mass(grid):
    """Fraction of spectral mass with ``|k|`` inside the inner half of the wavenumber grid."""
    w = np.abs(to_momentum(grid)) ** 2
    if grid.dims == 1:
        inner = np.abs(grid.k) < grid.k.max() / 2
        return float(w[inner].sum() / w.sum())
    ik = np.abs(grid.k) < grid.k.max() / 2
    ip = np.abs(grid.kp) < grid.kp.max() / 2
    return float(w[np.ix_(ik, ip)].sum() / w.sum())


def l2_distance(a, b):
    """Grid L² distance between two grids of the same geometry."""
    w = a.dx if a.dims == 1 else a.dx * a.dv
    return float(math.sqrt(np.sum(np.abs(a.psi - b.psi) ** 2) * w))


# -- symbols -------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolField1:
    """``H(x_i, ħk_m)`` on the grid, indexed ``[i, m]``."""

    H: np.ndarray
    x: np.ndarray
    k: np.ndarray
    hbar: float


@dataclass(frozen=True)
class SymbolField2:
    """Second-order symbol on the grid.

    Either ``H`` holds the full ``[i, j, m, l]`` array over ``(x, ẋ, k, k')``,
    or ``G`` holds the ``p1``-free part ``[i, j, l]`` of ``H = p1·ẋ + G(x, ẋ, ħk')``.
    """

    x: np.ndarray
    v: np.ndarray
    k: np.ndarray
    kp: np.ndarray
    hbar: float
    G: np.ndarray = None
    H: np.ndarray = None

    def full(self):
        if self.H is not None:
            return self.H
        p1 = self.hbar * self.k
        return self.v[None, :, None, None] * p1[None, None, :, None] + self.G[:, :, None, :]


def symbol_field1(L_or_fn, grid, t=0.0):
    """Symbol field from a Lagrangian (through ``H1``) or a callable ``H(x, p)``."""
    X, P = np.meshgrid(grid.x, grid.hbar * grid.k, indexing="ij")
    if isinstance(L_or_fn, Lagrangian1):
        F = invert_momentum1(L_or_fn, t, X, P).value
        H = P * F - L_or_fn(t, X, F)
    else:
        H = L_or_fn(X, P) + np.zeros_like(X)
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise FloatingPointError("non-finite symbol field")
    return SymbolField1(H, grid.x, grid.k, grid.hbar)


def symbol_field2(L_or_fn, grid, t=0.0):
    """Second-order symbol field.

    For a :class:`Lagrangian2` the affine structure in ``p1`` is used, so only
    ``F2`` on the ``(x, ẋ, ħk')`` grid is needed.  A callable is taken to be
    ``H(q1, q2, p1, p2)`` and tabulated in full.
    """
    hb = grid.hbar
    if isinstance(L_or_fn, Lagrangian2):
        X, V, P2 = np.meshgrid(grid.x, grid.v, hb * grid.kp, indexing="ij")
        F2 = invert_p2(L_or_fn, t, X, V, P2).value
        G = P2 * F2 - L_or_fn(t, X, V, F2)
        if not np.all(np.isfinite(G)):
            raise FloatingPointError("non-finite symbol field")
        return SymbolField2(grid.x, grid.v, grid.k, grid.kp, hb, G=np.asarray(G, dtype=float))
    X, V, P1, P2 = np.meshgrid(grid.x, grid.v, hb * grid.k, hb * grid.kp, indexing="ij")
    H = np.asarray(L_or_fn(X, V, P1, P2) + np.zeros_like(X), dtype=float)
    return SymbolField2(grid.x, grid.v, grid.k, grid.kp, hb, H=H)


def _check_geometry(field, grid):
    same = np.array_equal(field.x, grid.x) and np.array_equal(field.k, grid.k) and field.hbar == grid.hbar
    if grid.dims == 2:
        same = same and np.array_equal(field.v, grid.v) and np.array_equal(field.kp, grid.kp)
    if not same:
        raise ValueError("symbol field does not match the grid geometry")


def _chunked(n, fn, threads):
    starts = list(range(0, n, CHUNK))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(fn, starts))
    else:
        parts = [fn(s) for s in starts]
    return np.concatenate(parts, axis=0)


def apply_symbol1(field: SymbolField1, grid: WaveGrid1D, delta, threads=1) -> WaveGrid1D:
    """``ψ'(x) = (2π)^{-1/2} Σ_k dk [1 - (iΔ/ħ)H(x, ħk)] e^{ikx} φ(k)``, summed directly."""
    _check_geometry(field, grid)
    phi = to_momentum(grid)
    x, k = grid.x, grid.k
    c = grid.dk / math.sqrt(2 * math.pi) * phi

    def rows(s):
        sl = slice(s, s + CHUNK)
        E = np.exp(1j * np.outer(x[sl], k))
        A = (1.0 - 1j * delta / grid.hbar * field.H[sl]) * E
        return A @ c

    psi = _chunked(grid.n, rows, threads)
    return grid.with_psi(psi, grid.time + delta)


def apply_symbol2(field: SymbolField2, grid: WaveGrid2D, delta, threads=1) -> WaveGrid2D:
    """Second-order symbol step by the double spectral sum over ``(k, k')``.

    With the affine form ``H = p1·ẋ + G`` the ``k`` sum of the ``G`` part is
    done first (it is an inverse transform along ``x``); this reorders the
    same finite sum and is exact.
    """
    _check_geometry(field, grid)
    phi = to_momentum(grid)
    x, v, k, kp = grid.x, grid.v, grid.k, grid.kp
    pref = grid.dk * grid.dkp / (2 * math.pi)
    Ex = np.exp(1j * np.outer(x, k))  # [i, m]
    Ev = np.exp(1j * np.outer(v, kp))  # [j, l]
    z = -1j * delta / grid.hbar
    if field.H is None:
        chi = Ex @ phi  # [i, l]
        chik = Ex @ (grid.hbar * k[:, None] * phi)

        def rows(s):
            sl = slice(s, s + CHUNK)
            base = np.einsum("jl,il->ij", Ev, chi[sl])
            p1term = v[None, :] * np.einsum("jl,il->ij", Ev, chik[sl])
            gterm = np.einsum("ijl,jl,il->ij", field.G[sl], Ev, chi[sl])
            return pref * (base + z * (p1term + gterm))

    else:

        def rows(s):
            sl = slice(s, s + CHUNK)
            A = 1.0 + z * field.H[sl]
            return pref * np.einsum("ijml,im,jl,ml->ij", A, Ex[sl], Ev, phi)

    psi = _chunked(grid.n[0], rows, threads)
    return grid.with_psi(psi, grid.time + delta)


# -- kernels -------------------------------------------------------------------------


def _n1_array(c, delta, hbar):
    c = np.asarray(c, dtype=float)
    if np.any(c == 0):
        raise ZeroDivisionError("singular N1 on the grid")
    return np.sqrt(np.abs(c) / (2 * math.pi * hbar * delta)) * np.exp(-1j * np.sign(c) * math.pi / 4)


def kernel_matrix1(L: Lagrangian1, grid: WaveGrid1D, delta, t2=None, nodes=DEFAULT_NODES):
    """``K[i, j] = N1(v_ij)·exp(iS1/ħ)`` between ``x2 = x_i`` and ``x1 = x_j``.

    ``S1`` is the quadrature action of the chord and ``N1`` uses ``∂²L/∂v²`` at
    the chord slope ``v_ij = (x_i - x_j)/Δ``.
    """
    t2 = grid.time + delta if t2 is None else t2
    X2, X1 = np.meshgrid(grid.x, grid.x, indexing="ij")
    slope = (X2 - X1) / delta
    S = linear_action(L, t2, delta, X2, slope, nodes)
    _, _, h = closed_or_dual(L, (t2, X2, slope))
    N = _n1_array(h[2][2] + np.zeros_like(slope), delta, grid.hbar)
    return N * np.exp(1j * S / grid.hbar)


def kernel_step1(
    L: Lagrangian1, grid: WaveGrid1D, delta, method="direct", nodes=DEFAULT_NODES, threads=1, amplitude=None
):
    """One-cell path-integral step.

    ``method="direct"`` sums the kernel matrix over the grid nodes.  The
    direct sum only resolves the kernel's chirp when ``Δ ≳ m·ℓ²/(2πħn)``.
    ``method="spectral"`` inserts the momentum representation and evaluates
    the ``x1`` integral at its stationary point with the exact Gaussian
    fluctuation factor; for quadratic ``L`` both agree with the continuum
    integral.  ``amplitude`` reuses a precomputed :func:`kernel_amplitude1`.
    """
    t2 = grid.time + delta
    if method == "direct":
        K = kernel_matrix1(L, grid, delta, t2, nodes)
        return grid.with_psi(K @ grid.psi * grid.dx, t2)
    if method != "spectral":
        raise ValueError(f"unknown kernel method {method!r}")
    A = kernel_amplitude1(L, grid, delta, t2, nodes) if amplitude is None else amplitude
    psi = A @ to_momentum(grid) * (grid.dk / math.sqrt(2 * math.pi))
    return grid.with_psi(psi, t2)


def kernel_amplitude1(L: Lagrangian1, grid: WaveGrid1D, delta, t2=None, nodes=DEFAULT_NODES):
    """Matrix ``A[i, m]`` taking momentum amplitudes to ``ψ(x_i)`` after one cell."""
    t2 = grid.time + delta if t2 is None else t2
    X2, KK = np.meshgrid(grid.x, grid.k, indexing="ij")
    u, xi, curv = sp1_field(L, t2, delta, X2, KK, grid.hbar, nodes=nodes)
    _, _, h = closed_or_dual(L, (t2, X2, u))
    c_design = h[2][2] + np.zeros_like(u)
    # N1(design)·∫exp(i C z²/2ħ)dz = N1(design)/N1(C·Δ)
    ratio = _n1_array(c_design, delta, grid.hbar) / _n1_array(curv * delta, delta, grid.hbar)
    return ratio * np.exp(1j * xi / grid.hbar)


def kernel_step2(
    L: Lagrangian2,
    grid: WaveGrid2D,
    delta,
    method="spectral",
    nodes=DEFAULT_NODES,
    cutoff=1e-10,
    threads=1,
    max_nodes=MAX_2D_NODES,
):
    """Second-order one-cell step on a 2D grid.

    ``method="spectral"`` (default) evaluates the inner ``(x1, ẋ1)`` integral
    at its stationary point for every output node and retained momentum
    mode; modes with ``|φ| < cutoff·max|φ|`` are skipped.  The prefactor is
    ``N2`` at ``F2`` times the exact Gaussian integral of the quadratic
    fluctuation.  ``method="direct"`` sums ``N2·exp(iS2/ħ)ψ`` over the grid,
    which aliases unless ``Δ`` is large; it exists for small diagnostics.
    """
    if max(grid.n) > max_nodes:
        raise ValueError(f"2D grid {grid.n} exceeds the cap of {max_nodes} nodes per axis")
    t2 = grid.time + delta
    hb = grid.hbar
    if method == "direct":
        return _kernel_step2_direct(L, grid, delta, t2, nodes)
    if method != "spectral":
        raise ValueError(f"unknown kernel method {method!r}")
    phi = to_momentum(grid)
    keep = np.abs(phi) >= cutoff * np.abs(phi).max()
    mi, li = np.nonzero(keep)
    kk, kkp, ph = grid.k[mi], grid.kp[li], phi[mi, li]
    pref = grid.dk * grid.dkp / (2 * math.pi)
    x, v = grid.x, grid.v

    def rows(s):
        xs = x[s : s + CHUNK]
        X2 = xs[:, None, None] + 0 * v[None, :, None] + 0 * kk[None, None, :]
        V2b = v[None, :, None] + 0 * X2
        K = kk[None, None, :] + 0 * X2
        KP = kkp[None, None, :] + 0 * X2
        xi, det_b, sign_b, _ = sp2_field(L, t2, delta, X2, V2b, K, KP, hb, nodes=nodes)
        F2 = invert_p2(L, t2, X2, V2b, hb * KP).value
        _, _, h = closed_or_dual(L, (t2, X2, V2b, F2))
        laa = h[3][3] + 0 * X2
        n2 = math.sqrt(12.0) * laa / (2j * math.pi * hb * delta**2)
        gauss = 2 * math.pi * hb / np.sqrt(np.abs(det_b)) * np.exp(1j * math.pi / 4 * sign_b)
        A = n2 * gauss * np.exp(1j * xi / hb)
        return pref * np.einsum("ijq,q->ij", A, ph)

    psi = _chunked(grid.n[0], rows, threads)
    return grid.with_psi(psi, t2)


def _kernel_step2_direct(L, grid, delta, t2, nodes):
    from .cell import cubic_action, cubic_coefficients

    hb = grid.hbar
    x, v = grid.x, grid.v
    out = np.empty(grid.n, dtype=complex)
    X1, V1 = np.meshgrid(x, v, indexing="ij")
    w = grid.dx * grid.dv
    for i, x2 in enumerate(x):
        for j, v2 in enumerate(v):
            a, jk = cubic_coefficients(delta, X1, V1, x2, v2)
            S = cubic_action(L, t2, delta, x2, v2, a, jk, nodes)
            _, _, h = closed_or_dual(L, (t2, x2 + 0 * X1, v2 + 0 * X1, a))
            laa = h[3][3] + 0 * X1
            n2 = math.sqrt(12.0) * laa / (2j * math.pi * hb * delta**2)
            out[i, j] = np.sum(n2 * np.exp(1j * S / hb) * grid.psi) * w
    return grid.with_psi(out, t2)


# -- composition ---------------------------------------------------------------------

STEPPERS = ("symbol1", "symbol2", "kernel1", "kernel2")


def make_stepper(kind, L, delta, *, threads=1, **kw) -> Callable:
    """Return ``step(grid) -> grid`` for one of ``symbol1, symbol2, kernel1, kernel2``.

    Symbol fields and spectral one-cell amplitudes are cached when ``L``
    is autonomous.
    """
    if kind not in STEPPERS:
        raise ConfigError(f"unknown stepper {kind!r}; choose from {', '.join(STEPPERS)}", field="stepper")
    cache = {}
    auto = getattr(L, "autonomous", False)

    def field_for(grid, builder):
        key = None if auto else grid.time + delta
        if key not in cache:
            cache.clear()
            cache[key] = builder(L, grid, grid.time + delta)
        return cache[key]

    if kind == "symbol1":
        return lambda g: apply_symbol1(field_for(g, symbol_field1), g, delta, threads)
    if kind == "symbol2":
        return lambda g: apply_symbol2(field_for(g, symbol_field2), g, delta, threads)
    if kind == "kernel1":
        if kw.get("method", "direct") == "spectral":
            nodes = kw.get("nodes", DEFAULT_NODES)
            amp = lambda L_, g, t2: kernel_amplitude1(L_, g, delta, t2, nodes)  # noqa: E731
            return lambda g: kernel_step1(L, g, delta, threads=threads, amplitude=field_for(g, amp), **kw)
        return lambda g: kernel_step1(L, g, delta, threads=threads, **kw)
    return lambda g: kernel_step2(L, g, delta, threads=threads, **kw)


@dataclass
class Diagnostics:
    norms: list = field(default_factory=list)
    mean_x: list = field(default_factory=list)
    mean_p: list = field(default_factory=list)
    mean_v: list = field(default_factory=list)
    mean_p2: list = field(default_factory=list)

    def record(self, g):
        self.norms.append(g.norm())
        self.mean_x.append(g.mean_x())
        self.mean_p.append(g.mean_p())
        if g.dims == 2:
            self.mean_v.append(g.mean_v())
            self.mean_p2.append(g.mean_p2())

    def to_dict(self):
        d = {"norms": self.norms, "mean_x": self.mean_x, "mean_p": self.mean_p}
        if self.mean_v:
            d.update(mean_v=self.mean_v, mean_p2=self.mean_p2)
        return d


def evolve(stepper, grid, steps, norm_bound=1e6):
    """Apply ``stepper`` ``steps`` times; record norm and means after each step.

    Raises :class:`NormBlowUp` (carrying the diagnostics) when the norm
    exceeds ``norm_bound`` times its initial value.
    """
    diag = Diagnostics()
    diag.record(grid)
    n0 = diag.norms[0]
    for s in range(int(steps)):
        grid = stepper(grid)
        diag.record(grid)
        nrm = diag.norms[-1]
        if not math.isfinite(nrm) or nrm > norm_bound * n0:
            raise NormBlowUp(f"norm {nrm:.3e} exceeded bound after step {s + 1}", diagnostics=diag)
    return grid, diag


# -- wave packets and references -------------------------------------------------------


def gaussian1d(n, box, x0, sigma, k0=0.0, hbar=1.0, time=0.0):
    """Normalized ``(2πσ²)^{-1/4} exp(-(x-x0)²/4σ² + ik0(x-x0))``."""
    g = WaveGrid1D(n, box, np.zeros(n), hbar, time)
    x = g.x
    psi = (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k0 * (x - x0))
    return g.with_psi(psi)


def gaussian2d(n, box, center, sigma, k0=(0.0, 0.0), hbar=1.0, time=0.0):
    """Product of two :func:`gaussian1d` packets in ``x`` and ``ẋ``."""
    gx = gaussian1d(n[0], box[0], center[0], sigma[0], k0[0], hbar)
    gv = gaussian1d(n[1], box[1], center[1], sigma[1], k0[1], hbar)
    return WaveGrid2D(n, box, np.outer(gx.psi, gv.psi), hbar, time)


def _free_gaussian(x, t, x0, sigma, k0, m, hbar):
    tau = hbar * t / (2 * m * sigma**2)
    w = 1 + 1j * tau
    vel = hbar * k0 / m
    return (
        (2 * math.pi * sigma**2) ** -0.25
        / np.sqrt(w)
        * np.exp(-((x - x0 - vel * t) ** 2) / (4 * sigma**2 * w) + 1j * k0 * (x - x0) - 1j * hbar * k0**2 * t / (2 * m))
    )


def _coherent(x, t, x0, p0, m, omega, hbar):
    c, s = math.cos(omega * t), math.sin(omega * t)
    xt = x0 * c + p0 / (m * omega) * s
    pt = p0 * c - m * omega * x0 * s
    a = m * omega / hbar
    phase = -0.5 * omega * t + (pt * xt - p0 * x0) / (2 * hbar)
    return (a / math.pi) ** 0.25 * np.exp(-0.5 * a * (x - xt) ** 2 + 1j * pt * (x - xt) / hbar + 1j * phase)


def analytic_reference(scenario, t, geometry, **p):
    """Analytic fixtures.

    ``free-gaussian``
        ``x0, sigma, k0, m``; exact dispersive Gaussian on ``geometry``
        (``(n, box)``) at time ``t``.
    ``harmonic-coherent``
        ``x0, p0, m, omega``; coherent state of ``m v²/2 - m ω² x²/2``.  At
        ``t = 0`` it is ``(mω/πħ)^{1/4} exp(-mω(x-x0)²/2ħ + ip0(x-x0)/ħ)``.
    ``pu-classical-moments``
        ``omega, initial=(q1, q2, p1, p2), dt``; Hamilton's flow of ``H2``
        for Pais–Uhlenbeck, returned as a length-4 array (``geometry`` is
        ignored).
    """
    hbar = float(p.get("hbar", 1.0))
    if scenario == "free-gaussian":
        n, box = geometry
        g = WaveGrid1D(n, box, np.zeros(n), hbar, t)
        psi = _free_gaussian(g.x, t, p["x0"], p["sigma"], p.get("k0", 0.0), p.get("m", 1.0), hbar)
        return g.with_psi(psi)
    if scenario == "harmonic-coherent":
        n, box = geometry
        g = WaveGrid1D(n, box, np.zeros(n), hbar, t)
        psi = _coherent(g.x, t, p["x0"], p.get("p0", 0.0), p.get("m", 1.0), p["omega"], hbar)
        return g.with_psi(psi)
    if scenario == "pu-classical-moments":
        from .jet import builtin_lagrangian

        L = builtin_lagrangian("pais-uhlenbeck", omega=p["omega"])
        z = np.asarray(p["initial"], dtype=float)
        dt = float(p.get("dt", 1e-3))
        nsteps = int(round(t / dt))
        if nsteps == 0:
            return z.copy()
        rhs = hamilton_rhs(L, 0.0)
        rhs.guess = np.full(8, float(invert_p2(L, 0.0, z[0], z[1], z[3]).value))
        h = t / nsteps
        for _ in range(nsteps):
            z = _rk4(rhs, z, h)
        return z
    raise ValueError(f"unknown reference scenario {scenario!r}")


# -- snapshots -------------------------------------------------------------------------

_MAGIC = "ostrokernel-grid v1"


def save_snapshot(grid, path):
    """Write a self-describing text snapshot (header, then ``re im`` per node)."""
    lines = [_MAGIC, f"dims {grid.dims}"]
    if grid.dims == 1:
        lines += [f"n {grid.n}", f"box {grid.box[0]!r} {grid.box[1]!r}"]
    else:
        lines += [f"n {grid.n[0]} {grid.n[1]}"]
        lines += [f"box {grid.box[0][0]!r} {grid.box[0][1]!r} {grid.box[1][0]!r} {grid.box[1][1]!r}"]
    lines += [f"hbar {float(grid.hbar)!r}", f"time {float(grid.time)!r}", "data"]
    for z in grid.psi.ravel():
        lines.append(f"{float(z.real)!r} {float(z.imag)!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"{path}: not a grid snapshot")
    head = {}
    i = 1
    while lines[i] != "data":
        key, *vals = lines[i].split()
        head[key] = vals
        i += 1
    vals = np.array([[float(u) for u in ln.split()] for ln in lines[i + 1 :]])
    psi = vals[:, 0] + 1j * vals[:, 1]
    hbar, time = float(head["hbar"][0]), float(head["time"][0])
    if int(head["dims"][0]) == 1:
        n = int(head["n"][0])
        box = tuple(float(u) for u in head["box"])
        return WaveGrid1D(n, box, psi, hbar, time)
    n = tuple(int(u) for u in head["n"])
    b = [float(u) for u in head["box"]]
    return WaveGrid2D(n, ((b[0], b[1]), (b[2], b[3])), psi.reshape(n), hbar, time)
