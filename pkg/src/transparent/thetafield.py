"""Matrix-valued functions on the unit tangent bundle of a flat square torus.

A field is stored as a finite Fourier series in the fiber angle theta,

    u(x, y, theta) = sum_{m = mode_min}^{mode_max} u_m(x, y) exp(i m theta),

where each coefficient ``u_m`` is a grid of 2x2 complex matrices sampled on
a uniform periodic grid and interpreted as its band-limited trigonometric
interpolant.  Coefficient arrays have shape ``(nmodes, ny, nx, 2, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import algebra
from .errors import GridMismatch, NotAConnection, NotAnInvolution, NotUnitary

DEGREE_TOL = 1e-9

# spatial axes of a coefficient stack (..., ny, nx, 2, 2)
MAT_AXES = (-4, -3)
SCALAR_AXES = (-2, -1)


@dataclass(frozen=True)
class TorusGrid:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"grid sizes must be even integers >= 8, got {self.nx}x{self.ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("periods must be positive")

    @classmethod
    def square(cls, n: int, period: float = 1.0) -> "TorusGrid":
        return cls(n, n, period, period)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.Lx / self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.Ly / self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def z(self) -> np.ndarray:
        X, Y = self.mesh()
        return X + 1j * Y

    @property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nx, d=self.Lx / self.nx)

    @property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, d=self.Ly / self.ny)

    @property
    def cell_area(self) -> float:
        return (self.Lx / self.nx) * (self.Ly / self.ny)

    def wrap(self, x, y):
        return np.mod(x, self.Lx), np.mod(y, self.Ly)


@dataclass(frozen=True, eq=False)
class Metric:
    """Conformal metric exp(2 lambda)(dx^2 + dy^2); lambda = 0 is the flat torus."""

    grid: TorusGrid
    lam: np.ndarray | None = None

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", np.zeros(self.grid.shape))
        lam = np.array(self.lam, dtype=float)
        if lam.shape != self.grid.shape or not np.all(np.isfinite(lam)):
            raise ValueError("lambda must be a finite real array of shape (ny, nx)")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def flat(cls, n: int = 64, period: float = 1.0) -> "Metric":
        return cls(TorusGrid.square(n, period))

    @property
    def is_flat(self) -> bool:
        return not np.any(self.lam)

    def __eq__(self, other):
        if not isinstance(other, Metric):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.lam, other.lam)

    __hash__ = None

    @cached_property
    def weights(self) -> np.ndarray:
        """Area weights exp(2 lambda) dx dy per grid point (theta factor excluded)."""
        return np.exp(2 * self.lam) * self.grid.cell_area

    @cached_property
    def dbar_lam(self) -> np.ndarray:
        return dbar(self.lam, self.grid, SCALAR_AXES)

    @cached_property
    def d_lam(self) -> np.ndarray:
        return dhol(self.lam, self.grid, SCALAR_AXES)


def check_same_metric(*items) -> Metric:
    metrics = [getattr(it, "metric", it) for it in items]
    first = metrics[0]
    for m in metrics[1:]:
        if m is not first and m != first:
            raise GridMismatch("fields live on different grids or metrics")
    return first


# ---------------------------------------------------------------- spectral


def _deriv_multiplier(k: np.ndarray) -> np.ndarray:
    k = k.copy()
    n = len(k)
    k[n // 2] = 0.0  # Nyquist: derivative of the symmetric cos interpolant vanishes on the grid
    return k


def _broadcast_1d(v: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(v)
    return v.reshape(shape)


def spectral_gradient(a: np.ndarray, grid: TorusGrid, axes=MAT_AXES) -> tuple[np.ndarray, np.ndarray]:
    """(d/dx a, d/dy a) via FFT along the given (y, x) axes."""
    ay, ax = axes
    F = np.fft.fft2(a, axes=axes)
    kx = _broadcast_1d(_deriv_multiplier(grid.kx), ax % a.ndim, a.ndim)
    ky = _broadcast_1d(_deriv_multiplier(grid.ky), ay % a.ndim, a.ndim)
    dx = np.fft.ifft2(1j * kx * F, axes=axes)
    dy = np.fft.ifft2(1j * ky * F, axes=axes)
    if not np.iscomplexobj(a):
        dx, dy = dx.real, dy.real
    return dx, dy


def dbar(a: np.ndarray, grid: TorusGrid, axes=MAT_AXES) -> np.ndarray:
    """(d/dx + i d/dy)/2."""
    dx, dy = spectral_gradient(a, grid, axes)
    return 0.5 * (dx + 1j * dy)


def dhol(a: np.ndarray, grid: TorusGrid, axes=MAT_AXES) -> np.ndarray:
    """(d/dx - i d/dy)/2."""
    dx, dy = spectral_gradient(a, grid, axes)
    return 0.5 * (dx - 1j * dy)


def _resample_axis(a: np.ndarray, m: int, axis: int) -> np.ndarray:
    """Fourier-resample along one axis from n to m points (n, m even)."""
    n = a.shape[axis]
    if m == n:
        return a
    F = np.fft.fft(a, axis=axis)
    F = np.moveaxis(F, axis, 0)
    G = np.zeros((m,) + F.shape[1:], dtype=complex)
    if m > n:
        h = n // 2
        G[:h] = F[:h]
        G[m - h + 1 :] = F[h + 1 :]
        G[h] = 0.5 * F[h]
        G[m - h] = 0.5 * F[h]
    else:
        h = m // 2
        G[:h] = F[:h]
        G[h + 1 :] = F[n - h + 1 :]
        G[h] = F[h] + F[n - h]
    G = np.moveaxis(G, 0, axis)
    return np.fft.ifft(G, axis=axis) * (m / n)


def resample(a: np.ndarray, shape: tuple[int, int], axes=MAT_AXES) -> np.ndarray:
    """Band-limited resampling of the (y, x) axes to a new even grid shape."""
    ay, ax = axes
    out = _resample_axis(np.asarray(a, dtype=complex), shape[0], ay % a.ndim)
    return _resample_axis(out, shape[1], ax % a.ndim)


# ------------------------------------------------------------------ fields


def _theta_basis(modes: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    return np.exp(1j * np.outer(thetas, modes))


@dataclass(frozen=True, eq=False)
class ThetaField:
    """Finite fiber-Fourier series with Mat2 coefficient grids.

    ``parity`` is None, "even" or "odd"; ``unitary`` marks an SU(2)-valued map
    and is validated on construction.
    """

    metric: Metric
    coeffs: np.ndarray
    mode_min: int
    parity: str | None = None
    unitary: bool = False
    kind = "field"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 5 or c.shape[1:3] != self.metric.grid.shape or c.shape[3:] != (2, 2):
            raise ValueError(f"coefficient array has shape {c.shape}")
        if c.shape[0] < 1:
            raise ValueError("at least one mode required")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "mode_min", int(self.mode_min))
        if self.parity not in (None, "even", "odd"):
            raise ValueError(f"unknown parity tag {self.parity!r}")
        if self.parity is not None:
            found = parity_of(self)
            if found not in (self.parity, "zero"):
                raise ValueError(f"parity tag {self.parity!r} but field is {found}")
        if self.unitary:
            defect = self.unitarity_defect()
            if defect > algebra.SPECTRAL_TOL:
                raise NotUnitary(f"reconstruction leaves SU(2) by {defect:.2e}")

    # -- construction

    @classmethod
    def zeros(cls, metric: Metric, mode_min: int = 0, mode_max: int = 0, **tags) -> "ThetaField":
        shape = (mode_max - mode_min + 1,) + metric.grid.shape + (2, 2)
        return cls(metric, np.zeros(shape, dtype=complex), mode_min, **tags)

    @classmethod
    def from_modes(cls, metric: Metric, modes: dict, **tags) -> "ThetaField":
        """Build from ``{m: coefficient}``; coefficients broadcast to the grid."""
        if not modes:
            return cls.zeros(metric, **tags)
        lo, hi = min(modes), max(modes)
        c = np.zeros((hi - lo + 1,) + metric.grid.shape + (2, 2), dtype=complex)
        for m, h in modes.items():
            h = np.asarray(h, dtype=complex)
            if h.shape[-2:] != (2, 2):
                h = h[..., None, None] * algebra.IDENTITY
            c[m - lo] = np.broadcast_to(h, metric.grid.shape + (2, 2))
        return cls(metric, c, lo, **tags)

    @classmethod
    def constant(cls, metric: Metric, mat=algebra.IDENTITY, **tags) -> "ThetaField":
        return cls.from_modes(metric, {0: np.asarray(mat, dtype=complex)}, **tags)

    @classmethod
    def identity(cls, metric: Metric) -> "ThetaField":
        return cls.constant(metric, algebra.IDENTITY, unitary=True, parity="even")

    @classmethod
    def from_samples(cls, metric: Metric, samples: np.ndarray, mode_min: int, mode_max: int, **tags) -> "ThetaField":
        """Project theta-samples at theta_k = 2 pi k / K onto the given mode range."""
        samples = np.asarray(samples, dtype=complex)
        K = samples.shape[0]
        modes = np.arange(mode_min, mode_max + 1)
        if K < len(modes):
            raise ValueError("not enough theta samples for the requested modes")
        thetas = 2 * np.pi * np.arange(K) / K
        E = np.conj(_theta_basis(modes, thetas)) / K
        c = np.einsum("km,k...->m...", E, samples)
        return cls(metric, c, mode_min, **tags)

    # -- bookkeeping

    @property
    def grid(self) -> TorusGrid:
        return self.metric.grid

    @property
    def mode_max(self) -> int:
        return self.mode_min + self.coeffs.shape[0] - 1

    @property
    def modes(self) -> range:
        return range(self.mode_min, self.mode_max + 1)

    def mode(self, m: int) -> np.ndarray:
        if self.mode_min <= m <= self.mode_max:
            return self.coeffs[m - self.mode_min]
        return np.zeros(self.grid.shape + (2, 2), dtype=complex)

    def mode_energies(self) -> dict[int, float]:
        """RMS Frobenius norm of every stored coefficient grid."""
        rms = np.sqrt(np.mean(np.sum(np.abs(self.coeffs) ** 2, axis=(-2, -1)), axis=(1, 2)))
        return {m: float(r) for m, r in zip(self.modes, rms)}

    def replace(self, **changes) -> "ThetaField":
        return replace(self, **changes)

    def untagged(self) -> "ThetaField":
        return ThetaField(self.metric, self.coeffs, self.mode_min)

    def with_tags(self, **tags) -> "ThetaField":
        base = dict(parity=self.parity, unitary=self.unitary)
        base.update(tags)
        return ThetaField(self.metric, self.coeffs, self.mode_min, **base)

    def with_range(self, mode_min: int, mode_max: int) -> "ThetaField":
        """Pad with zeros or truncate to the given mode range (tags dropped)."""
        c = np.stack([self.mode(m) for m in range(mode_min, mode_max + 1)])
        return ThetaField(self.metric, c, mode_min)

    def trimmed(self, tol: float = 0.0) -> "ThetaField":
        """Drop outer modes whose RMS norm is <= tol (keeps at least mode 0)."""
        en = self.mode_energies()
        keep = [m for m, e in en.items() if e > tol] or [0]
        lo, hi = min(min(keep), 0), max(max(keep), 0)
        return self.with_range(lo, hi).with_tags(parity=self.parity, unitary=self.unitary)

    # -- arithmetic

    def _aligned(self, other: "ThetaField") -> tuple[np.ndarray, np.ndarray, int]:
        check_same_metric(self, other)
        lo = min(self.mode_min, other.mode_min)
        hi = max(self.mode_max, other.mode_max)
        return self.with_range(lo, hi).coeffs, other.with_range(lo, hi).coeffs, lo

    def __add__(self, other):
        if not isinstance(other, ThetaField):
            return NotImplemented
        a, b, lo = self._aligned(other)
        return ThetaField(self.metric, a + b, lo)

    def __sub__(self, other):
        if not isinstance(other, ThetaField):
            return NotImplemented
        a, b, lo = self._aligned(other)
        return ThetaField(self.metric, a - b, lo)

    def __neg__(self):
        return ThetaField(self.metric, -self.coeffs, self.mode_min)

    def __mul__(self, scalar):
        if isinstance(scalar, ThetaField):
            return NotImplemented
        return ThetaField(self.metric, self.coeffs * complex(scalar), self.mode_min)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    def map_coeffs(self, fn, mode_shift: int = 0) -> "ThetaField":
        """Apply ``fn(m, coefficient)`` to every mode, shifting indices by ``mode_shift``."""
        c = np.stack([fn(m, self.mode(m)) for m in self.modes])
        return ThetaField(self.metric, c, self.mode_min + mode_shift)

    def adjoint(self) -> "ThetaField":
        """Pointwise conjugate transpose; mode m of u* is (u_{-m})*."""
        c = algebra.adjoint(self.coeffs[::-1])
        return ThetaField(self.metric, c, -self.mode_max, parity=self.parity, unitary=self.unitary)

    def j_twist(self) -> "ThetaField":
        """Pointwise j u j^{-1}; mode m of the result is j_twist(u_{-m})."""
        c = algebra.j_twist(self.coeffs[::-1])
        return ThetaField(self.metric, c, -self.mode_max)

    # -- sampling

    def samples(self, ntheta: int) -> np.ndarray:
        """Values at theta_k = 2 pi k / ntheta, shape (ntheta, ny, nx, 2, 2)."""
        thetas = 2 * np.pi * np.arange(ntheta) / ntheta
        E = _theta_basis(np.array(list(self.modes)), thetas)
        return np.einsum("km,m...->k...", E, self.coeffs)

    def unitarity_defect(self) -> float:
        n = max(abs(self.mode_min), abs(self.mode_max))
        return algebra.su2_group_defect(self.samples(4 * n + 4))

    @cached_property
    def spectrum(self) -> np.ndarray:
        """2D Fourier coefficients per mode, normalised so the interpolant is sum c e^{ik.x}."""
        g = self.grid
        return np.fft.fft2(self.coeffs, axes=(1, 2)) / (g.nx * g.ny)


# ------------------------------------------------------------- point eval


def _exp_table(coord: np.ndarray, k: np.ndarray) -> np.ndarray:
    E = np.exp(1j * np.outer(coord, k))
    nyq = len(k) // 2
    E[:, nyq] = np.cos(coord * k[nyq])
    return E


def evaluate_points(f: ThetaField, x, y, theta, chunk: int = 2048) -> np.ndarray:
    """Exact band-limited evaluation at arbitrary points; returns (P, 2, 2)."""
    x, y, theta = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, theta)))
    x, y, theta = x.ravel(), y.ravel(), theta.ravel()
    g = f.grid
    modes = np.array(list(f.modes))
    nm = len(modes)
    # (ky, mode * kx * entry) so the y-sum is one matrix product
    spec = np.moveaxis(f.spectrum, 1, 0).reshape(g.ny, nm * g.nx * 4)
    out = np.empty((len(x), 2, 2), dtype=complex)
    for s in range(0, len(x), chunk):
        sl = slice(s, s + chunk)
        Ex = _exp_table(x[sl], g.kx)
        Ey = _exp_table(y[sl], g.ky)
        Et = np.exp(1j * np.outer(theta[sl], modes))
        T = (Ey @ spec).reshape(-1, nm, g.nx, 4)
        S = np.einsum("pl,pmle->pme", Ex, T)
        out[sl] = np.einsum("pm,pme->pe", Et, S).reshape(-1, 2, 2)
    return out


def evaluate(f: ThetaField, x: float, y: float, theta: float) -> np.ndarray:
    return evaluate_points(f, x, y, theta)[0]


# ----------------------------------------------------------------- products


def multiply(f: ThetaField, g: ThetaField, dealias: bool = True) -> ThetaField:
    """Pointwise matrix product f(x, theta) g(x, theta).

    Theta modes convolve exactly.  With ``dealias`` the spatial product is
    formed on a 2x zero-padded grid and projected back to the original band.
    """
    metric = check_same_metric(f, g)
    lo = f.mode_min + g.mode_min
    hi = f.mode_max + g.mode_max
    K = hi - lo + 1
    grid = metric.grid
    fine = (2 * grid.ny, 2 * grid.nx) if dealias else grid.shape
    fc = resample(f.coeffs, fine) if dealias else f.coeffs
    gc = resample(g.coeffs, fine) if dealias else g.coeffs
    thetas = 2 * np.pi * np.arange(K) / K
    Ef = _theta_basis(np.array(list(f.modes)), thetas)
    Eg = _theta_basis(np.array(list(g.modes)), thetas)
    fs = np.einsum("km,m...->k...", Ef, fc)
    gs = np.einsum("km,m...->k...", Eg, gc)
    prod = fs @ gs
    modes = np.arange(lo, hi + 1)
    c = np.einsum("km,k...->m...", np.conj(_theta_basis(modes, thetas)) / K, prod)
    if dealias:
        c = resample(c, grid.shape)
    tags = {}
    if f.parity and g.parity:
        tags["parity"] = "even" if f.parity == g.parity else "odd"
    out = ThetaField(metric, c, lo, **tags)
    if f.unitary and g.unitary:
        out = out.with_tags(unitary=True)
    return out


def multiply_grid(a: np.ndarray, b: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Dealiased product of two mode-0 coefficient grids (ny, nx, 2, 2)."""
    fine = (2 * grid.ny, 2 * grid.nx)
    return resample(resample(a, fine) @ resample(b, fine), grid.shape)


# --------------------------------------------------------------- diagnostics


def degree_of(f: ThetaField, tol: float = DEGREE_TOL) -> int:
    """Largest |m| whose coefficient grid has RMS Frobenius norm above tol."""
    live = [abs(m) for m, e in f.mode_energies().items() if e > tol]
    return max(live, default=0)


def parity_of(f: ThetaField, tol: float = DEGREE_TOL) -> str:
    """'even', 'odd' or 'mixed' ('zero' for a vanishing field)."""
    en = f.mode_energies()
    odd = any(e > tol for m, e in en.items() if m % 2)
    even = any(e > tol for m, e in en.items() if m % 2 == 0)
    if odd and even:
        return "mixed"
    if odd:
        return "odd"
    if even:
        return "even"
    return "zero"


def j_symmetry_defect(f: ThetaField) -> float:
    """max_m max_x ||j_twist(u_m) - u_{-m}||_F; zero for SU(2)-valued maps."""
    n = max(abs(f.mode_min), abs(f.mode_max))
    return max(
        float(np.max(algebra.fro(algebra.j_twist(f.mode(m)) - f.mode(-m)))) for m in range(-n, n + 1)
    )


# --------------------------------------------------------------- refinements


@dataclass(frozen=True, eq=False)
class Connection(ThetaField):
    """A u(2)-valued function with V^2 A = -A: only modes +-1, anti-Hermitian."""

    mode_min: int = -1
    kind = "connection"

    def __post_init__(self):
        super().__post_init__()
        if self.mode_min != -1 or self.coeffs.shape[0] != 3:
            raise NotAConnection("a connection stores exactly modes -1, 0, 1")
        if np.any(self.coeffs[1]):
            raise NotAConnection("mode 0 of a connection must vanish")
        a1, am1 = self.coeffs[2], self.coeffs[0]
        skew = float(np.max(algebra.fro(am1 + algebra.adjoint(a1)), initial=0.0))
        tr = float(np.max(np.abs(algebra.trace(a1)), initial=0.0))
        if max(skew, tr) > 1e-10:
            raise NotAConnection(f"A_-1 != -(A_1)* by {skew:.2e}, trace {tr:.2e}")

    @classmethod
    def from_coefficients(cls, metric: Metric, a1, am1=None) -> "Connection":
        a1 = np.broadcast_to(np.asarray(a1, dtype=complex), metric.grid.shape + (2, 2))
        am1 = -algebra.adjoint(a1) if am1 is None else np.broadcast_to(np.asarray(am1, dtype=complex), a1.shape)
        c = np.stack([am1, np.zeros_like(a1), a1])
        return cls(metric, c)

    @classmethod
    def zero(cls, metric: Metric) -> "Connection":
        return cls.from_coefficients(metric, np.zeros((2, 2), dtype=complex))

    @classmethod
    def from_field(cls, f: ThetaField) -> "Connection":
        """Orthogonal projection of a raw field onto connections.

        Keeps modes +-1, then the traceless anti-Hermitian part; use
        ``is_connection_residual`` first to see what is discarded.
        """
        a1 = 0.5 * (f.mode(1) - algebra.adjoint(f.mode(-1)))
        a1 = a1 - 0.5 * algebra.trace(a1)[..., None, None] * algebra.IDENTITY
        return cls.from_coefficients(f.metric, a1)

    @property
    def a1(self) -> np.ndarray:
        return self.coeffs[2]

    @property
    def am1(self) -> np.ndarray:
        return self.coeffs[0]


@dataclass(frozen=True, eq=False)
class InvolutionField:
    """Base-point map g: M -> su(2) with g^2 = -Id."""

    metric: Metric
    g: np.ndarray
    kind = "involution"

    def __post_init__(self):
        g = np.array(self.g, dtype=complex)
        if g.shape != self.metric.grid.shape + (2, 2):
            raise ValueError(f"involution grid has shape {g.shape}")
        defect = float(np.max(algebra.fro(g @ g + algebra.IDENTITY)))
        if defect > 1e-10:
            raise NotAnInvolution(f"||g^2 + Id|| = {defect:.2e}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def from_projector(cls, metric: Metric, p: np.ndarray) -> "InvolutionField":
        return cls(metric, algebra.involution_from_projector(p))

    def projector(self) -> np.ndarray:
        return algebra.projector_from_involution(self.g)

    def complement(self) -> np.ndarray:
        return algebra.IDENTITY - self.projector()

    def as_field(self) -> ThetaField:
        return ThetaField(self.metric, self.g[None], 0, parity="even")
