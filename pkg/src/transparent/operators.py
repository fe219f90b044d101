"""Mode-shifting operators on the unit tangent bundle and the residuals of
the transport equation X(u) + A u = 0 and of its vertical companion PDE.

In isothermal coordinates with metric exp(2 lambda)(dx^2 + dy^2), on a mode
``n`` coefficient ``h``::

    eta_-(h e^{in theta}) = e^{-lambda} (dbar h + n (dbar lambda) h) e^{i(n-1) theta}
    eta_+(h e^{in theta}) = e^{-lambda} (d h    - n (d lambda)    h) e^{i(n+1) theta}

which are the product-rule expansions of e^{-(1+n)lambda} dbar(h e^{n lambda})
and e^{(n-1)lambda} d(h e^{-n lambda}).  X = eta_+ + eta_-, H = i(eta_+ - eta_-),
V multiplies mode m by i m.
"""
from __future__ import annotations

import numpy as np

from . import algebra
from .errors import NotAConnection, NotMode0, NotUnitary
from .thetafield import (
    Connection,
    Metric,
    ThetaField,
    check_same_metric,
    dbar,
    dhol,
    multiply,
    multiply_grid,
)

THETA_WEIGHT = 2 * np.pi


# ------------------------------------------------------------ inner product


def quadrature_weights(metric: Metric) -> np.ndarray:
    """Sasaki volume weight per grid point for one theta mode pairing."""
    return THETA_WEIGHT * metric.weights


def inner(u: ThetaField, v: ThetaField) -> complex:
    """<u, v> = integral over SM of trace(u v*)."""
    check_same_metric(u, v)
    w = quadrature_weights(u.metric)
    total = 0.0 + 0.0j
    for m in range(max(u.mode_min, v.mode_min), min(u.mode_max, v.mode_max) + 1):
        total += np.sum(w * np.einsum("...ab,...ab->...", u.mode(m), np.conj(v.mode(m))))
    return complex(total)


def norm(u: ThetaField) -> float:
    w = quadrature_weights(u.metric)
    return float(np.sqrt(np.sum(w * np.sum(np.abs(u.coeffs) ** 2, axis=(0, 3, 4)))))


# ------------------------------------------------------------------- frame


def vertical(f: ThetaField) -> ThetaField:
    m = np.arange(f.mode_min, f.mode_max + 1).reshape(-1, 1, 1, 1, 1)
    return ThetaField(f.metric, 1j * m * f.coeffs, f.mode_min)


def _mode_column(f: ThetaField) -> np.ndarray:
    return np.arange(f.mode_min, f.mode_max + 1).reshape(-1, 1, 1, 1, 1)


def eta_minus(f: ThetaField) -> ThetaField:
    metric = f.metric
    out = dbar(f.coeffs, metric.grid)
    if not metric.is_flat:
        n = _mode_column(f)
        out = np.exp(-metric.lam)[..., None, None] * (out + n * metric.dbar_lam[..., None, None] * f.coeffs)
    return ThetaField(metric, out, f.mode_min - 1)


def eta_plus(f: ThetaField) -> ThetaField:
    metric = f.metric
    out = dhol(f.coeffs, metric.grid)
    if not metric.is_flat:
        n = _mode_column(f)
        out = np.exp(-metric.lam)[..., None, None] * (out - n * metric.d_lam[..., None, None] * f.coeffs)
    return ThetaField(metric, out, f.mode_min + 1)


def geodesic(f: ThetaField) -> ThetaField:
    """X = eta_+ + eta_-."""
    return eta_plus(f) + eta_minus(f)


def horizontal(f: ThetaField) -> ThetaField:
    """H = i(eta_+ - eta_-)."""
    return 1j * (eta_plus(f) - eta_minus(f))


def _left_multiply(a: np.ndarray, f: ThetaField, shift: int) -> ThetaField:
    grid = f.grid
    c = np.stack([multiply_grid(a, f.mode(m), grid) for m in f.modes])
    return ThetaField(f.metric, c, f.mode_min + shift)


def mu_plus(A: Connection, f: ThetaField) -> ThetaField:
    """eta_+ twisted by left multiplication with the mode +1 part of A."""
    check_same_metric(A, f)
    return eta_plus(f) + _left_multiply(A.a1, f, +1)


def mu_minus(A: Connection, f: ThetaField) -> ThetaField:
    check_same_metric(A, f)
    return eta_minus(f) + _left_multiply(A.am1, f, -1)


# -------------------------------------------------------------- connections


def connection_from_ab(metric: Metric, a, b) -> Connection:
    """A = a cos(theta) + b sin(theta) with a, b su(2)-valued on the base."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return Connection.from_coefficients(metric, 0.5 * (a - 1j * b), 0.5 * (a + 1j * b))


def decompose_connection(samples, metric: Metric | None = None, tol: float = 1e-10) -> Connection:
    """Split theta-samples (or a ThetaField) of a would-be connection into A_1 + A_-1.

    Samples are taken at theta_k = 2 pi k / K, shape (K, ny, nx, 2, 2).
    """
    if isinstance(samples, ThetaField):
        f = samples
    else:
        samples = np.asarray(samples, dtype=complex)
        K = samples.shape[0]
        half = (K - 1) // 2
        f = ThetaField.from_samples(metric, samples, -half, half)
    total = norm(f)
    c = f.coeffs.copy()
    for m in (-1, 1):
        if f.mode_min <= m <= f.mode_max:
            c[m - f.mode_min] = 0
    stray = norm(ThetaField(f.metric, c, f.mode_min))
    if stray > tol * max(total, 1.0):
        raise NotAConnection(f"energy {stray:.2e} outside modes +-1 (V^2 A != -A)")
    a1, am1 = f.mode(1), f.mode(-1)
    skew = float(np.max(algebra.fro(am1 + algebra.adjoint(a1))))
    if skew > tol * max(total, 1.0):
        raise NotAConnection(f"samples are not anti-Hermitian ({skew:.2e})")
    return Connection.from_field(f)


def hodge_star(A: Connection) -> Connection:
    """Orientation fixed by -*A = V(A): *A_1 = -i A_1, *A_-1 = +i A_-1."""
    return Connection.from_coefficients(A.metric, -1j * A.a1, 1j * A.am1)


def _require_mode0(g: ThetaField) -> np.ndarray:
    if g.mode_min != 0 or g.mode_max != 0:
        stray = {m: e for m, e in g.mode_energies().items() if m != 0 and e > 0}
        if stray:
            raise NotMode0(f"field carries theta modes {sorted(stray)}")
    return g.mode(0)


def dbar_A(A: Connection, g: ThetaField) -> ThetaField:
    """Twisted Cauchy-Riemann operator dbar + [A_-1, .] on a base map g (mode -1 output)."""
    check_same_metric(A, g)
    g0 = _require_mode0(g)
    grid = g.grid
    base = eta_minus(ThetaField(g.metric, g0[None], 0))
    comm = multiply_grid(A.am1, g0, grid) - multiply_grid(g0, A.am1, grid)
    return base + ThetaField(g.metric, comm[None], -1)


def covariant_derivative(A: Connection, g: ThetaField) -> ThetaField:
    """d_A g = X(g) + [A, g] for a base map g, as a modes +-1 field."""
    check_same_metric(A, g)
    g0 = _require_mode0(g)
    gf = ThetaField(g.metric, g0[None], 0)
    comm = multiply(A, gf) - multiply(gf, A)
    return geodesic(gf) + comm


# ------------------------------------------------------ correspondence maps


def _require_unitary(u: ThetaField) -> None:
    if not u.unitary:
        raise NotUnitary("expected a unitary-tagged field")


def f_from_u(u: ThetaField) -> ThetaField:
    """f = u^{-1} V(u)."""
    _require_unitary(u)
    return multiply(u.adjoint(), vertical(u))


def connection_from_u(u: ThetaField) -> ThetaField:
    """Raw A = -X(u) u^{-1}; a genuine connection only when f = u^{-1}V(u) solves the PDE."""
    _require_unitary(u)
    return -multiply(geodesic(u), u.adjoint())


def is_connection_residual(Araw: ThetaField) -> float:
    """||V^2 A + A|| / ||A||: the energy a field carries outside modes +-1."""
    total = norm(Araw)
    if total == 0.0:
        return 0.0
    return norm(vertical(vertical(Araw)) + Araw) / total


def mypde_residual(f: ThetaField) -> float:
    """||H(f) + V X(f) - [X(f), f]|| / (1 + ||f||^2)."""
    Xf = geodesic(f)
    r = horizontal(f) + vertical(Xf) - (multiply(Xf, f) - multiply(f, Xf))
    return norm(r) / (1.0 + norm(f) ** 2)


def transport_residual_field(A: ThetaField, u: ThetaField) -> ThetaField:
    check_same_metric(A, u)
    return geodesic(u) + multiply(A, u)


def transport_pde_residual(A: ThetaField, u: ThetaField) -> float:
    """||X(u) + A u|| / ||u||."""
    r = transport_residual_field(A, u)
    nu = norm(u)
    return norm(r) / nu if nu else norm(r)


def transport_pde_modewise(A: ThetaField, u: ThetaField) -> dict[int, float]:
    """Per-mode norms of X(u) + A u, i.e. of mu_+(u_{k-1}) + mu_-(u_{k+1})."""
    r = transport_residual_field(A, u)
    w = quadrature_weights(u.metric)
    return {
        m: float(np.sqrt(np.sum(w * np.sum(np.abs(r.mode(m)) ** 2, axis=(-2, -1))))) for m in r.modes
    }


def gauge_transform(A: Connection, w: ThetaField) -> Connection:
    """A -> w A w* - X(w) w*, paired with solutions u -> w u."""
    check_same_metric(A, w)
    _require_mode0(w)
    _require_unitary(w)
    w0 = ThetaField(w.metric, w.mode(0)[None], 0)
    wa = w0.adjoint()
    raw = multiply(multiply(w0, A), wa) - multiply(geodesic(w0), wa)
    return Connection.from_field(raw)
