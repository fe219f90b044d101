"""Search for a dbar_A-holomorphic line subbundle by minimising

    E(pi) = || pi-perp dbar_A pi ||^2

over projector fields with projected, Sobolev-preconditioned gradient
descent and an Armijo line search.  Multi-start from random smooth lines.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .backlund import LineSeed, dbar_A_grid
from .errors import NoLineFound
from .operators import eta_plus, quadrature_weights
from .thetafield import Connection, Metric, ThetaField
from .weierstrass import half_period_value, weierstrass_chart

SUCCESS_RESIDUAL = 1e-5


def energy(A: Connection, P: np.ndarray) -> float:
    w = quadrature_weights(A.metric)
    R = (algebra.IDENTITY - P) @ dbar_A_grid(A, P)
    return float(np.sum(w * np.sum(np.abs(R) ** 2, axis=(-2, -1))))


def energy_and_gradient(A: Connection, P: np.ndarray) -> tuple[float, np.ndarray]:
    """E and its gradient G with dE = Re <G, dP> in the quadrature inner product.

    Valid for arbitrary matrix fields P, not only projectors.
    """
    w = quadrature_weights(A.metric)
    D = dbar_A_grid(A, P)
    Q = algebra.IDENTITY - P
    R = Q @ D
    E = float(np.sum(w * np.sum(np.abs(R) ** 2, axis=(-2, -1))))
    Y = algebra.adjoint(Q) @ R
    # adjoint of P -> eta_-(P) + [M, P] is Y -> -eta_+(Y) + [M*, Y]
    Ms = algebra.adjoint(A.am1)
    adj = -eta_plus(ThetaField(A.metric, Y[None], -1)).mode(0) + Ms @ Y - Y @ Ms
    G = 2.0 * (-R @ algebra.adjoint(D) + adj)
    return E, G


def _tangent(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Project onto the tangent space of the projector manifold at P."""
    H = 0.5 * (X + algebra.adjoint(X))
    Q = algebra.IDENTITY - P
    return P @ H @ Q + Q @ H @ P


def _retract(X: np.ndarray) -> np.ndarray:
    """Nearest rank-one orthogonal projector (top eigenvector) pointwise."""
    H = 0.5 * (X + algebra.adjoint(X))
    _, vecs = np.linalg.eigh(H)
    return algebra.projector_from_vector(vecs[..., :, 1])


def _precondition(metric: Metric, X: np.ndarray, shift: float = 1.0) -> np.ndarray:
    """Inverse of shift + |k|^2 / 4, the symbol of dbar* dbar plus a zero-order
    term matching the size of the connection."""
    g = metric.grid
    k2 = g.kx[None, :] ** 2 + g.ky[:, None] ** 2
    F = np.fft.fft2(X, axes=(0, 1))
    F /= (shift + 0.25 * k2)[..., None, None]
    return np.fft.ifft2(F, axes=(0, 1))


START_CLASSES = ("flat", "elliptic-perp", "elliptic")


def _start_vector(metric: Metric, rng: np.random.Generator, start: str) -> np.ndarray:
    g = metric.grid
    if start == "flat":
        xi = rng.normal(size=2) + 1j * rng.normal(size=2)
        return np.broadcast_to(xi / np.linalg.norm(xi), g.shape + (2,))
    if (g.Lx, g.Ly) != (1.0, 1.0):
        raise ValueError("elliptic starts need the unit square torus")
    shift = complex(rng.uniform(), rng.uniform())
    scale = half_period_value() * np.exp(rng.normal() + 2j * np.pi * rng.uniform())
    f1, f2 = weierstrass_chart(g.z(), scale, shift)
    v = np.stack([f1, f2], axis=-1)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    if start == "elliptic-perp":
        # j maps a line to its orthogonal complement
        v = np.stack([-np.conj(v[..., 1]), np.conj(v[..., 0])], axis=-1)
    return v


def random_line(
    metric: Metric,
    rng: np.random.Generator,
    start: str = "flat",
    amplitude: float = 0.5,
    max_k: int = 2,
) -> np.ndarray:
    """Projector onto v + w, v a unit section and w band-limited noise with
    max |w| = amplitude < 1, so the topological class of v is kept.

    ``start`` picks v: a random constant ("flat", degree zero), the line of a
    randomly shifted and scaled elliptic function ("elliptic") or its
    orthogonal complement ("elliptic-perp").  Holomorphic lines of nonzero
    degree cannot be reached from degree-zero starts.
    """
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    g = metric.grid
    X, Y = g.mesh()
    v = _start_vector(metric, rng, start)
    pert = np.zeros(g.shape + (2,), dtype=complex)
    for kx in range(-max_k, max_k + 1):
        for ky in range(-max_k, max_k + 1):
            if kx == ky == 0:
                continue
            c = (rng.normal(size=2) + 1j * rng.normal(size=2)) / (kx * kx + ky * ky)
            phase = np.exp(2j * np.pi * (kx * X / g.Lx + ky * Y / g.Ly))
            pert += phase[..., None] * c
    v = v + pert * (amplitude / np.max(np.linalg.norm(pert, axis=-1)))
    return algebra.projector_from_vector(v)


@dataclass
class LineSearchResult:
    seed: LineSeed
    residual: float
    success: bool
    curves: list[list[float]] = field(default_factory=list)
    best_attempt: int = 0

    def curve_csv(self, attempt: int | None = None) -> str:
        curve = self.curves[self.best_attempt if attempt is None else attempt]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy"])
        for i, e in enumerate(curve):
            w.writerow([i, f"{e:.17g}"])
        return buf.getvalue()


def _line_search(A, P, T, E, slope, step):
    """Armijo backtracking; each trial is refined by the minimiser of the
    parabola through E, the slope and the trial energy."""
    while step > 1e-14:
        Pt = _retract(P - step * T)
        Et = energy(A, Pt)
        curv = Et - E + slope * step
        if curv > 0:
            sq = slope * step * step / (2 * curv)
            if 1e-3 * step < sq < 1e3 * step and abs(sq - step) > 1e-3 * step:
                Pq = _retract(P - sq * T)
                Eq = energy(A, Pq)
                if Eq < Et:
                    Pt, Et, step = Pq, Eq, sq
        if Et <= E - 1e-4 * step * slope:
            return Pt, Et, step
        step *= 0.25
    return None, E, step


STALL_WINDOW = 100
STALL_RATIO = 0.99


def _descend(A: Connection, P: np.ndarray, iterations: int, target: float) -> tuple[np.ndarray, list[float]]:
    metric = A.metric
    w = quadrature_weights(metric)
    shift = 1.0 + float(np.mean(np.sum(np.abs(A.am1) ** 2, axis=(-2, -1))))
    step = 1.0
    E, G = energy_and_gradient(A, P)
    curve = [E]
    for it in range(iterations):
        if np.sqrt(E) <= target:
            break
        if it >= STALL_WINDOW and E > STALL_RATIO * curve[it - STALL_WINDOW]:
            break
        Gt = _tangent(P, G)
        T = _tangent(P, _precondition(metric, Gt, shift))
        slope = float(np.sum(w * np.real(np.sum(Gt * np.conj(T), axis=(-2, -1)))))
        if slope <= 0:
            T, slope = Gt, float(np.sum(w * np.sum(np.abs(Gt) ** 2, axis=(-2, -1))))
        Pn, _, step = _line_search(A, P, T, E, slope, step)
        if Pn is None:
            break
        P = Pn
        E, G = energy_and_gradient(A, P)
        curve.append(E)
    return P, curve


def search_holomorphic_line(
    A: Connection,
    attempts: int = 4,
    seed: int = 0,
    iterations: int = 2000,
    target: float = 1e-7,
    success_residual: float = SUCCESS_RESIDUAL,
    stop_on_success: bool = True,
) -> LineSearchResult:
    """Multi-start descent.  Attempt k starts in class START_CLASSES[k % 3]
    (flat only off the unit square torus); every attempt runs until the
    residual reaches ``target``, the energy stalls, or ``iterations`` is spent."""
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    rng = np.random.default_rng(seed)
    g = A.metric.grid
    classes = START_CLASSES if (g.Lx, g.Ly) == (1.0, 1.0) else ("flat",)
    best = None
    curves = []
    for k in range(attempts):
        start = classes[k % len(classes)]
        P, curve = _descend(A, random_line(A.metric, rng, start), iterations, target)
        curves.append(curve)
        if best is None or curve[-1] < best[1]:
            best = (P, curve[-1], k)
        if np.sqrt(curve[-1]) <= (success_residual if stop_on_success else target):
            break
    P, E, k = best
    residual = float(np.sqrt(max(E, 0.0)))
    meta = {"residual": residual, "attempt": k, "start": classes[k % len(classes)], "rng_seed": seed}
    line = LineSeed(A.metric, P, "solver", meta)
    return LineSearchResult(line, residual, residual <= success_residual, curves, k)


def find_holomorphic_line(A: Connection, attempts: int = 4, seed: int = 0, **kwargs) -> LineSeed:
    """Best-effort holomorphic line; raises NoLineFound with the best attempt attached."""
    result = search_holomorphic_line(A, attempts, seed, **kwargs)
    if not result.success:
        raise NoLineFound(f"best residual {result.residual:.3e} after {attempts} attempts", result)
    return result.seed
