"""Closed geodesics of the flat torus and the parallel-transport cocycle

    dC/dt = -A(phi_t(x, v)) C,   C(0) = Id,

integrated with classical RK4 along the straight line x + t v.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import algebra
from .thetafield import ThetaField, TorusGrid, evaluate_points

STEP_DENSITY = 256  # default RK4 steps per unit length
CSV_COLUMNS = ("loop_p", "loop_q", "x0", "y0", "length", "steps", "defect_fro", "unitarity_drift")


@dataclass(frozen=True)
class GeodesicLoop:
    x0: float
    y0: float
    p: int
    q: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if (self.p, self.q) == (0, 0) or math.gcd(abs(self.p), abs(self.q)) != 1:
            raise ValueError(f"direction ({self.p}, {self.q}) must be coprime and nonzero")

    @property
    def length(self) -> float:
        return math.hypot(self.p * self.Lx, self.q * self.Ly)

    @property
    def angle(self) -> float:
        return math.atan2(self.q * self.Ly, self.p * self.Lx)

    @property
    def direction(self) -> tuple[float, float]:
        return math.cos(self.angle), math.sin(self.angle)

    def point(self, t):
        cx, cy = self.direction
        t = np.asarray(t, dtype=float)
        return self.x0 + t * cx, self.y0 + t * cy

    def shifted(self, t: float) -> "GeodesicLoop":
        """The same loop started at phi_t(x0, v)."""
        x, y = self.point(t)
        return GeodesicLoop(float(x) % self.Lx, float(y) % self.Ly, self.p, self.q, self.Lx, self.Ly)


@dataclass(frozen=True)
class CocycleResult:
    C: np.ndarray
    loop: GeodesicLoop
    t: float
    steps: int
    error_estimate: float

    @property
    def unitarity_drift(self) -> float:
        return algebra.unitarity_defect(self.C)

    @property
    def defect(self) -> float:
        return float(algebra.fro(self.C - algebra.IDENTITY))


def enumerate_loops(max_pq: int, samples_per_direction: int = 1, seed: int = 0, grid: TorusGrid | None = None) -> list[GeodesicLoop]:
    """All coprime directions with |p|, |q| <= max_pq (p >= 0), each at seeded random base points."""
    if max_pq < 1:
        raise ValueError("max_pq must be >= 1")
    Lx, Ly = (grid.Lx, grid.Ly) if grid is not None else (1.0, 1.0)
    dirs = []
    for p in range(0, max_pq + 1):
        for q in range(-max_pq, max_pq + 1):
            if (p, q) == (0, 0) or math.gcd(p, abs(q)) != 1:
                continue
            if p == 0 and q < 0:
                continue
            dirs.append((p, q))
    rng = np.random.default_rng(seed)
    loops = []
    for p, q in dirs:
        for _ in range(samples_per_direction):
            x0, y0 = rng.uniform(0, Lx), rng.uniform(0, Ly)
            loops.append(GeodesicLoop(float(x0), float(y0), p, q, Lx, Ly))
    return loops


def _connection_along(A: ThetaField, loop: GeodesicLoop, times: np.ndarray) -> np.ndarray:
    x, y = loop.point(times)
    return evaluate_points(A, x, y, np.full_like(times, loop.angle))


def _rk4(Avals: np.ndarray, h: float, stride: int) -> np.ndarray:
    """RK4 for C' = -A(t) C on the half-step samples Avals[0::stride // 2]."""
    C = algebra.IDENTITY.copy()
    half = stride // 2
    n = (len(Avals) - 1) // stride
    for k in range(n):
        a0 = Avals[k * stride]
        am = Avals[k * stride + half]
        a1 = Avals[(k + 1) * stride]
        k1 = -a0 @ C
        k2 = -am @ (C + 0.5 * h * k1)
        k3 = -am @ (C + 0.5 * h * k2)
        k4 = -a1 @ (C + h * k3)
        C = C + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return C


def parallel_cocycle(A: ThetaField, loop: GeodesicLoop, t: float | None = None, steps: int | None = None) -> CocycleResult:
    """C(x0, v, t) by RK4 with ``steps`` uniform steps (default STEP_DENSITY
    per unit length, at least 256); the error estimate compares against
    ``steps // 2`` steps (Richardson, order 4)."""
    t = loop.length if t is None else float(t)
    if steps is None:
        steps = max(256, int(math.ceil(STEP_DENSITY * abs(t))))
    if steps < 16:
        raise ValueError("steps must be >= 16")
    steps += steps % 2
    h = t / steps
    times = np.linspace(0.0, t, 2 * steps + 1)
    Avals = _connection_along(A, loop, times)
    C = _rk4(Avals, h, 2)
    C_coarse = _rk4(Avals, 2 * h, 4)
    err = float(algebra.fro(C - C_coarse)) / 15.0
    return CocycleResult(C, loop, t, steps, err)


def cocycle_from_u(u: ThetaField, loop: GeodesicLoop, t: float) -> np.ndarray:
    """u(phi_t(x, v)) u(x, v)^{-1} for a unitary solution u."""
    from .errors import NotUnitary

    if not u.unitary:
        raise NotUnitary("cocycle_from_u needs a unitary-tagged field")
    x, y = loop.point(np.array([t, 0.0]))
    vals = evaluate_points(u, x, y, np.full(2, loop.angle))
    return vals[0] @ algebra.adjoint(vals[1])


@dataclass
class HolonomyReport:
    rows: list[dict]

    @property
    def defects(self) -> np.ndarray:
        return np.array([r["defect_fro"] for r in self.rows])

    @property
    def max_defect(self) -> float:
        return float(self.defects.max())

    @property
    def mean_defect(self) -> float:
        return float(self.defects.mean())

    @property
    def worst(self) -> dict:
        return self.rows[int(np.argmax(self.defects))]

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (f"{r[k]:.17g}" if isinstance(r[k], float) else r[k]) for k in CSV_COLUMNS})
        return buf.getvalue() if fh is None else ""


def holonomy_defect(
    A: ThetaField,
    loops: list[GeodesicLoop],
    rel_tol: float = 1e-9,
    min_steps: int = 64,
    max_steps: int = 1 << 15,
) -> HolonomyReport:
    """||C(L) - Id||_F per loop, doubling the step count until the
    truncation estimate drops below rel_tol * L."""
    if not loops:
        raise ValueError("no loops given")
    rows = []
    for loop in loops:
        steps = max(min_steps, int(math.ceil(STEP_DENSITY * loop.length)))
        while True:
            res = parallel_cocycle(A, loop, steps=steps)
            if res.error_estimate <= rel_tol * loop.length or steps >= max_steps:
                break
            steps *= 2
        rows.append(
            {
                "loop_p": loop.p,
                "loop_q": loop.q,
                "x0": loop.x0,
                "y0": loop.y0,
                "length": loop.length,
                "steps": res.steps,
                "defect_fro": res.defect,
                "unitarity_drift": res.unitarity_drift,
            }
        )
    return HolonomyReport(rows)
