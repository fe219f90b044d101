"""Line-bundle seeds, the degree-one factor built from an involution, the
Bäcklund step A -> A_F, and degree lowering by extraction of the top line.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import algebra
from .errors import (
    DegenerateChart,
    DegreeNotLowered,
    NotNormalized,
    PipelineResidual,
    RankDefect,
    SeedNotHolomorphic,
    TransparentError,
    VanishingSection,
)
from .operators import (
    connection_from_u,
    eta_minus,
    eta_plus,
    f_from_u,
    is_connection_residual,
    mypde_residual,
    norm,
    quadrature_weights,
    transport_pde_residual,
)
from .thetafield import (
    Connection,
    InvolutionField,
    Metric,
    ThetaField,
    TorusGrid,
    check_same_metric,
    degree_of,
    j_symmetry_defect,
    multiply,
    parity_of,
)
from .weierstrass import weierstrass_chart


@dataclass(frozen=True)
class Gates:
    """Pass/fail thresholds shared by the pipeline and the CLI."""

    transport: float = 1e-7
    connection: float = 1e-7
    pde: float = 1e-7
    seed: float = 1e-6
    tail: float = 1e-8
    holonomy: float = 1e-5
    rank: float = 1e-8
    vanishing: float = 1e-8


DEFAULT_GATES = Gates()


class WitnessMismatch(TransparentError):
    """The two holomorphicity residuals disagree on small versus large."""


# ------------------------------------------------------------------- seeds


@dataclass(frozen=True, eq=False)
class LineSeed:
    """A line subbundle L of M x C^2, held as its orthogonal projector field."""

    metric: Metric
    projector: np.ndarray
    provenance: str = "constant"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.projector, dtype=complex)
        if p.shape != self.metric.grid.shape + (2, 2):
            raise ValueError(f"projector grid has shape {p.shape}")
        # raises NotAProjector on failure
        algebra.involution_from_projector(p, tol=1e-10)
        p.setflags(write=False)
        object.__setattr__(self, "projector", p)

    @property
    def complement(self) -> np.ndarray:
        return algebra.IDENTITY - self.projector

    def involution(self) -> InvolutionField:
        return InvolutionField.from_projector(self.metric, self.projector)

    def as_field(self) -> ThetaField:
        return ThetaField(self.metric, self.projector[None], 0, parity="even")

    def orthogonal(self) -> "LineSeed":
        """The line U = L-perp = jL."""
        return LineSeed(self.metric, self.complement, self.provenance, dict(self.metadata))

    @classmethod
    def from_involution(cls, inv: InvolutionField, provenance: str = "constant", metadata=None) -> "LineSeed":
        return cls(inv.metric, inv.projector(), provenance, dict(metadata or {}))

    @classmethod
    def constant(cls, metric: Metric, vector=(1.0, 0.0)) -> "LineSeed":
        p = algebra.projector_from_vector(np.asarray(vector, dtype=complex))
        return cls(metric, np.broadcast_to(p, metric.grid.shape + (2, 2)), "constant")


def _as_metric(metric_or_grid) -> Metric:
    if isinstance(metric_or_grid, TorusGrid):
        return Metric(metric_or_grid)
    return metric_or_grid


def line_from_vectors(metric, f1, f2, provenance: str = "constant", metadata=None) -> LineSeed:
    """Line spanned by (f1, f2) pointwise, normalised in the larger-component chart."""
    metric = _as_metric(metric)
    f1 = np.broadcast_to(np.asarray(f1, dtype=complex), metric.grid.shape)
    f2 = np.broadcast_to(np.asarray(f2, dtype=complex), metric.grid.shape)
    a1, a2 = np.abs(f1), np.abs(f2)
    bad = ~(np.isfinite(f1) & np.isfinite(f2)) | (np.maximum(a1, a2) < 1e-300)
    if np.any(bad):
        raise DegenerateChart(f"{int(bad.sum())} grid points with no valid chart")
    first = a1 >= a2
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(
            first[..., None],
            np.stack([np.ones_like(f1), f2 / f1], axis=-1),
            np.stack([f1 / f2, np.ones_like(f2)], axis=-1),
        )
    return LineSeed(metric, algebra.projector_from_vector(v), provenance, dict(metadata or {}))


def line_from_meromorphic(metric, f: Callable, provenance: str = "weierstrass", metadata=None) -> LineSeed:
    """Line field of z -> [f1(z) : f2(z)] sampled at z = x + i y on the grid."""
    metric = _as_metric(metric)
    f1, f2 = f(metric.grid.z())
    return line_from_vectors(metric, f1, f2, provenance, metadata)


def weierstrass_seed(metric, scale: float | None = None, shift: complex = 0.0) -> LineSeed:
    """The line [wp(z - shift) : scale] over the unit square torus."""
    metric = _as_metric(metric)
    g = metric.grid
    if (g.Lx, g.Ly) != (1.0, 1.0):
        raise ValueError("the Weierstrass seed is defined for the unit square torus")
    meta = {"kind": "weierstrass", "scale": "e1" if scale is None else float(scale), "shift": [shift.real, shift.imag] if isinstance(shift, complex) else [float(shift), 0.0]}
    return line_from_meromorphic(metric, lambda z: weierstrass_chart(z, scale, shift), "weierstrass", meta)


# ----------------------------------------------------------- holomorphicity


def _grid_norm(metric: Metric, *coeff_grids: np.ndarray) -> float:
    w = quadrature_weights(metric)
    return float(np.sqrt(sum(np.sum(w * np.sum(np.abs(c) ** 2, axis=(-2, -1))) for c in coeff_grids)))


def dbar_A_grid(A: Connection, p: np.ndarray) -> np.ndarray:
    """Coefficient of e^{-i theta} in dbar_A p = eta_-(p) + [A_-1, p], pointwise products."""
    em = eta_minus(ThetaField(A.metric, np.asarray(p)[None], 0)).mode(-1)
    return em + A.am1 @ p - p @ A.am1


def line_residuals(A: Connection, seed: LineSeed) -> tuple[float, float]:
    """(r3, r1): norms of pi-perp dbar_A pi and of -*d_A g - (d_A g) g."""
    check_same_metric(A, seed)
    p = seed.projector
    r3 = _grid_norm(A.metric, seed.complement @ dbar_A_grid(A, p))

    g = algebra.involution_from_projector(p, tol=1e-10)
    gf = ThetaField(A.metric, g[None], 0)
    d_plus = eta_plus(gf).mode(1) + A.a1 @ g - g @ A.a1
    d_minus = eta_minus(gf).mode(-1) + A.am1 @ g - g @ A.am1
    # -* acts as +i on mode 1 and -i on mode -1
    r1 = _grid_norm(A.metric, 1j * d_plus - d_plus @ g, -1j * d_minus - d_minus @ g)
    return r3, r1


def holomorphic_line_residual(A: Connection, seed: LineSeed) -> float:
    """r3 = ||pi-perp dbar_A pi||, cross-checked against the involution form r1."""
    r3, r1 = line_residuals(A, seed)
    if r1 > 10 * r3 + 1e-10 or r3 > 10 * r1 + 1e-10:
        raise WitnessMismatch(f"r1={r1:.3e} and r3={r3:.3e} disagree")
    return r3


# ------------------------------------------------------------ degree-one a


@dataclass(frozen=True, eq=False)
class BacklundParams:
    """Sections alpha of Omega^{1,0} and beta of Omega^{1,0}(Hom(L, U)).

    Both are stored as their e^{i theta} coefficients: ``alpha`` a complex
    scalar grid, ``beta`` a Mat2 grid in pi-perp (.) pi block form.
    """

    alpha: np.ndarray | complex = 1.0
    beta: np.ndarray | None = None

    def arrays(self, metric: Metric) -> tuple[np.ndarray, np.ndarray]:
        shape = metric.grid.shape
        alpha = np.broadcast_to(np.asarray(self.alpha, dtype=complex), shape)
        if self.beta is None:
            beta = np.zeros(shape + (2, 2), dtype=complex)
        else:
            beta = np.broadcast_to(np.asarray(self.beta, dtype=complex), shape + (2, 2))
        return alpha, beta

    def normalized(self, seed: LineSeed) -> "BacklundParams":
        """Project beta to Hom(L, U) and rescale so |alpha|^2 + |beta|^2 = 1."""
        alpha, beta = self.arrays(seed.metric)
        beta = seed.complement @ beta @ seed.projector
        scale = np.sqrt(np.abs(alpha) ** 2 + np.sum(np.abs(beta) ** 2, axis=(-2, -1)))
        if np.any(scale < 1e-12):
            raise NotNormalized("alpha and beta vanish simultaneously")
        return BacklundParams(alpha / scale, beta / scale[..., None, None])

    def check(self, seed: LineSeed, tol: float = 1e-10) -> None:
        alpha, beta = self.arrays(seed.metric)
        block = float(np.max(algebra.fro(beta - seed.complement @ beta @ seed.projector)))
        unit = float(np.max(np.abs(np.abs(alpha) ** 2 + np.sum(np.abs(beta) ** 2, axis=(-2, -1)) - 1.0)))
        if block > tol or unit > tol:
            raise NotNormalized(f"|alpha|^2+|beta|^2-1 = {unit:.2e}, off-block beta = {block:.2e}")


def construct_a(seed: LineSeed, params: BacklundParams | None = None) -> ThetaField:
    """Degree-one a: SM -> SU(2) with a^{-1} V(a) = g, g having +i eigenline L.

    In an orthonormal frame (l, jl) adapted to L + U it is [[alpha, beta*], [-beta, conj(alpha)]];
    frame-free: a_1 = alpha pi - beta, a_-1 = conj(alpha) pi-perp + beta*.
    """
    params = params or BacklundParams()
    params.check(seed)
    alpha, beta = params.arrays(seed.metric)
    p, q = seed.projector, seed.complement
    a1 = alpha[..., None, None] * p - beta
    am1 = np.conj(alpha)[..., None, None] * q + algebra.adjoint(beta)
    c = np.stack([am1, np.zeros_like(a1), a1])
    return ThetaField(seed.metric, c, -1, parity="odd", unitary=True)


# ------------------------------------------------------------- the step


def pipeline_residuals(A: ThetaField, u: ThetaField, raw_connection: ThetaField | None = None) -> dict:
    """All certificates for a pair (A, u) with X(u) + A u = 0."""
    raw = connection_from_u(u) if raw_connection is None else raw_connection
    return {
        "transport": transport_pde_residual(A, u),
        "connection": is_connection_residual(raw),
        "pde": mypde_residual(f_from_u(u)),
        "j_symmetry": j_symmetry_defect(u),
        "degree": degree_of(u),
        "parity": parity_of(u),
    }


def _gate(exc, name: str, value: float, limit: float, detail: str = "") -> None:
    if not value <= limit:
        raise exc(name, value, limit, detail)


def backlund_transform(
    A: Connection,
    b: ThetaField,
    seed: LineSeed,
    params: BacklundParams | None = None,
    gates: Gates = DEFAULT_GATES,
) -> tuple[Connection, ThetaField]:
    """A_F = -X(a) a^{-1} + a A a^{-1}, returned with its solution u_F = a b."""
    check_same_metric(A, b, seed)
    _gate(PipelineResidual, "transport(A, b)", transport_pde_residual(A, b), gates.transport, "input pair")
    _gate(SeedNotHolomorphic, "holomorphic_line", holomorphic_line_residual(A, seed), gates.seed)
    a = construct_a(seed, params)
    u = multiply(a, b)
    raw = connection_from_u(u)
    _gate(PipelineResidual, "connection", is_connection_residual(raw), gates.connection)
    A_F = Connection.from_field(raw)
    _gate(PipelineResidual, "transport(A_F, u_F)", transport_pde_residual(A_F, u), gates.transport)
    if degree_of(u) > degree_of(b) + 1:
        raise PipelineResidual("degree", degree_of(u), degree_of(b) + 1)
    return A_F, u


# ------------------------------------------------------------ lowering


def _candidate_vectors() -> np.ndarray:
    r = 1 / np.sqrt(2)
    return np.array(
        [
            [1, 0],
            [0, 1],
            [r, r],
            [r, -r],
            [r, 1j * r],
            [r, -1j * r],
            [r, r * np.exp(0.25j * np.pi)],
            [r, r * np.exp(0.75j * np.pi)],
        ],
        dtype=complex,
    )


def extract_top_line(
    b: ThetaField,
    tol: float = 1e-8,
    A: Connection | None = None,
    gates: Gates = DEFAULT_GATES,
) -> LineSeed:
    """The line L spanned by the image of b_{-N}, N = degree(b)."""
    N = degree_of(b)
    if N < 1:
        raise ValueError("extract_top_line needs a field of degree >= 1")
    parity = parity_of(b)
    if parity not in ("even", "odd"):
        raise ValueError(f"extract_top_line needs an even or odd field, got {parity}")
    top = b.mode(-N)
    xis = _candidate_vectors()
    sections = np.einsum("...ab,kb->k...a", top, xis)
    floors = np.min(np.linalg.norm(sections, axis=-1), axis=(1, 2))
    best = int(np.argmax(floors))
    if floors[best] < tol:
        raise VanishingSection(f"every candidate section vanishes somewhere (max-min {floors[best]:.2e})")
    s = sections[best]
    p = algebra.projector_from_vector(s)
    rank_defect = np.linalg.norm(top - p @ top) / np.linalg.norm(top)
    if rank_defect > gates.rank:
        raise RankDefect(f"top coefficient is not pointwise rank one ({rank_defect:.2e})")
    seed = LineSeed(
        b.metric,
        p,
        "extracted",
        {"xi_index": best, "min_section": float(floors[best]), "degree": N, "rank_defect": float(rank_defect)},
    )
    if A is None:
        A = Connection.from_field(connection_from_u(b))
    _gate(SeedNotHolomorphic, "holomorphic_line(extracted)", holomorphic_line_residual(A, seed), gates.seed)
    return seed


def lower_degree(A: Connection, b: ThetaField, gates: Gates = DEFAULT_GATES) -> tuple[Connection, ThetaField]:
    """One Bäcklund step that kills the modes +-N of b; returns (A', b')."""
    check_same_metric(A, b)
    N = degree_of(b)
    if N < 1:
        raise ValueError("lower_degree needs a solution of degree >= 1")
    _gate(PipelineResidual, "transport(A, b)", transport_pde_residual(A, b), gates.transport, "input pair")
    seed = extract_top_line(b, gates.vanishing, A, gates)
    a = construct_a(seed)
    u = multiply(a, b)
    nb = norm(b)
    tail = ThetaField(
        b.metric, np.stack([u.mode(m) for m in (-N - 1, -N, N, N + 1)]), 0
    )
    _gate(DegreeNotLowered, "tail(+-N, +-(N+1))", norm(tail) / nb, gates.tail)
    flipped = {"even": "odd", "odd": "even"}.get(b.parity) if b.parity else None
    lowered = u.with_range(-(N - 1), N - 1).with_tags(unitary=True, parity=flipped)
    raw = connection_from_u(lowered)
    _gate(PipelineResidual, "connection", is_connection_residual(raw), gates.connection)
    return Connection.from_field(raw), lowered
