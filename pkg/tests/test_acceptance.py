"""Acceptance suite at desk scale (64 x 64 grid).

Each test prints one line ``criterion N PASS|FAIL ...`` and the lines are
repeated in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import bump, random_connection, random_field, record_criterion
from oracles import frame_fields
from transparent import algebra
from transparent.backlund import (
    LineSeed,
    backlund_transform,
    construct_a,
    line_from_meromorphic,
    line_from_vectors,
    line_residuals,
    lower_degree,
    weierstrass_seed,
)
from transparent.linesearch import (
    energy,
    energy_and_gradient,
    find_holomorphic_line,
    random_line,
    search_holomorphic_line,
)
from transparent.operators import (
    connection_from_u,
    eta_minus,
    eta_plus,
    f_from_u,
    inner,
    is_connection_residual,
    mu_minus,
    mu_plus,
    mypde_residual,
    norm,
    quadrature_weights,
    transport_pde_residual,
)
from transparent.thetafield import Connection, Metric, ThetaField, TorusGrid, j_symmetry_defect, multiply
from transparent.transport import cocycle_from_u, enumerate_loops, holonomy_defect, parallel_cocycle
from transparent.weierstrass import eisenstein_invariants, weierstrass_chart, weierstrass_p

N = 64


@pytest.fixture(scope="module")
def curved64():
    grid = TorusGrid.square(N)
    return Metric(grid, bump(grid))


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_criterion_01_operator_oracle(curved64):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    errors = []
    for metric in (Metric.flat(N), curved64):
        u = random_field(metric, rng, -8, 8, kmax=4)
        K = 32
        X, H = frame_fields(u.samples(K), metric.lam)
        errors.append(rel(eta_minus(u).samples(K), 0.5 * (X + 1j * H)))
        errors.append(rel(eta_plus(u).samples(K), 0.5 * (X - 1j * H)))
    elapsed = time.perf_counter() - start
    worst = max(errors)
    ok = worst <= 1e-8 and elapsed < 5
    record_criterion(1, "eta operators vs coordinate frame", ok, f"max rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_adjointness(curved64):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_eta = worst_mu = 0.0
    for _ in range(20):
        u = random_field(curved64, rng, -2, 1, kmax=3)
        w = random_field(curved64, rng, -1, 2, kmax=3)
        A = random_connection(curved64, rng, kmax=3)
        scale = norm(u) * norm(w)
        worst_eta = max(worst_eta, abs(inner(eta_plus(u), w) + inner(u, eta_minus(w))) / scale)
        worst_mu = max(worst_mu, abs(inner(mu_plus(A, u), w) + inner(u, mu_minus(A, w))) / scale)
    elapsed = time.perf_counter() - start
    ok = max(worst_eta, worst_mu) <= 1e-8 and elapsed < 5
    record_criterion(2, "adjointness", ok, f"eta {worst_eta:.2e}, mu {worst_mu:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_backlund_step():
    start = time.perf_counter()
    metric = Metric.flat(N)
    A, u = backlund_transform(Connection.zero(metric), ThetaField.identity(metric), weierstrass_seed(metric))
    t = transport_pde_residual(A, u)
    c = is_connection_residual(connection_from_u(u))
    p = mypde_residual(f_from_u(u))
    j = j_symmetry_defect(u)
    elapsed = time.perf_counter() - start
    ok = t <= 1e-7 and c <= 1e-7 and p <= 1e-7 and j <= 1e-10 and elapsed < 20
    record_criterion(3, "Weierstrass-seeded step", ok, f"transport {t:.1e}, connection {c:.1e}, pde {p:.1e}, j {j:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_transparency(pipeline64):
    A = pipeline64[0]
    start = time.perf_counter()
    loops = enumerate_loops(3, samples_per_direction=2, seed=0)
    report = holonomy_defect(A, loops)
    # order of accuracy measured part-way along each loop; over a whole
    # period the error of a smooth periodic integrand cancels beyond h^4.
    # Base resolution 128 steps per unit length, then two halvings.
    ratios = []
    for loop in loops:
        t = loop.length / 3
        n0 = 2 * math.ceil(64 * t)
        C = [parallel_cocycle(A, loop, t, steps=k * n0).C for k in (1, 2, 4)]
        d1, d2 = algebra.fro(C[0] - C[1]), algebra.fro(C[1] - C[2])
        if d1 > 1e-11:
            ratios.append(d1 / d2)
    elapsed = time.perf_counter() - start
    ratios = np.array(ratios)
    ok = (
        len(loops) >= 20
        and report.max_defect <= 1e-6
        and len(ratios) >= 20
        and np.all((ratios >= 12) & (ratios <= 20))
        and elapsed < 60
    )
    record_criterion(
        4,
        "holonomy over closed geodesics",
        ok,
        f"{len(loops)} loops, max defect {report.max_defect:.1e}, RK4 ratio {ratios.min():.1f}..{ratios.max():.1f} "
        f"over {len(ratios)} non-trivial loops, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_05_cocycle_vs_coboundary(pipeline64):
    A, u, _ = pipeline64
    start = time.perf_counter()
    loops = enumerate_loops(3, samples_per_direction=1, seed=5)[:10]
    worst = 0.0
    for loop in loops:
        for t in (loop.length / 4, loop.length / 2, loop.length):
            C = parallel_cocycle(A, loop, t).C
            worst = max(worst, float(algebra.fro(C - cocycle_from_u(u, loop, t))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 20
    record_criterion(5, "cocycle = coboundary", ok, f"max diff {worst:.1e} on {len(loops)} loops, {elapsed:.1f}s")
    assert ok


def test_criterion_06_round_trip(pipeline64):
    A, u, _ = pipeline64
    start = time.perf_counter()
    A2, b2 = lower_degree(A, u)
    du = norm(b2 - ThetaField.identity(A.metric)) / norm(ThetaField.identity(A.metric))
    dA = float(np.max(np.abs(A2.coeffs)))
    elapsed = time.perf_counter() - start
    ok = du <= 1e-10 and dA <= 1e-10 and elapsed < 10
    record_criterion(6, "raise then lower", ok, f"|u'-Id| {du:.1e}, |A'| {dA:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_07_equivalence_witness(pipeline64):
    A_F, _, seed = pipeline64
    metric = A_F.metric
    A0 = Connection.zero(metric)
    start = time.perf_counter()
    X, _ = metric.grid.mesh()
    holomorphic = [
        (A0, LineSeed.constant(metric, (1.0, 0.0))),
        (A0, LineSeed.constant(metric, (0.3 + 0.1j, 1.0))),
        (A0, weierstrass_seed(metric)),
        (A0, weierstrass_seed(metric, shift=0.3 + 0.2j)),
        (A_F, seed.orthogonal()),
    ]
    not_holomorphic = [
        (A0, line_from_vectors(metric, 1.0, 0.5 * np.sin(2 * np.pi * X))),
        (A0, line_from_vectors(metric, 1.0, 0.3 * np.exp(2j * np.pi * X))),
        (A0, LineSeed(metric, random_line(metric, np.random.default_rng(7)))),
        (A0, line_from_meromorphic(metric, lambda z: tuple(np.conj(f) for f in weierstrass_chart(z)))),
        (A_F, seed),
    ]
    small = [line_residuals(A, s) for A, s in holomorphic]
    large = [line_residuals(A, s) for A, s in not_holomorphic]
    elapsed = time.perf_counter() - start
    ok_small = all(r3 <= 1e-6 and r1 <= 1e-6 for r3, r1 in small)
    ok_large = all(r3 >= 1e-2 and r1 >= 1e-2 for r3, r1 in large)
    ok = ok_small and ok_large and elapsed < 10
    record_criterion(
        7,
        "r1/r3 witness",
        ok,
        f"holomorphic max {max(max(r) for r in small):.1e}, non-holomorphic min {min(min(r) for r in large):.1e}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_08_weierstrass():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    z = rng.uniform(0.02, 0.98, 50) + 1j * rng.uniform(0.02, 0.98, 50)
    p, dp = weierstrass_p(z)
    periodic = max(np.max(np.abs(weierstrass_p(z + 1)[0] - p)), np.max(np.abs(weierstrass_p(z + 1j)[0] - p)))
    even = np.max(np.abs(weierstrass_p(-z)[0] - p))
    g2, g3 = eisenstein_invariants(200)
    de = np.max(np.abs(dp**2 - 4 * p**3 + g2 * p + g3) / (1 + np.abs(p) ** 3))
    elapsed = time.perf_counter() - start
    ok = periodic <= 1e-8 and even <= 1e-10 and de <= 1e-6 and elapsed < 10
    record_criterion(8, "Weierstrass layer", ok, f"periodicity {periodic:.1e}, evenness {even:.1e}, ODE {de:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_09_negative_controls():
    start = time.perf_counter()
    metric = Metric.flat(N)
    a1 = np.array([[0.6j, 0.25 - 0.1j], [-0.4, -0.6j]])
    a1 = a1 - 0.5 * np.trace(a1) * np.eye(2)
    A = Connection.from_coefficients(metric, a1)
    hol = holonomy_defect(A, enumerate_loops(3, 2, 0))
    # a unitary field that is not produced by the pipeline
    rng = np.random.default_rng(9)
    u = construct_a(LineSeed(metric, random_line(metric, rng)))
    s = algebra.random_su2_algebra(rng, (), 1.0)
    w = ThetaField(metric, np.broadcast_to(algebra.su2_exp(s), metric.grid.shape + (2, 2))[None], 0, unitary=True)
    u = multiply(w, u)
    residual = is_connection_residual(connection_from_u(u))
    elapsed = time.perf_counter() - start
    ok = hol.max_defect > 0.1 and residual > 0.01 and elapsed < 10
    record_criterion(9, "negative controls", ok, f"constant-A defect {hol.max_defect:.2f}, random-u connection residual {residual:.2f}, {elapsed:.1f}s")
    assert ok


def test_criterion_10_line_search(pipeline64):
    A_F = pipeline64[0]
    metric = A_F.metric
    zero = find_holomorphic_line(Connection.zero(metric), attempts=3, seed=0)
    zero_residual = zero.metadata["residual"]
    # analytic gradient against central differences
    rng = np.random.default_rng(10)
    P = random_line(metric, rng, "elliptic-perp")
    _, G = energy_and_gradient(A_F, P)
    w = quadrature_weights(metric)
    grad_err = 0.0
    for _ in range(3):
        d = rng.normal(size=P.shape) + 1j * rng.normal(size=P.shape)
        h = 1e-5
        fd = (energy(A_F, P + h * d) - energy(A_F, P - h * d)) / (2 * h)
        an = float(np.sum(w * np.real(np.sum(G * np.conj(d), axis=(-2, -1)))))
        grad_err = max(grad_err, abs(fd - an) / abs(an))
    # best effort on the degree-one connection
    raised = search_holomorphic_line(A_F, attempts=3, seed=0, iterations=600)
    curve = raised.curves[raised.best_attempt]
    conditional = "found" if raised.success else "not found (known limitation)"
    ok = zero_residual <= 1e-5 and grad_err <= 1e-5
    record_criterion(
        10,
        "holomorphic line search",
        ok,
        f"A=0 residual {zero_residual:.1e}, gradient rel err {grad_err:.1e}; degree-one connection: {conditional}, "
        f"residual {raised.residual:.1e} after {len(curve) - 1} iterations (energy {curve[0]:.1e} -> {curve[-1]:.1e})",
    )
    assert ok
