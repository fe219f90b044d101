import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import band_limited, random_connection, random_field
from oracles import frame_fields
from transparent import algebra
from transparent.errors import NotAConnection, NotMode0, NotUnitary
from transparent.operators import (
    connection_from_ab,
    connection_from_u,
    covariant_derivative,
    dbar_A,
    decompose_connection,
    eta_minus,
    eta_plus,
    f_from_u,
    gauge_transform,
    geodesic,
    hodge_star,
    horizontal,
    inner,
    is_connection_residual,
    mu_minus,
    mu_plus,
    mypde_residual,
    norm,
    transport_pde_modewise,
    transport_pde_residual,
    vertical,
)
from transparent.thetafield import Connection, ThetaField, multiply


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("metric_name", ["flat32", "curved32"])
def test_frame_fields_match_coordinate_formulas(metric_name, request, rng):
    metric = request.getfixturevalue(metric_name)
    u = random_field(metric, rng, -2, 3)
    K = 16
    Xref, Href = frame_fields(u.samples(K), metric.lam)
    assert rel(geodesic(u).samples(K), Xref) < 1e-9
    assert rel(horizontal(u).samples(K), Href) < 1e-9


def test_eta_shift_modes(flat32, rng):
    u = random_field(flat32, rng, -1, 2)
    assert eta_minus(u).mode_min == -2 and eta_minus(u).mode_max == 1
    assert eta_plus(u).mode_min == 0 and eta_plus(u).mode_max == 3


def test_vertical_multiplies_by_im(flat32, rng):
    u = random_field(flat32, rng, -2, 2)
    v = vertical(u)
    for m in u.modes:
        assert np.allclose(v.mode(m), 1j * m * u.mode(m))


def test_structure_equations_with_curvature(curved32, rng):
    """[V, X] = H, [V, H] = -X and [X, H] = K V with K = -e^{-2 lam} Lap lam."""
    u = random_field(curved32, rng, -2, 2)
    g = curved32.grid
    assert norm(vertical(geodesic(u)) - geodesic(vertical(u)) - horizontal(u)) < 1e-9 * norm(horizontal(u))
    assert norm(vertical(horizontal(u)) - horizontal(vertical(u)) + geodesic(u)) < 1e-9 * norm(geodesic(u))
    k2 = g.kx[None, :] ** 2 + g.ky[:, None] ** 2
    lap = np.real(np.fft.ifft2(-k2 * np.fft.fft2(curved32.lam)))
    curvature = -np.exp(-2 * curved32.lam) * lap
    lhs = geodesic(horizontal(u)) - horizontal(geodesic(u))
    rhs = vertical(u).map_coeffs(lambda m, c: curvature[..., None, None] * c)
    assert norm(lhs - rhs) < 1e-9 * norm(rhs)


def test_flat_frame_fields_commute(flat32, rng):
    u = random_field(flat32, rng, -1, 1)
    xh = geodesic(horizontal(u))
    assert norm(xh - horizontal(geodesic(u))) < 1e-10 * norm(xh)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_eta_adjointness(curved32, seed):
    r = np.random.default_rng(seed)
    u = random_field(curved32, r, -2, 1)
    w = random_field(curved32, r, -1, 2)
    lhs = inner(eta_plus(u), w) + inner(u, eta_minus(w))
    assert abs(lhs) <= 1e-8 * norm(u) * norm(w)


def test_mu_adjointness(curved32, rng):
    A = random_connection(curved32, rng, kmax=2)
    u = random_field(curved32, rng, -2, 1, kmax=2)
    w = random_field(curved32, rng, -1, 2, kmax=2)
    lhs = inner(mu_plus(A, u), w) + inner(u, mu_minus(A, w))
    assert abs(lhs) <= 1e-8 * norm(u) * norm(w)


def test_inner_product_weights(curved32):
    one = ThetaField.identity(curved32)
    area = np.sum(np.exp(2 * curved32.lam)) * curved32.grid.cell_area
    assert inner(one, one).real == pytest.approx(2 * np.pi * 2 * area)
    assert norm(one) == pytest.approx(np.sqrt(4 * np.pi * area))


def test_hodge_star_on_connections(flat32, rng):
    A = random_connection(flat32, rng)
    star = hodge_star(A)
    assert np.allclose(star.a1, -1j * A.a1)
    assert np.allclose(star.am1, 1j * A.am1)
    assert np.allclose((-star).coeffs, vertical(A).coeffs)
    assert np.allclose(hodge_star(star).coeffs, -A.coeffs)


def test_connection_from_ab_and_decompose(flat32, rng):
    a = band_limited(flat32.grid, rng, (), 2)
    b = band_limited(flat32.grid, rng, (), 2)
    a = 1j * (a + algebra.adjoint(a))
    b = 1j * (b + algebra.adjoint(b))
    a -= 0.5 * np.trace(a, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)
    b -= 0.5 * np.trace(b, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)
    A = connection_from_ab(flat32, a, b)
    t = 2 * np.pi * np.arange(8) / 8
    samples = np.cos(t)[:, None, None, None, None] * a + np.sin(t)[:, None, None, None, None] * b
    assert np.allclose(A.samples(8), samples, atol=1e-12)
    assert np.allclose(decompose_connection(samples, flat32).coeffs, A.coeffs, atol=1e-12)
    with pytest.raises(NotAConnection):
        decompose_connection(samples + np.eye(2), flat32)


def test_dbar_A_and_covariant_derivative(flat32, rng):
    A = random_connection(flat32, rng, kmax=2)
    g0 = np.broadcast_to(algebra.random_su2_algebra(rng, (), 1.0), flat32.grid.shape + (2, 2))
    g = ThetaField(flat32, g0[None], 0)
    d = dbar_A(A, g)
    assert d.mode_min == d.mode_max == -1
    expected = A.am1 @ g.mode(0) - g.mode(0) @ A.am1
    assert np.allclose(d.mode(-1), expected, atol=1e-10)
    D = covariant_derivative(A, g)
    assert np.allclose(D.mode(-1), d.mode(-1))
    with pytest.raises(NotMode0):
        dbar_A(A, random_field(flat32, rng, 0, 1))


def test_pure_gauge_solution(flat32, rng):
    """u = w(x) mode 0 unitary: A = -X(w) w* is a connection and X u + A u = 0."""
    s = band_limited(flat32.grid, rng, (), 1)
    s = 0.1 * (s - algebra.adjoint(s))
    s -= 0.5 * np.trace(s, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)
    w = ThetaField(flat32, algebra.su2_exp(s)[None], 0)
    # exp of a band-limited field is only approximately band-limited; refine
    assert w.unitarity_defect() < 1e-10
    w = w.with_tags(unitary=True)
    raw = connection_from_u(w)
    assert is_connection_residual(raw) < 1e-10
    A = Connection.from_field(raw)
    assert transport_pde_residual(A, w) < 1e-9
    assert all(v < 1e-9 for v in transport_pde_modewise(A, w).values())
    assert mypde_residual(f_from_u(w)) < 1e-12


def test_gauge_transform_preserves_transport(pipeline32, rng):
    A, u, _ = pipeline32
    base = transport_pde_residual(A, u)
    m = flat_metric = A.metric
    s = algebra.random_su2_algebra(rng, (), 0.7)
    w = ThetaField(m, np.broadcast_to(algebra.su2_exp(s), m.grid.shape + (2, 2))[None], 0, unitary=True)
    A2 = gauge_transform(A, w)
    u2 = multiply(w, u)
    assert transport_pde_residual(A2, u2) < 2 * base + 1e-12
    # constant w acts by conjugation
    assert np.allclose(A2.a1, w.mode(0) @ A.a1 @ algebra.adjoint(w.mode(0)), atol=1e-10)
    assert flat_metric.is_flat


def test_f_from_u_requires_unitary(flat32):
    with pytest.raises(NotUnitary):
        f_from_u(ThetaField.constant(flat32, np.eye(2)))
