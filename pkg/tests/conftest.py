import numpy as np
import pytest

from transparent.backlund import backlund_transform, weierstrass_seed
from transparent.thetafield import Connection, Metric, ThetaField, TorusGrid


def bump(grid: TorusGrid, amplitude: float = 0.3) -> np.ndarray:
    X, Y = grid.mesh()
    return amplitude * np.sin(2 * np.pi * X / grid.Lx) * np.cos(2 * np.pi * Y / grid.Ly)


def band_limited(grid: TorusGrid, rng, lead_shape=(), kmax: int = 3) -> np.ndarray:
    """Random complex 2x2 grid with Fourier support |kx|, |ky| <= kmax."""
    X, Y = grid.mesh()
    out = np.zeros(lead_shape + grid.shape + (2, 2), dtype=complex)
    for kx in range(-kmax, kmax + 1):
        for ky in range(-kmax, kmax + 1):
            c = rng.normal(size=lead_shape + (2, 2)) + 1j * rng.normal(size=lead_shape + (2, 2))
            phase = np.exp(2j * np.pi * (kx * X / grid.Lx + ky * Y / grid.Ly))
            out += phase[..., None, None] * c[..., None, None, :, :] / (1 + kx * kx + ky * ky)
    return out


def random_field(metric: Metric, rng, mode_min=-2, mode_max=2, kmax=3) -> ThetaField:
    c = band_limited(metric.grid, rng, (mode_max - mode_min + 1,), kmax)
    return ThetaField(metric, c, mode_min)


def random_connection(metric: Metric, rng, kmax=3) -> Connection:
    a1 = band_limited(metric.grid, rng, (), kmax)
    a1 = a1 - 0.5 * np.trace(a1, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)
    return Connection.from_coefficients(metric, a1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def flat32():
    return Metric.flat(32)


@pytest.fixture(scope="session")
def curved32():
    grid = TorusGrid.square(32)
    return Metric(grid, bump(grid))


@pytest.fixture(scope="session")
def pipeline64():
    """The degree-one pair raised from (0, Id) by the Weierstrass seed."""
    metric = Metric.flat(64)
    seed = weierstrass_seed(metric)
    A, u = backlund_transform(Connection.zero(metric), ThetaField.identity(metric), seed)
    return A, u, seed


@pytest.fixture(scope="session")
def pipeline32():
    metric = Metric.flat(32)
    seed = weierstrass_seed(metric)
    A, u = backlund_transform(Connection.zero(metric), ThetaField.identity(metric), seed)
    return A, u, seed


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
