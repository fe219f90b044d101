"""2x2 complex matrix algebra: SU(2)/su(2) checks, the quaternionic twist,
and the projector <-> involution dictionary.

Every function accepts a single matrix of shape ``(2, 2)`` or a stack of
shape ``(..., 2, 2)`` and broadcasts over the leading axes.
"""
from __future__ import annotations

import numpy as np

from .errors import NotAProjector, NotAnInvolution

ALGEBRAIC_TOL = 1e-12
SPECTRAL_TOL = 1e-8
ODE_TOL = 1e-6

IDENTITY = np.eye(2, dtype=complex)
# real rotation e1 -> e2, e2 -> -e1; j(z) = SIGMA @ conj(z)
SIGMA = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)

# Pauli matrices sigma_k; the i * sigma_k span su(2)
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def as_mat2(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing shape (2, 2), got {a.shape}")
    return a


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def fro(m: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing 2x2 axes."""
    return np.sqrt(np.sum(np.abs(m) ** 2, axis=(-2, -1)))


def det(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def trace(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] + m[..., 1, 1]


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def unitarity_defect(m: np.ndarray) -> float:
    """max over the stack of ||m m* - Id||_F."""
    m = as_mat2(m)
    return float(np.max(fro(m @ adjoint(m) - IDENTITY)))


def su2_group_defect(m: np.ndarray) -> float:
    m = as_mat2(m)
    return max(unitarity_defect(m), float(np.max(np.abs(det(m) - 1.0))))


def su2_algebra_defect(m: np.ndarray) -> float:
    m = as_mat2(m)
    return max(float(np.max(fro(m + adjoint(m)))), float(np.max(np.abs(trace(m)))))


def is_su2(m, tol: float = ALGEBRAIC_TOL) -> bool:
    return su2_group_defect(m) <= tol


def is_su2_algebra(m, tol: float = ALGEBRAIC_TOL) -> bool:
    return su2_algebra_defect(m) <= tol


def j_twist(m) -> np.ndarray:
    """Conjugate by the quaternionic structure: m -> j m j^{-1}.

    Fixes SU(2) pointwise and squares to the identity on all of M_2(C).
    """
    m = as_mat2(m)
    return SIGMA @ np.conj(m) @ SIGMA.T


def involution_from_projector(p, tol: float = 1e-10) -> np.ndarray:
    """g = i(2p - Id): the su(2) involution whose +i eigenline is image(p)."""
    p = as_mat2(p)
    idem = float(np.max(fro(p @ p - p)))
    herm = float(np.max(fro(p - adjoint(p))))
    tr = float(np.max(np.abs(trace(p) - 1.0)))
    if max(idem, herm, tr) > tol:
        raise NotAProjector(
            f"not a rank-1 orthogonal projector: |p^2-p|={idem:.2e}, "
            f"|p-p*|={herm:.2e}, |tr p-1|={tr:.2e}"
        )
    return 1j * (2.0 * p - IDENTITY)


def projector_from_involution(g, tol: float = 1e-10) -> np.ndarray:
    """pi = (Id - i g)/2, the orthogonal projector onto the +i eigenline."""
    g = as_mat2(g)
    defect = float(np.max(fro(g @ g + IDENTITY)))
    if defect > tol:
        raise NotAnInvolution(f"||g^2 + Id|| = {defect:.2e}")
    return 0.5 * (IDENTITY - 1j * g)


def projector_from_vector(v) -> np.ndarray:
    """v v* / |v|^2 for a (..., 2) stack of nonzero vectors."""
    v = np.asarray(v, dtype=complex)
    n2 = np.sum(np.abs(v) ** 2, axis=-1)
    return v[..., :, None] * np.conj(v[..., None, :]) / n2[..., None, None]


def su2_exp(s) -> np.ndarray:
    """Matrix exponential of traceless anti-Hermitian matrices, closed form."""
    s = as_mat2(s)
    # s = i (w . sigma) has det s = |w|^2 and s^2 = -|w|^2 Id
    theta = np.sqrt(np.maximum(np.real(det(s)), 0.0))
    return np.cos(theta)[..., None, None] * IDENTITY + np.sinc(theta / np.pi)[..., None, None] * s


def random_su2_algebra(rng: np.random.Generator, size: tuple = (), scale: float = 1.0) -> np.ndarray:
    w = rng.normal(size=tuple(size) + (3,)) * scale
    return 1j * np.einsum("...k,kab->...ab", w, PAULI)


def random_projector(rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
    shape = tuple(size) + (2,)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return projector_from_vector(v)
