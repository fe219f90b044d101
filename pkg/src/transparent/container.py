"""Binary container for fields, connections and involutions.

Layout::

    TRANSPARENT-FIELD\n
    {one-line JSON header}\n
    payload

The payload holds little-endian float64 (re, im) pairs ordered by mode, then
row y, then column x, then the four matrix entries (00, 01, 10, 11).  A
non-flat conformal factor follows as ny * nx little-endian float64 values.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ContainerError
from .thetafield import Connection, InvolutionField, Metric, ThetaField, TorusGrid

MAGIC = b"TRANSPARENT-FIELD\n"
VERSION = 1
KINDS = ("field", "connection", "involution")
_DTYPE = np.dtype("<f8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _coefficients(obj) -> tuple[str, np.ndarray, int]:
    if isinstance(obj, InvolutionField):
        return "involution", obj.g[None], 0
    if isinstance(obj, ThetaField):
        return obj.kind, obj.coeffs, obj.mode_min
    raise TypeError(f"cannot store {type(obj).__name__}")


def encode(obj, metadata: dict | None = None) -> bytes:
    kind, coeffs, mode_min = _coefficients(obj)
    metric = obj.metric
    g = metric.grid
    header = {
        "format": "transparent-field",
        "version": VERSION,
        "kind": kind,
        "nx": g.nx,
        "ny": g.ny,
        "Lx": float(g.Lx),
        "Ly": float(g.Ly),
        "mode_min": int(mode_min),
        "mode_max": int(mode_min + coeffs.shape[0] - 1),
        "endianness": "little",
        "scalar": "float64-re-im",
        "parity": getattr(obj, "parity", None),
        "unitary": bool(getattr(obj, "unitary", False)),
        "lambda": not metric.is_flat,
        "metadata": _jsonable(metadata or {}),
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False)
    body = np.ascontiguousarray(coeffs).view(np.float64).astype(_DTYPE, copy=False).tobytes()
    if header["lambda"]:
        body += np.ascontiguousarray(metric.lam).astype(_DTYPE, copy=False).tobytes()
    return MAGIC + line.encode("utf-8") + b"\n" + body


def decode(data: bytes):
    """Return (object, header).  The object type follows the header kind."""
    if not data.startswith(MAGIC):
        raise ContainerError("missing container magic line")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise ContainerError("truncated header")
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"unreadable header: {exc}") from None
    if header.get("format") != "transparent-field" or header.get("version") != VERSION:
        raise ContainerError("unsupported container format or version")
    if header.get("endianness") != "little":
        raise ContainerError("only little-endian payloads are supported")
    kind = header.get("kind")
    if kind not in KINDS:
        raise ContainerError(f"unknown kind {kind!r}")
    try:
        grid = TorusGrid(int(header["nx"]), int(header["ny"]), float(header["Lx"]), float(header["Ly"]))
        mode_min, mode_max = int(header["mode_min"]), int(header["mode_max"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ContainerError(f"bad grid header: {exc}") from None
    nmodes = mode_max - mode_min + 1
    if nmodes < 1:
        raise ContainerError("empty mode range")
    n_coef = nmodes * grid.ny * grid.nx * 4 * 2
    n_lam = grid.ny * grid.nx if header.get("lambda") else 0
    body = data[end + 1:]
    if len(body) != (n_coef + n_lam) * _DTYPE.itemsize:
        raise ContainerError(f"payload has {len(body)} bytes, expected {(n_coef + n_lam) * 8}")
    flat = np.frombuffer(body, dtype=_DTYPE)
    coeffs = flat[:n_coef].astype(np.float64).view(np.complex128).reshape(nmodes, grid.ny, grid.nx, 2, 2)
    lam = flat[n_coef:].astype(np.float64).reshape(grid.shape) if n_lam else None
    metric = Metric(grid, lam)
    try:
        if kind == "involution":
            if (mode_min, mode_max) != (0, 0):
                raise ContainerError("an involution must be a single mode-0 grid")
            obj = InvolutionField(metric, coeffs[0])
        elif kind == "connection":
            obj = Connection(metric, coeffs, mode_min)
        else:
            obj = ThetaField(metric, coeffs, mode_min, parity=header.get("parity"), unitary=bool(header.get("unitary")))
    except ContainerError:
        raise
    except ValueError as exc:
        raise ContainerError(f"payload fails {kind} validation: {exc}") from None
    return obj, header


def save(path, obj, metadata: dict | None = None) -> None:
    Path(path).write_bytes(encode(obj, metadata))


def load(path):
    """Read a container; returns (object, header)."""
    return decode(Path(path).read_bytes())
