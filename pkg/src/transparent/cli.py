"""Command-line front end.

Exit codes: 0 when every gate passes, 2 when a numerical gate fails (the
gate and its measured value are printed), 1 on I/O or validation errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import container
from .backlund import (
    DEFAULT_GATES,
    Gates,
    LineSeed,
    backlund_transform,
    line_from_vectors,
    line_residuals,
    lower_degree,
    pipeline_residuals,
    weierstrass_seed,
)
from .errors import GateFailure, RankDefect, TransparentError, VanishingSection
from .operators import connection_from_u, f_from_u, is_connection_residual, mypde_residual, transport_pde_residual
from .thetafield import Connection, InvolutionField, Metric, ThetaField, TorusGrid, degree_of, parity_of
from .transport import enumerate_loops, holonomy_defect

EXIT_OK, EXIT_ERROR, EXIT_GATE = 0, 1, 2
SEED_KINDS = ("constant", "weierstrass", "sine")


@dataclass(frozen=True)
class RunConfig:
    grid: int = 64
    Lx: float = 1.0
    Ly: float = 1.0
    mode_cap: int = 8
    gates: Gates = field(default_factory=Gates)
    max_pq: int = 3
    loops_per_dir: int = 2
    rng_seed: int = 0
    min_steps: int = 64
    inputs: tuple[str, ...] = ()
    out: str | None = None

    def __post_init__(self):
        for f in fields(self.gates):
            if not getattr(self.gates, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be positive")
        if self.mode_cap < 2:
            raise ValueError("mode cap must be >= 2")
        if self.max_pq < 1 or self.loops_per_dir < 1 or self.min_steps < 16:
            raise ValueError("loop family needs max_pq >= 1, loops_per_dir >= 1, min_steps >= 16")
        if self.out is not None:
            out = Path(self.out).resolve()
            if any(Path(p).resolve() == out for p in self.inputs if p):
                raise ValueError("output path coincides with an input path")

    @property
    def metric(self) -> Metric:
        return Metric(TorusGrid(self.grid, self.grid, self.Lx, self.Ly))


class _Report:
    """Ordered key/value block printed to stdout and optionally saved as JSON."""

    def __init__(self):
        self.items: dict = {}

    def __setitem__(self, key, value):
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        self.items[key] = value

    def emit(self, stream=None):
        stream = stream or sys.stdout
        for k, v in self.items.items():
            stream.write(f"{k}: {v:.6e}\n" if isinstance(v, float) else f"{k}: {v}\n")

    def save(self, path: Path):
        path.write_text(json.dumps(self.items, indent=2, sort_keys=True) + "\n")


def _gate(name: str, value: float, limit: float) -> None:
    if not value <= limit:
        raise GateFailure(name, value, limit)


def _load(path, kinds):
    obj, header = container.load(path)
    if not isinstance(obj, kinds):
        raise TransparentError(f"{path}: expected {kinds}, found kind {header['kind']!r}")
    return obj


def _out_dir(config: RunConfig) -> Path:
    if config.out is None:
        raise ValueError("--out is required")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------------ commands


def build_seed(config: RunConfig, kind: str, vector=(1.0, 0.0), amplitude: float = 0.5) -> LineSeed:
    metric = config.metric
    if kind == "constant":
        return LineSeed.constant(metric, vector)
    if kind == "weierstrass":
        return weierstrass_seed(metric)
    if kind == "sine":
        X, _ = metric.grid.mesh()
        f2 = amplitude * np.sin(2 * np.pi * X / metric.grid.Lx)
        return line_from_vectors(metric, 1.0, f2, "sine", {"kind": "sine", "amplitude": amplitude})
    raise ValueError(f"unknown seed kind {kind!r}")


def cmd_seed(config: RunConfig, kind: str, vector=(1.0, 0.0), connection: str | None = None) -> int:
    seed = build_seed(config, kind, vector)
    A = Connection.zero(seed.metric) if connection is None else _load(connection, Connection)
    r3, r1 = line_residuals(A, seed)
    report = _Report()
    report["kind"] = kind
    report["grid"] = f"{config.grid}x{config.grid}"
    report["holomorphic_residual"] = r3
    report["involution_residual"] = r1
    meta = {"provenance": seed.provenance, **seed.metadata, "residuals": {"r3": r3, "r1": r1}}
    if config.out is not None:
        container.save(config.out, seed.involution(), meta)
    report.emit()
    _gate("holomorphic_line", r3, config.gates.seed)
    return EXIT_OK


def _write_pair(config: RunConfig, A: Connection, u: ThetaField, report: _Report) -> None:
    out = _out_dir(config)
    meta = {"residuals": {k: v for k, v in report.items.items() if isinstance(v, float)}}
    container.save(out / "connection.tf", A, meta)
    container.save(out / "solution.tf", u, meta)
    report.save(out / "report.json")


def _pair_report(report: _Report, A: Connection, u: ThetaField) -> None:
    res = pipeline_residuals(A, u)
    report["transport_residual"] = res["transport"]
    report["connection_residual"] = res["connection"]
    report["pde_residual"] = res["pde"]
    report["j_symmetry_defect"] = res["j_symmetry"]
    report["parity"] = res["parity"]


def _inputs(config: RunConfig, connection, solution):
    metric = config.metric
    A = Connection.zero(metric) if connection is None else _load(connection, Connection)
    b = ThetaField.identity(A.metric) if solution is None else _load(solution, ThetaField)
    return A, b


def cmd_backlund(config: RunConfig, seed_path: str, connection: str | None = None, solution: str | None = None) -> int:
    A, b = _inputs(config, connection, solution)
    inv, header = container.load(seed_path)
    if not isinstance(inv, InvolutionField):
        raise TransparentError(f"{seed_path}: expected an involution, found kind {header['kind']!r}")
    meta = header["metadata"]
    seed = LineSeed.from_involution(inv, meta.get("provenance", "file"), meta)
    report = _Report()
    report["degree_before"] = degree_of(b)
    if degree_of(b) + 1 > config.mode_cap:
        raise GateFailure("mode_cap", degree_of(b) + 1, config.mode_cap)
    A_F, u_F = backlund_transform(A, b, seed, gates=config.gates)
    report["degree_after"] = degree_of(u_F)
    _pair_report(report, A_F, u_F)
    report.emit()
    _write_pair(config, A_F, u_F, report)
    return EXIT_OK


def cmd_lower(config: RunConfig, connection: str | None = None, solution: str | None = None) -> int:
    A, b = _inputs(config, connection, solution)
    report = _Report()
    report["degree_before"] = degree_of(b)
    A2, b2 = lower_degree(A, b, gates=config.gates)
    report["degree_after"] = degree_of(b2)
    _pair_report(report, A2, b2)
    report.emit()
    _write_pair(config, A2, b2, report)
    return EXIT_OK


def cmd_verify(config: RunConfig, connection: str, solution: str | None = None) -> int:
    A = _load(connection, ThetaField)
    if not isinstance(A, Connection):
        A = Connection.from_field(A)
    if not A.metric.is_flat:
        raise ValueError("holonomy along straight loops needs the flat metric")
    loops = enumerate_loops(config.max_pq, config.loops_per_dir, config.rng_seed, A.metric.grid)
    hol = holonomy_defect(A, loops, min_steps=config.min_steps)
    csv_text = hol.to_csv()
    summary = _Report()
    summary["loops"] = len(loops)
    summary["max_defect"] = hol.max_defect
    summary["mean_defect"] = hol.mean_defect
    worst = hol.worst
    summary["worst_loop"] = f"({worst['loop_p']},{worst['loop_q']}) at ({worst['x0']:.6f},{worst['y0']:.6f})"
    checks = [("holonomy", hol.max_defect, config.gates.holonomy)]
    if solution is not None:
        u = _load(solution, ThetaField)
        t = transport_pde_residual(A, u)
        c = is_connection_residual(connection_from_u(u))
        p = mypde_residual(f_from_u(u))
        summary["transport_residual"] = t
        summary["connection_residual"] = c
        summary["pde_residual"] = p
        checks += [("transport", t, config.gates.transport), ("connection", c, config.gates.connection), ("pde", p, config.gates.pde)]
    if config.out is not None:
        Path(config.out).write_text(csv_text)
        summary.emit(sys.stdout)
    else:
        sys.stdout.write(csv_text)
        summary.emit(sys.stderr)
    for name, value, limit in checks:
        _gate(name, value, limit)
    return EXIT_OK


def cmd_degree(config: RunConfig, path: str) -> int:
    obj, _ = container.load(path)
    f = obj.as_field() if isinstance(obj, InvolutionField) else obj
    report = _Report()
    report["degree"] = degree_of(f)
    report["parity"] = parity_of(f)
    for m, e in f.mode_energies().items():
        report[f"mode[{m}]"] = e
    report.emit()
    return EXIT_OK


def cmd_info(config: RunConfig, path: str) -> int:
    _, header = container.load(path)
    sys.stdout.write(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=64, help="grid points per side")
    p.add_argument("--Lx", type=float, default=1.0)
    p.add_argument("--Ly", type=float, default=1.0)
    p.add_argument("--mode-cap", type=int, default=8)
    p.add_argument("--max-pq", type=int, default=3)
    p.add_argument("--loops-per-dir", type=int, default=2)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--min-steps", type=int, default=64, help="minimum RK4 steps per loop")
    p.add_argument("--out", default=None)
    for f in fields(Gates):
        p.add_argument(f"--tol-{f.name}", type=float, default=getattr(DEFAULT_GATES, f.name))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transparent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed", help="write a line seed (involution container)")
    p.add_argument("--kind", choices=SEED_KINDS, default="constant")
    p.add_argument("--vector", default="1,0", help="constant seed direction, e.g. '1,1j'")
    p.add_argument("--connection", default=None, help="measure holomorphicity against this connection")

    p = sub.add_parser("backlund", help="one raising step A -> A_F")
    p.add_argument("--seed", required=True, dest="seed_file")
    p.add_argument("--connection", default=None)
    p.add_argument("--solution", default=None)

    p = sub.add_parser("lower", help="one lowering step")
    p.add_argument("--connection", default=None)
    p.add_argument("--solution", required=True)

    p = sub.add_parser("verify", help="holonomy report over closed geodesics")
    p.add_argument("--connection", required=True)
    p.add_argument("--solution", default=None)
    p.add_argument("--threshold", type=float, default=None, help="holonomy threshold (alias of --tol-holonomy)")

    p = sub.add_parser("degree", help="degree, parity and mode energies of a field")
    p.add_argument("path")

    p = sub.add_parser("info", help="print a container header")
    p.add_argument("path")

    for p in sub.choices.values():
        _add_common(p)
    return parser


def config_from_args(args) -> RunConfig:
    gates = Gates(**{f.name: getattr(args, f"tol_{f.name}") for f in fields(Gates)})
    if getattr(args, "threshold", None) is not None:
        gates = replace(gates, holonomy=args.threshold)
    inputs = tuple(
        str(v) for k in ("connection", "solution", "seed_file", "path") if (v := getattr(args, k, None)) is not None
    )
    return RunConfig(
        grid=args.grid,
        Lx=args.Lx,
        Ly=args.Ly,
        mode_cap=args.mode_cap,
        gates=gates,
        max_pq=args.max_pq,
        loops_per_dir=args.loops_per_dir,
        rng_seed=args.rng_seed,
        min_steps=args.min_steps,
        inputs=inputs,
        out=args.out,
    )


def _dispatch(args, config: RunConfig) -> int:
    if args.command == "seed":
        vector = tuple(complex(s) for s in args.vector.split(","))
        return cmd_seed(config, args.kind, vector, args.connection)
    if args.command == "backlund":
        return cmd_backlund(config, args.seed_file, args.connection, args.solution)
    if args.command == "lower":
        return cmd_lower(config, args.connection, args.solution)
    if args.command == "verify":
        return cmd_verify(config, args.connection, args.solution)
    if args.command == "degree":
        return cmd_degree(config, args.path)
    return cmd_info(config, args.path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return _dispatch(args, config)
    except GateFailure as exc:
        print(f"GATE FAILED {exc.gate}: measured {exc.value:.6e}, limit {exc.limit:.6e}", file=sys.stderr)
        return EXIT_GATE
    except (RankDefect, VanishingSection) as exc:
        print(f"GATE FAILED {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (OSError, TransparentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
