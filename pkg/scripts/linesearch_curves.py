"""Descent curves of the holomorphic line search on the trivial connection
and on the degree-one connection raised by the Weierstrass seed.

Writes one CSV per (connection, attempt) and prints the best residuals.
"""
import argparse
import time
from pathlib import Path

from transparent import Connection, Metric, ThetaField, backlund_transform, search_holomorphic_line, weierstrass_seed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--attempts", type=int, default=3)
    ap.add_argument("--iterations", type=int, default=600)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/linesearch"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    metric = Metric.flat(args.grid)
    raised, _ = backlund_transform(Connection.zero(metric), ThetaField.identity(metric), weierstrass_seed(metric))
    for name, A in (("zero", Connection.zero(metric)), ("raised", raised)):
        start = time.perf_counter()
        result = search_holomorphic_line(
            A, attempts=args.attempts, seed=args.seed, iterations=args.iterations, stop_on_success=False
        )
        elapsed = time.perf_counter() - start
        for k in range(len(result.curves)):
            (args.out / f"{name}_attempt{k}.csv").write_text(result.curve_csv(k))
        starts = result.seed.metadata["start"]
        print(
            f"{name:>6}: best residual {result.residual:.2e} (attempt {result.best_attempt}, {starts} start), "
            f"success={result.success}, {elapsed:.1f}s"
        )


if __name__ == "__main__":
    main()
