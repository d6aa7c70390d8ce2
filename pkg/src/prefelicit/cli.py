"""Command-line entry point: ``prefelicit --sweep items --policies bound,bound-order``."""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import ALL_POLICIES, ExperimentConfig, rows_to_csv, run_sweep, summarize


def _points(text: str) -> list[tuple[int, int]]:
    out = []
    for part in text.split(","):
        n, k = part.lower().split("x")
        out.append((int(n), int(k)))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prefelicit", description=__doc__)
    p.add_argument("--sweep", choices=["items", "agents", "custom"], default="items",
                   help="items: n=2, k=kmin..kmax; agents: k=4, n=nmin..nmax; custom: --points")
    p.add_argument("--policies", default="allocatable-random",
                   help=f"comma-separated, any of: {','.join(ALL_POLICIES)} (or 'all')")
    p.add_argument("--runs", type=int, default=10, help="instances per grid point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order-cost", type=float, default=0.1)
    p.add_argument("--hint", type=float, default=0.2)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--nmin", type=int, default=2)
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--points", type=_points, default=[], help="custom grid, e.g. 2x4,3x3")
    p.add_argument("--strict-domination", action="store_true")
    p.add_argument("--asymmetric-bounds", action="store_true",
                   help="linear-time lower bounds instead of square root")
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--save-instances", metavar="DIR")
    p.add_argument("--load-instances", metavar="DIR")
    p.add_argument("--summary", action="store_true", help="print mean ratios to stderr")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    policies = list(ALL_POLICIES) if args.policies == "all" else args.policies.split(",")
    try:
        config = ExperimentConfig(
            sweep=args.sweep, policies=policies, runs=args.runs, seed=args.seed,
            order_cost=args.order_cost, hint=args.hint, samples=args.samples,
            kmin=args.kmin, kmax=args.kmax, nmin=args.nmin, nmax=args.nmax,
            points=args.points, strict=args.strict_domination,
            asymmetric=args.asymmetric_bounds, timing=args.timing,
            save_instances=args.save_instances, load_instances=args.load_instances,
        )
    except ValueError as exc:
        print(f"prefelicit: {exc}", file=sys.stderr)
        return 2
    rows = run_sweep(config)
    text = rows_to_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    if args.summary:
        for (policy, n, k), s in summarize(rows).items():
            print(f"{policy:20s} n={n} k={k} mean_cost={s['mean_cost']:.1f} "
                  f"ratio={s['mean_ratio']:.3f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
