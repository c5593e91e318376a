"""Reflection/transmission over the a grid, and the edge of the generated system.

Usage: python3 scripts/sweep_a.py [--fine] [--workers 4]
"""
import argparse
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.optimize import bisect

from catenoid_mqm.catenoid import SystemParams
from catenoid_mqm.dynamics import run_and_classify, verdict_flip
from catenoid_mqm.initial_states import reference_state

PARAMS = SystemParams()


def verdict(job):
    a, source = job
    c = run_and_classify(reference_state(a), PARAMS, rhs_source=source).classification
    return c.verdict, c.note


def scan(grid, source, workers):
    jobs = [(a, source) for a in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(verdict, jobs))
    return [verdict(j) for j in jobs]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fine", action="store_true", help="also scan 7.0..10.0 in steps of 0.1")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    grids = {"coarse": [float(a) for a in range(10)]}
    if args.fine:
        grids["fine"] = [round(x, 10) for x in np.arange(7.0, 10.0001, 0.1)]
    for label, grid in grids.items():
        for source in ("transcribed", "generated"):
            res = scan(grid, source, args.workers)
            flip = verdict_flip(grid, [v for v, _ in res])
            print(f"[{label}] {source}: " + " ".join(f"{a:g}:{v[0]}" for a, v in zip(grid, res)))
            if flip.after is not None:
                print(f"    flip {flip.before} -> {flip.after} in ({flip.last_before}, {flip.first_after}), "
                      f"monotone={flip.monotone}")
                if source == "generated":
                    # refine the edge: +1 while the run still reflects
                    sign = lambda a: 1.0 if verdict((a, source))[0] == flip.before else -1.0
                    edge = bisect(sign, flip.last_before, flip.first_after, xtol=1e-3)
                    print(f"    refined edge a* = {edge:.3f}")


if __name__ == "__main__":
    main()
