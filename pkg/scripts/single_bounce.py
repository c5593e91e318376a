"""Single packet with a=1: quantum bounce next to the classical run.

Usage: python3 scripts/single_bounce.py [--T 0.25] [--out-dir runs/]
"""
import argparse
from pathlib import Path

from catenoid_mqm.catenoid import MomentState, SystemParams
from catenoid_mqm.cli import write_trajectory_csv
from catenoid_mqm.dynamics import classify, conserved_report, integrate, run_and_classify, turning_points
from catenoid_mqm.initial_states import reference_state


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=0.25)
    ap.add_argument("--out-dir", type=Path)
    args = ap.parse_args()

    params = SystemParams()
    quantum = reference_state(args.a)
    runs = {
        "transcribed": (quantum, "transcribed"),
        "generated": (quantum, "generated"),
        "classical": (MomentState(quantum.point), "generated"),
    }
    for name, (state, source) in runs.items():
        traj = integrate(state, params, args.T, rhs_source=source)
        c = classify(traj)
        longer = run_and_classify(state, params, rhs_source=source).classification
        d = conserved_report(traj)
        print(f"{name:12s} within T: {c.verdict:12s} min_z={c.min_z:.6f} turns={len(turning_points(traj))} "
              f"drift_H={d.drift_H:.1e} | to horizon: {longer.verdict} {longer.note}")
        if args.out_dir:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            write_trajectory_csv(args.out_dir / f"bounce_{name}.csv", traj)


if __name__ == "__main__":
    main()
