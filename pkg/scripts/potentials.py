"""V_class and V_eff tables for the fast packets, at t=0 and at later times.

Writes potential_<p_z>_t<time>.csv into --out-dir (default: current directory).
"""
import argparse
from dataclasses import replace
from pathlib import Path

from catenoid_mqm.cli import RunConfig, format_float, potential_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("."))
    ap.add_argument("--times", type=float, nargs="*", default=[0.0, 0.1, 0.2, 0.3])
    ap.add_argument("--rhs", default="transcribed")
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    base = RunConfig(rhs=args.rhs, z_min=-2.0, z_max=2.0, samples=401)
    for pz in (-7.0, -8.4, -9.6):
        for t in args.times:
            table = potential_table(replace(base, pz=pz, at_time=t))
            path = args.out_dir / f"potential_{-pz:g}_t{t:g}.csv"
            with open(path, "w") as fh:
                fh.write("z,V_class,V_eff\n")
                for row in table:
                    fh.write(",".join(format_float(v) for v in row) + "\n")
            peak = table[:, 2].max()
            print(f"p_z0={pz:5.1f} t={t:4.2f}: max V_eff={peak:9.4f} max V_class={table[:, 1].max():9.4f} -> {path}")


if __name__ == "__main__":
    main()
