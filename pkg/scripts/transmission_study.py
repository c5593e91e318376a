"""Verdicts for the three fast packets under every right-hand side.

The literal variant keeps the printed coefficients that break energy
conservation; it is included to show how much the verdicts depend on them.
"""
from catenoid_mqm.catenoid import SystemParams, classical_transmission_threshold
from catenoid_mqm.dynamics import RHS_SOURCES, conserved_report, run_and_classify
from catenoid_mqm.initial_states import reference_state

P_Z = (-7.0, -8.4, -9.6)


def main():
    params = SystemParams()
    print(f"classical threshold |p_z0| = {classical_transmission_threshold(1.0, 1.0, params):.6f}")
    print(f"{'rhs':20s} {'p_z0':>6s} {'verdict':12s} {'min_z':>9s} {'turn_t':>8s} {'drift_H':>8s}  note")
    for source in RHS_SOURCES:
        for pz in P_Z:
            out = run_and_classify(reference_state(p_z=pz), params, rhs_source=source)
            c = out.classification
            drift = conserved_report(out.trajectory).drift_H if out.trajectory is not None else float("nan")
            turn = f"{c.turning_time:.4f}" if c.turning_time is not None else "-"
            print(f"{source:20s} {pz:6.1f} {c.verdict:12s} {c.min_z:9.5f} {turn:>8s} {drift:8.1e}  {c.note}")


if __name__ == "__main__":
    main()
