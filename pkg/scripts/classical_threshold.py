"""Locate the classical transmission threshold by simulation and compare with 2 sinh(z0/R) p_theta / R."""
from scipy.optimize import brentq

from catenoid_mqm.catenoid import MomentState, PhasePoint, SystemParams, classical_transmission_threshold
from catenoid_mqm.dynamics import run_and_classify


def main():
    params = SystemParams()
    exact = classical_transmission_threshold(1.0, 1.0, params)

    def side(a):
        v = run_and_classify(MomentState(PhasePoint(0.0, 1.0, 1.0, -a)), params).classification.verdict
        return 1.0 if v == "Transmitted" else -1.0

    for a in (7.20, 7.25, 7.26, 7.30):
        print(f"a={a:.2f}: {'Transmitted' if side(a) > 0 else 'Reflected'}")
    found = brentq(side, 7.0, 7.5, xtol=1e-6)
    print(f"simulated threshold {found:.6f}, closed form {exact:.6f}, difference {found - exact:.1e}")


if __name__ == "__main__":
    main()
