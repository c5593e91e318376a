import numpy as np

from catenoid_mqm import verify
from catenoid_mqm.catenoid import MOMENT_ORDER, PhasePoint, SystemParams, classical_hamiltonian


def test_run_all_normative_checks_pass():
    checks = verify.run_all(SystemParams(), seed=1, points=200)
    failed = [c.name for c in checks if c.normative and not c.passed]
    assert not failed
    assert sum(c.normative for c in checks) >= 10


def test_report_formatting():
    checks = verify.run_all(SystemParams(), seed=0, points=50)
    text = verify.format_report(checks)
    assert "[PASS]" in text and "[INFO]" in text
    assert all(c.line() in text for c in checks)


def test_central_difference_matches_closed_form():
    # d^2/dx^2 sech^2 at 0 is -2
    assert abs(verify.central_difference(2, 0.0) + 2.0) < 1e-12


def test_hessian_hamiltonian_zero_moments_is_classical():
    p = SystemParams()
    zeros = {i: 0.0 for i in MOMENT_ORDER}
    got = verify.hessian_hamiltonian(2.0, 0.4, -1.0, zeros, p)
    assert np.isclose(got, classical_hamiltonian(PhasePoint(0.0, 2.0, 0.4, -1.0), p), rtol=1e-14)
