import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catenoid_mqm.catenoid import (
    MOMENT_ORDER, MomentState, PhasePoint, SystemParams, classical_hamiltonian, generated_hamiltonian,
)
from catenoid_mqm.dynamics import (
    STATE_FIELDS, Classification, IntegrationError, bracket_flow, classify, conserved_report,
    default_horizon, eom_rhs_generated, eom_rhs_transcribed, integrate, run_and_classify,
    state_vector, time_reversed, transcribed_gradient, turning_points, vector_state, verdict_flip,
)
from catenoid_mqm.dynamics import _rhs_transcribed
from catenoid_mqm.initial_states import reference_state

P = SystemParams()
small = st.floats(-2, 2, allow_nan=False)


def classical(a, z0=1.0):
    return MomentState(PhasePoint(0.0, 1.0, z0, -a))


def random_state(pt, z, pz, g):
    return MomentState(PhasePoint(0.3, pt, z, pz), tuple(g))


# --- right-hand sides ----------------------------------------------------------------


def test_state_vector_roundtrip():
    s = reference_state(2.0)
    assert vector_state(state_vector(s)) == s
    assert len(STATE_FIELDS) == 14 and STATE_FIELDS[4:] == tuple(i.label() for i in MOMENT_ORDER)


@pytest.mark.parametrize("source", ["generated", "transcribed"])
def test_geodesic_rhs_without_moments(source):
    # classical geodesic equations of the catenoid
    s = classical(3.0, z0=0.4)
    rhs = eom_rhs_generated(s, P) if source == "generated" else eom_rhs_transcribed(s, P)
    x = 0.4 / P.R
    s2, t = 1 / math.cosh(x) ** 2, math.tanh(x)
    E = 1.0 + P.R**2 * 9.0
    assert rhs[0] == pytest.approx(s2 * 1.0 / P.R**2)
    assert rhs[1] == 0.0
    assert rhs[2] == pytest.approx(s2 * -3.0)
    assert rhs[3] == pytest.approx(t * s2 * E / P.R**3)
    assert np.all(rhs[4:] == 0.0)


@pytest.mark.parametrize("source", ["generated", "transcribed"])
@settings(max_examples=40, deadline=None)
@given(pt=small, z=small, pz=small, g=st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_theta_momentum_and_its_spread_are_constant(source, pt, z, pz, g):
    s = random_state(pt, z, pz, g)
    rhs = eom_rhs_generated(s, P) if source == "generated" else eom_rhs_transcribed(s, P)
    assert rhs[1] == 0.0
    assert rhs[4 + MOMENT_ORDER.index((0, 2, 0, 0))] == 0.0


@settings(max_examples=40, deadline=None)
@given(pt=small, z=small, pz=small, g=st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_generated_rhs_is_the_bracket_flow(pt, z, pz, g):
    s = random_state(pt, z, pz, g)
    y = state_vector(s)
    d_pt, d_z, d_pz, dG = generated_hamiltonian(2).gradient(y[1], y[2], y[3], dict(zip(MOMENT_ORDER, y[4:])), P)
    slots = {4 + MOMENT_ORDER.index(k): v for k, v in dG.items()}
    flow = bracket_flow(y, (d_pt, d_z, d_pz, slots), P.hbar)
    assert np.allclose(eom_rhs_generated(s, P), flow, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(pt=small, z=small, pz=small, g=st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_repaired_transcribed_rhs_is_hamiltonian(pt, z, pz, g):
    y = state_vector(random_state(pt, z, pz, g))
    flow = bracket_flow(y, transcribed_gradient(y, P), P.hbar)
    assert np.allclose(_rhs_transcribed(0.0, y, P), flow, rtol=1e-10, atol=1e-10)


def test_literal_variant_differs_only_in_three_components():
    s = random_state(1.3, 0.4, -2.1, [0.1 * (k + 1) for k in range(10)])
    diff = eom_rhs_transcribed(s, P, literal=True) - eom_rhs_transcribed(s, P)
    changed = {STATE_FIELDS[k] for k in np.nonzero(np.abs(diff) > 1e-14)[0]}
    assert changed == {"z", "G0110", "G2000"}


# --- integration ---------------------------------------------------------------------


def test_classical_run_conserves_energy():
    traj = integrate(classical(8.0), P, 1.0)
    H = np.array([classical_hamiltonian(vector_state(y).point, P) for y in traj.y])
    assert np.max(np.abs(H - H[0])) / H[0] < 1e-8
    assert conserved_report(traj).moment_block_zero


def test_time_reversal_returns_to_start():
    s0 = reference_state(1.0)
    T = 0.3
    fwd = integrate(s0, P, T)
    back = integrate(time_reversed(fwd.state_at(T)), P, T)
    end = state_vector(time_reversed(back.state_at(T)))
    start = state_vector(s0)
    assert np.max(np.abs(end - start)) < 1e-6


def test_looser_tolerance_drifts_more():
    s0 = reference_state(1.0)
    tight = conserved_report(integrate(s0, P, 1.0)).drift_H
    loose = conserved_report(integrate(s0, P, 1.0, abs_tol=1e-6, rel_tol=1e-6)).drift_H
    assert loose > tight
    assert tight < 1e-8


def test_trajectory_invariants():
    traj = integrate(reference_state(1.0), P, 0.25, sample_dt=0.01)
    assert np.all(np.diff(traj.t) > 0)
    assert traj.t[0] == 0.0 and traj.t_end == pytest.approx(0.25)
    assert np.all(traj.theta >= -math.pi) and np.all(traj.theta < math.pi)
    assert traj.y.shape == (len(traj.t), 14)
    assert np.all(traj.U_theta >= 0.25 * (1 - 1e-6))
    assert np.all(traj.U_z >= 0.25 * (1 - 1e-6))


def test_bad_arguments():
    with pytest.raises(ValueError):
        integrate(classical(1.0), P, 0.0)
    with pytest.raises(ValueError):
        integrate(classical(1.0), P, 1.0, abs_tol=0.0)
    with pytest.raises(ValueError):
        integrate(classical(1.0), P, 1.0, rhs_source="tabulated")


def test_generated_system_breaks_down_for_fast_packets():
    with pytest.raises(IntegrationError) as info:
        integrate(reference_state(p_z=-9.6), P, 1.0)
    assert 0.45 < info.value.t_last < 0.5


# --- classification ----------------------------------------------------------------


def test_classical_bounce_at_a_equal_one():
    out = run_and_classify(classical(1.0), P)
    c = out.classification
    assert c.verdict == "Reflected"
    assert c.min_z > 0
    assert c.min_z == pytest.approx(0.9419, abs=1e-3)


@pytest.mark.parametrize("a,verdict", [(7.0, "Reflected"), (7.5, "Transmitted")])
def test_classical_threshold_sides(a, verdict):
    assert run_and_classify(classical(a), P).classification.verdict == verdict


def test_quantum_bounce_single_turning_point():
    traj = integrate(reference_state(1.0), P, 0.25, rhs_source="transcribed")
    z = traj.column("z")
    assert np.all(z > 0)
    turns = turning_points(traj)
    assert len(turns) == 1 and turns[0] == pytest.approx(0.1403, abs=1e-3)
    assert classify(traj).verdict == "Undetermined"  # has not climbed back to z0 by t = 0.25


def test_transmitted_needs_crossing_time():
    with pytest.raises(ValueError):
        Classification("Transmitted", None, None, -1.0, 2.0)


def test_diverging_run_is_undetermined_with_note():
    out = run_and_classify(reference_state(p_z=-9.6), P, T=1.0)
    assert out.classification.verdict == "Undetermined"
    assert "diverged" in out.classification.note
    assert out.failure is not None


def test_default_horizon():
    # initial speed sech^2(2) * a; the horizon covers 4 z0 at that speed, capped at 5
    assert default_horizon(classical(1.0), P) == 5.0
    assert default_horizon(classical(100.0), P) == pytest.approx(4.0 * math.cosh(2) ** 2 / 100.0, rel=1e-12)
    assert default_horizon(classical(1.0, z0=0.0), P) == 5.0


def test_verdict_flip():
    f = verdict_flip([0, 1, 2, 3], ["Reflected", "Reflected", "Transmitted", "Transmitted"])
    assert (f.last_before, f.first_after, f.monotone, f.after) == (1.0, 2.0, True, "Transmitted")
    assert f.midpoint == 1.5
    g = verdict_flip([0, 1, 2], ["Reflected", "Transmitted", "Reflected"])
    assert not g.monotone
    h = verdict_flip([0, 1], ["Reflected", "Reflected"])
    assert h.after is None and h.midpoint is None
    with pytest.raises(ValueError):
        verdict_flip([], [])
