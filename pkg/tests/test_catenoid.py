import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catenoid_mqm.catenoid import (
    G0002, G0020, G0110, G0200, MOMENT_ORDER, CanonicalPoint, MomentState, PhasePoint, SystemParams,
    canonical_transform, classical_hamiltonian, classical_potential, classical_transmission_threshold,
    effective_hamiltonian, effective_potential, gaussian_curvature, generated_hamiltonian,
    geometric_potential, kamiltonian, mean_curvature, sech, symplectic_form, transform_jacobian,
    wrap_angle,
)

P = SystemParams()
finite = st.floats(-3, 3, allow_nan=False)


def state(p_theta=1.0, z=1.0, p_z=-1.0, moments=None):
    return MomentState.from_moments(PhasePoint(0.0, p_theta, z, p_z), moments or {})


# --- geometry --------------------------------------------------------------------------


def test_curvatures_at_throat():
    assert gaussian_curvature(0.0, P) == pytest.approx(-4.0)
    assert mean_curvature(0.3, P) == 0.0
    assert geometric_potential(0.0, P) == pytest.approx(-2.0)


@given(st.floats(-5, 5))
def test_geometric_potential_is_scaled_curvature(z):
    assert geometric_potential(z, P) == pytest.approx(P.hbar**2 / (2 * P.mass) * gaussian_curvature(z, P), abs=1e-15)


def test_sech_large_argument_has_no_overflow():
    with np.errstate(over="raise"):
        assert sech(1e4) == 0.0
        assert sech(-800.0) == 0.0
    assert sech(0.0) == 1.0


# --- Hamiltonians ---------------------------------------------------------------------


def test_classical_hamiltonian_value():
    assert classical_hamiltonian(PhasePoint(0, 1, 1, -1), P) == pytest.approx(0.1766270621329112, rel=1e-14)


@pytest.mark.parametrize("source,shift", [("transcribed", 20.0), ("generated", 10.0)])
def test_theta_momentum_spread_raises_energy_at_throat(source, shift):
    # at z = 0 only G0200 contributes; the two sources differ by the factor 2
    base = state(z=0.0)
    spread = state(z=0.0, moments={G0200: 5.0})
    assert effective_hamiltonian(spread, P, source) - effective_hamiltonian(base, P, source) == pytest.approx(shift)


def test_reference_state_energies():
    from catenoid_mqm.initial_states import reference_state

    s = reference_state(1.0)
    assert effective_hamiltonian(s, P, "generated") == pytest.approx(1.1062064957003026, rel=1e-12)
    assert effective_hamiltonian(s, P, "transcribed") == pytest.approx(2.0357859292676936, rel=1e-12)


@pytest.mark.parametrize("source", ["generated", "transcribed"])
@settings(max_examples=50, deadline=None)
@given(pt=finite, z=finite, pz=finite)
def test_zero_moments_reduce_to_classical(source, pt, z, pz):
    s = state(pt, z, pz)
    assert effective_hamiltonian(s, P, source) == pytest.approx(classical_hamiltonian(s.point, P), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("source", ["generated", "transcribed"])
@settings(max_examples=50, deadline=None)
@given(pt=finite, z=finite, pz=finite, g=st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_parity_invariance(source, pt, z, pz, g):
    # z -> -z, p_z -> -p_z flips the sign of moments odd in (z, p_z)
    s = MomentState(PhasePoint(0.0, pt, z, pz), tuple(g))
    flipped = tuple(v * (-1) ** (i.c + i.d) for i, v in zip(MOMENT_ORDER, g))
    r = MomentState(PhasePoint(0.0, pt, -z, -pz), flipped)
    assert effective_hamiltonian(r, P, source) == pytest.approx(effective_hamiltonian(s, P, source), rel=1e-12, abs=1e-14)


def test_generated_hamiltonian_term_count_and_moments():
    h = generated_hamiltonian(2)
    assert set(h.moments) <= set(MOMENT_ORDER)
    assert G0110 in h.moments and G0002 in h.moments


def test_unknown_source_rejected():
    with pytest.raises(ValueError):
        effective_hamiltonian(state(), P, "tabulated")


# --- potentials ------------------------------------------------------------------------


def test_effective_potential_vectorises():
    s = state(moments={G0200: 5.0, G0020: 0.06})
    zs = np.linspace(-1, 1, 5)
    vec = effective_potential(zs, s, P)
    assert vec.shape == (5,)
    assert vec[1] == pytest.approx(effective_potential(zs[1], s, P))


def test_classical_potential_drops_mixed_moments():
    s = state(moments={G0200: 5.0, G0110: 0.7})
    plain = state(moments={G0200: 5.0})
    for z in (-0.5, 0.0, 0.8):
        assert classical_potential(z, s, P) == pytest.approx(effective_potential(z, plain, P, "transcribed"))


def test_classical_potential_vanishes_without_moments():
    assert classical_potential(0.4, state(), P) == 0.0


# --- threshold ---------------------------------------------------------------------------


def test_threshold_values():
    assert classical_transmission_threshold(1.0, 1.0, P) == pytest.approx(7.253720815694038, rel=1e-14)
    assert classical_transmission_threshold(0.0, 1.0, P) == 0.0
    assert classical_transmission_threshold(1.0, 0.0, P) == 0.0


# --- canonical transformation ------------------------------------------------------------


def test_canonical_example():
    c = canonical_transform(PhasePoint(0.5, 1, 1, -1), P)
    assert c.Q1 == pytest.approx(0.5 * math.sinh(2))
    assert c.Q2 == pytest.approx(0.5 * math.cosh(2))
    assert c.P2 == pytest.approx(1 / math.cosh(2))
    assert kamiltonian(c, P) == pytest.approx(0.17662706213291116, rel=1e-13)


def test_kamiltonian_at_origin():
    assert kamiltonian(CanonicalPoint(0, 1, 0, 2), P) == pytest.approx(8.5)


@settings(max_examples=100, deadline=None)
@given(th=st.floats(-3, 3), pt=finite, z=finite, pz=finite)
def test_transform_preserves_energy_and_is_symplectic(th, pt, z, pz):
    p = PhasePoint(th, pt, z, pz)
    H = classical_hamiltonian(p, P)
    assert kamiltonian(canonical_transform(p, P), P) == pytest.approx(H, rel=1e-10, abs=1e-12)
    J = transform_jacobian(p.theta, pt, z, pz, P)
    Om = symplectic_form()
    assert np.abs(J.T @ Om @ J - Om).max() < 1e-8 * max(1.0, np.abs(J).max() ** 2)


# --- data types ---------------------------------------------------------------------------


@given(st.floats(-100, 100))
def test_wrap_angle_range(x):
    w = wrap_angle(x)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)


def test_validation():
    with pytest.raises(ValueError):
        SystemParams(R=0.0)
    with pytest.raises(ValueError):
        PhasePoint(0, 1, float("nan"), 0)
    with pytest.raises(ValueError):
        MomentState(PhasePoint(0, 0, 0, 0), (0.0,) * 9)


def test_uncertainty_products():
    s = state(moments={(2, 0, 0, 0): 0.05, (0, 2, 0, 0): 5.0, (0, 0, 2, 0): 0.06, (0, 0, 0, 2): 4.169094014469417})
    u_t, u_z = s.uncertainty_products()
    assert u_t == pytest.approx(0.25)
    assert u_z == pytest.approx(0.06 * 4.169094014469417)
    assert s.check_uncertainty(1.0)
    assert not s.check_uncertainty(2.0)
