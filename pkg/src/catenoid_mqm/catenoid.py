"""Catenoid geometry, classical and quantum-corrected Hamiltonians, potentials."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .moment_algebra import MomentIndex, derivative_polynomial, indices_of_order

__all__ = [
    "SystemParams",
    "PhasePoint",
    "MomentState",
    "CanonicalPoint",
    "MOMENT_ORDER",
    "sech",
    "gaussian_curvature",
    "mean_curvature",
    "geometric_potential",
    "classical_hamiltonian",
    "effective_hamiltonian",
    "effective_potential",
    "classical_potential",
    "classical_transmission_threshold",
    "canonical_transform",
    "kamiltonian",
    "TaylorHamiltonian",
    "generated_hamiltonian",
]

# fixed storage order of the ten second-order moments
MOMENT_ORDER: tuple[MomentIndex, ...] = (
    MomentIndex(1, 1, 0, 0),
    MomentIndex(1, 0, 1, 0),
    MomentIndex(1, 0, 0, 1),
    MomentIndex(0, 1, 1, 0),
    MomentIndex(0, 1, 0, 1),
    MomentIndex(0, 0, 1, 1),
    MomentIndex(2, 0, 0, 0),
    MomentIndex(0, 2, 0, 0),
    MomentIndex(0, 0, 2, 0),
    MomentIndex(0, 0, 0, 2),
)
G1100, G1010, G1001, G0110, G0101, G0011, G2000, G0200, G0020, G0002 = MOMENT_ORDER

SOURCES = ("generated", "transcribed")


@dataclass(frozen=True)
class SystemParams:
    hbar: float = 1.0
    mass: float = 1.0
    R: float = 0.5

    def __post_init__(self):
        for name in ("hbar", "mass", "R"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def wrap_angle(theta: float) -> float:
    """Map to [-pi, pi)."""
    w = math.fmod(theta + math.pi, 2 * math.pi)
    if w < 0:
        w += 2 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class PhasePoint:
    theta: float
    p_theta: float
    z: float
    p_z: float

    def __post_init__(self):
        vals = (self.theta, self.p_theta, self.z, self.p_z)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite phase point {vals}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))


@dataclass(frozen=True)
class MomentState:
    """Classical phase point plus the ten second-order moments (``MOMENT_ORDER``)."""

    point: PhasePoint
    g: tuple[float, ...] = field(default=(0.0,) * 10)

    def __post_init__(self):
        g = tuple(float(x) for x in self.g)
        if len(g) != len(MOMENT_ORDER):
            raise ValueError(f"expected {len(MOMENT_ORDER)} moments, got {len(g)}")
        object.__setattr__(self, "g", g)

    @classmethod
    def from_moments(cls, point: PhasePoint, moments: Mapping) -> "MomentState":
        lookup = {MomentIndex(*k): v for k, v in moments.items()}
        return cls(point, tuple(lookup.get(i, 0.0) for i in MOMENT_ORDER))

    def moment(self, idx) -> float:
        return self.g[MOMENT_ORDER.index(MomentIndex(*idx))]

    def moments(self) -> dict[MomentIndex, float]:
        return dict(zip(MOMENT_ORDER, self.g))

    def with_point(self, **changes) -> "MomentState":
        return replace(self, point=replace(self.point, **changes))

    def uncertainty_products(self) -> tuple[float, float]:
        m = self.moments()
        u_theta = m[G2000] * m[G0200] - m[G1100] ** 2
        u_z = m[G0020] * m[G0002] - m[G0011] ** 2
        return u_theta, u_z

    def check_uncertainty(self, hbar: float, tol: float = 1e-6) -> bool:
        floor = hbar**2 / 4 * (1 - tol)
        return all(u >= floor for u in self.uncertainty_products())


@dataclass(frozen=True)
class CanonicalPoint:
    Q1: float
    P1: float
    Q2: float
    P2: float


# --- numerically safe hyperbolic helpers -------------------------------------


def sech(x):
    """sech without overflow for large |x|."""
    ax = np.abs(x)
    e = np.exp(-2.0 * ax)
    out = 2.0 * np.exp(-ax) / (1.0 + e)
    return float(out) if np.ndim(out) == 0 else out


def _sech2_tanh(z: float, R: float) -> tuple[float, float]:
    x = z / R
    if np.iscomplexobj(x):  # complex-step differentiation, |x| moderate
        c = np.cosh(x)
        return 1 / (c * c), np.tanh(x)
    s = sech(x)
    return s * s, math.tanh(x)


# --- geometry ----------------------------------------------------------------


def gaussian_curvature(z, params: SystemParams):
    out = -sech(np.asarray(z, dtype=float) / params.R) ** 4 / params.R**2
    return float(out) if np.ndim(out) == 0 else out


def mean_curvature(z=None, params: SystemParams | None = None) -> float:
    """The catenoid is a minimal surface."""
    return 0.0


def geometric_potential(z, params: SystemParams):
    s4 = sech(np.asarray(z, dtype=float) / params.R) ** 4
    out = -params.hbar**2 / (2 * params.mass * params.R**2) * s4
    return float(out) if np.ndim(out) == 0 else out


# --- Hamiltonians --------------------------------------------------------------


def _metric_factor(z: float, params: SystemParams) -> float:
    """sech^2(z/R) / (2 m R^2); the only place the surface enters."""
    s2, _ = _sech2_tanh(z, params.R)
    return s2 / (2 * params.mass * params.R**2)


def classical_hamiltonian(p: PhasePoint, params: SystemParams) -> float:
    return _metric_factor(p.z, params) * (p.p_theta**2 + params.R**2 * p.p_z**2)


class HTerm(NamedTuple):
    """coef/(2m) * R**rpow * d^c/dx^c sech^2(x)|_{x=z/R} * p_theta**alpha * p_z**beta * G."""

    coef: Fraction
    rpow: int
    c: int
    alpha: int
    beta: int
    moment: MomentIndex | None


@dataclass(frozen=True)
class TaylorHamiltonian:
    """The quantum-corrected Hamiltonian as a list of exact monomial terms.

    Built by Taylor-expanding the classical Hamiltonian in the moments; the
    z-derivatives of sech^2 come from :func:`derivative_polynomial`.
    """

    terms: tuple[HTerm, ...]
    max_order: int

    @property
    def moments(self) -> tuple[MomentIndex, ...]:
        seen = []
        for t in self.terms:
            if t.moment is not None and t.moment not in seen:
                seen.append(t.moment)
        return tuple(seen)

    @staticmethod
    def _shape(term: HTerm, z: float, R: float) -> float:
        x = z / R
        s = sech(x)
        return s * s * derivative_polynomial(term.c)(math.tanh(x))

    def _eval(self, terms, p_theta, z, p_z, moments, params, d_pt=0, d_z=0, d_pz=0):
        R, m = params.R, params.mass
        total = 0.0
        for t in terms:
            if t.alpha < d_pt or t.beta < d_pz:
                continue
            shape = self._shape(t._replace(c=t.c + d_z), z, R) * R ** (t.rpow - d_z)
            mom = 1.0
            for k in range(d_pt):
                mom *= t.alpha - k
            for k in range(d_pz):
                mom *= t.beta - k
            val = float(t.coef) / (2 * m) * shape * mom
            val *= p_theta ** (t.alpha - d_pt) * p_z ** (t.beta - d_pz)
            if t.moment is not None:
                val *= moments.get(t.moment, 0.0)
            total += val
        return total

    def value(self, p_theta, z, p_z, moments: Mapping, params: SystemParams) -> float:
        return self._eval(self.terms, p_theta, z, p_z, moments, params)

    def moment_part(self, p_theta, z, p_z, moments: Mapping, params: SystemParams) -> float:
        return self._eval([t for t in self.terms if t.moment is not None],
                          p_theta, z, p_z, moments, params)

    def gradient(self, p_theta, z, p_z, moments: Mapping, params: SystemParams):
        """(dH/dp_theta, dH/dz, dH/dp_z, {moment: dH/dG})."""
        dpt = self._eval(self.terms, p_theta, z, p_z, moments, params, d_pt=1)
        dz = self._eval(self.terms, p_theta, z, p_z, moments, params, d_z=1)
        dpz = self._eval(self.terms, p_theta, z, p_z, moments, params, d_pz=1)
        dG: dict = {}
        for t in self.terms:
            if t.moment is None:
                continue
            val = self._eval([t._replace(moment=None)], p_theta, z, p_z, moments, params)
            dG[t.moment] = dG.get(t.moment, 0.0) + val
        return dpt, dz, dpz, dG


_CLASSICAL_TERMS = (
    HTerm(Fraction(1), -2, 0, 2, 0, None),  # p_theta^2 / R^2
    HTerm(Fraction(1), 0, 0, 0, 2, None),  # p_z^2
)


@lru_cache(maxsize=None)
def generated_hamiltonian(max_order: int = 2) -> TaylorHamiltonian:
    """H + sum over moments G^{0,b,c,d} of d^{b+c+d}H / (b! c! d!) * G, up to ``max_order``."""
    terms = list(_CLASSICAL_TERMS)
    for order in range(2, max_order + 1):
        for idx in indices_of_order(order):
            if idx.a:
                continue  # H has no theta dependence
            _, b, c, d = idx
            for t in _CLASSICAL_TERMS:
                if b > t.alpha or d > t.beta:
                    continue
                falling = (factorial(t.alpha) // factorial(t.alpha - b)) * (
                    factorial(t.beta) // factorial(t.beta - d))
                coef = t.coef * falling / (factorial(b) * factorial(c) * factorial(d))
                terms.append(HTerm(coef, t.rpow - c, c, t.alpha - b, t.beta - d, idx))
    return TaylorHamiltonian(tuple(terms), max_order)


def _transcribed_parts(p_theta, z, p_z, g: Mapping, params: SystemParams):
    """(classical part, moment part) of the printed second-order H_Q."""
    R = params.R
    s2, t = _sech2_tanh(z, R)
    eta = s2 / (2 * params.mass * R**2)
    E = p_theta**2 + R**2 * p_z**2
    corr = (
        -4.0 / R * t * p_theta**2 * g.get(G0110, 0.0)
        - 4.0 * R * t * p_z * g.get(G0011, 0.0)
        + 2.0 * g.get(G0200, 0.0)
        + 2.0 * R**2 * g.get(G0002, 0.0)
        + 2.0 / R**2 * (2.0 - 3.0 * s2) * E * g.get(G0020, 0.0)
    )
    return eta * E, eta * corr


def effective_hamiltonian(state: MomentState, params: SystemParams, source: str = "generated") -> float:
    p, g = state.point, state.moments()
    if source == "generated":
        return generated_hamiltonian(2).value(p.p_theta, p.z, p.p_z, g, params)
    if source == "transcribed":
        return sum(_transcribed_parts(p.p_theta, p.z, p.p_z, g, params))
    raise ValueError(f"unknown source {source!r}")


def effective_potential(z, state: MomentState, params: SystemParams, source: str = "generated"):
    """Moment-carrying part of H_Q at position(s) z, with the state's momenta and moments."""
    p, g = state.point, state.moments()

    def one(zz):
        if source == "generated":
            return generated_hamiltonian(2).moment_part(p.p_theta, zz, p.p_z, g, params)
        if source == "transcribed":
            return _transcribed_parts(p.p_theta, zz, p.p_z, g, params)[1]
        raise ValueError(f"unknown source {source!r}")

    if np.ndim(z):
        return np.array([one(float(zz)) for zz in np.ravel(z)]).reshape(np.shape(z))
    return one(float(z))


def classical_potential(z, initial_state: MomentState, params: SystemParams, source: str = "transcribed"):
    """Effective potential with the t=0 diagonal moments frozen and mixed moments dropped."""
    keep = {G0200, G0002, G0020}
    frozen = MomentState.from_moments(
        initial_state.point, {k: v for k, v in initial_state.moments().items() if k in keep}
    )
    return effective_potential(z, frozen, params, source)


def classical_transmission_threshold(z0: float, p_theta: float, params: SystemParams) -> float:
    """Smallest |p_z0| that carries a classical particle from z0 across the throat.

    Conservation of H and p_theta: the particle reaches z=0 iff
    R^2 p_z0^2 >= p_theta^2 (cosh^2(z0/R) - 1).
    """
    if p_theta == 0 or z0 == 0:
        return 0.0
    return abs(p_theta) / params.R * math.sinh(abs(z0) / params.R)


# --- canonical transformation ----------------------------------------------------


def _transform_arrays(theta, p_theta, z, p_z, R):
    # works on real or complex numpy input (complex-step differentiation)
    x = z / R
    ch, sh = np.cosh(x), np.sinh(x)
    Q1 = R * sh
    P1 = p_z / ch - theta / R * sh / ch**2 * p_theta
    Q2 = theta * ch
    P2 = p_theta / ch
    return Q1, P1, Q2, P2


def canonical_transform(p: PhasePoint, params: SystemParams) -> CanonicalPoint:
    Q1, P1, Q2, P2 = _transform_arrays(p.theta, p.p_theta, p.z, p.p_z, params.R)
    return CanonicalPoint(float(Q1), float(P1), float(Q2), float(P2))


def kamiltonian(c: CanonicalPoint, params: SystemParams) -> float:
    m, R = params.mass, params.R
    den = R**2 + c.Q1**2
    return (
        c.P1**2 / (2 * m)
        + c.P2**2 / (2 * m * R**2)
        + c.Q1 * c.Q2 * c.P1 * c.P2 / (m * den)
        + c.Q1**2 * c.Q2**2 * c.P2**2 / (2 * m * den**2)
    )


def transform_jacobian(theta: float, p_theta: float, z: float, p_z: float, params: SystemParams) -> np.ndarray:
    """Jacobian d(Q1,Q2,P1,P2)/d(theta,z,p_theta,p_z) by complex-step differentiation."""
    h = 1e-30
    base = np.array([theta, z, p_theta, p_z], dtype=complex)
    J = np.empty((4, 4))
    for j in range(4):
        x = base.copy()
        x[j] += 1j * h
        Q1, P1, Q2, P2 = _transform_arrays(x[0], x[2], x[1], x[3], params.R)
        J[:, j] = np.imag([Q1, Q2, P1, P2]) / h
    return J


def symplectic_form(n: int = 2) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
