"""Equations of motion, adaptive integration, monitors and throat classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .catenoid import (
    MOMENT_ORDER,
    SOURCES,
    G0002,
    G0011,
    G0020,
    G0101,
    G0110,
    G0200,
    G1001,
    G1010,
    G1100,
    G2000,
    MomentState,
    PhasePoint,
    SystemParams,
    _transcribed_parts,
    generated_hamiltonian,
    sech,
)
from .moment_algebra import derivative_polynomial, moment_bracket

__all__ = [
    "STATE_FIELDS",
    "IntegrationError",
    "Trajectory",
    "Classification",
    "DriftReport",
    "state_vector",
    "vector_state",
    "eom_rhs_generated",
    "eom_rhs_transcribed",
    "integrate",
    "classify",
    "RunOutcome",
    "run_and_classify",
    "conserved_report",
    "default_horizon",
    "time_reversed",
    "VerdictFlip",
    "verdict_flip",
    "turning_points",
    "throat_crossings",
    "hamiltonian_value",
    "bracket_flow",
    "transcribed_gradient",
    "RHS_SOURCES",
]

STATE_FIELDS = ("theta", "p_theta", "z", "p_z") + tuple(i.label() for i in MOMENT_ORDER)
RHS_SOURCES = SOURCES + ("transcribed-literal",)
_SLOT = {idx: 4 + k for k, idx in enumerate(MOMENT_ORDER)}
_S = {idx.label(): 4 + k for k, idx in enumerate(MOMENT_ORDER)}


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t_last: float, y_last: np.ndarray):
        super().__init__(f"{message} (last good t={t_last:.6g})")
        self.t_last = t_last
        self.y_last = y_last


def state_vector(state: MomentState, theta_unwound: float | None = None) -> np.ndarray:
    p = state.point
    theta = p.theta if theta_unwound is None else theta_unwound
    return np.array([theta, p.p_theta, p.z, p.p_z, *state.g], dtype=float)


def vector_state(y) -> MomentState:
    return MomentState(PhasePoint(y[0], y[1], y[2], y[3]), tuple(y[4:14]))


# --- generated system ----------------------------------------------------------


class GeneratedSystem:
    """H_Q from the Taylor expansion and moment EOMs from the exact brackets.

    The symbolic pieces (Hamiltonian terms, bracket table) are built once per
    truncation order; numeric coefficients are bound per parameter set.
    """

    def __init__(self, params: SystemParams, max_order: int = 2):
        if max_order != 2:
            raise NotImplementedError("the 14-variable state carries second-order moments only")
        self.params = params
        ham = generated_hamiltonian(max_order)
        R, m = params.R, params.mass
        self.max_c = max(t.c for t in ham.terms) + 1
        self.polys = [derivative_polynomial(c).coeffs for c in range(self.max_c + 1)]
        # (scale, c, alpha, beta, slot); scale includes coef/(2m) R^rpow
        self.terms = [
            (float(t.coef) / (2 * m) * R**t.rpow, t.c, t.alpha, t.beta,
             -1 if t.moment is None else _SLOT[t.moment])
            for t in ham.terms
        ]
        self.table = _bracket_table(max_order, params.hbar)

    def _shapes(self, z: float):
        x = z / self.params.R
        s = sech(x)
        s2, t = s * s, math.tanh(x)
        out = []
        for coeffs in self.polys:
            acc = 0.0
            for c in reversed(coeffs):
                acc = acc * t + c
            out.append(s2 * acc)
        return out

    def hamiltonian(self, y) -> float:
        shapes = self._shapes(y[2])
        pt, pz = y[1], y[3]
        h = 0.0
        for scale, c, al, be, slot in self.terms:
            v = scale * shapes[c] * pt**al * pz**be
            h += v if slot < 0 else v * y[slot]
        return h

    def rhs(self, t, y) -> np.ndarray:
        R = self.params.R
        shapes = self._shapes(y[2])
        pt, pz = y[1], y[3]
        d_pt = d_z = d_pz = 0.0
        dG = {}
        for scale, c, al, be, slot in self.terms:
            g = 1.0 if slot < 0 else y[slot]
            mono = pt**al * pz**be
            if slot >= 0:
                dG[slot] = dG.get(slot, 0.0) + scale * shapes[c] * mono
            d_z += scale * shapes[c + 1] / R * mono * g
            if al:
                d_pt += scale * shapes[c] * al * pt ** (al - 1) * pz**be * g
            if be:
                d_pz += scale * shapes[c] * be * pz ** (be - 1) * pt**al * g
        out = np.zeros(14)
        out[0] = d_pt
        out[1] = 0.0  # H_Q has no theta dependence
        out[2] = d_pz
        out[3] = -d_z
        for i, entries in self.table.items():
            acc = 0.0
            for j, k, coef in entries:
                h = dG.get(j)
                if h is not None:
                    acc += coef * h * (1.0 if k < 0 else y[k])
            out[i] = acc
        return out


@lru_cache(maxsize=None)
def _bracket_table(max_order: int, hbar: float) -> dict:
    """{slot_i: [(slot_j, slot_k, coeff)]} with {G_i, G_j} = sum coeff * G_k."""
    table = {}
    for gi in MOMENT_ORDER:
        entries = []
        for gj in MOMENT_ORDER:
            for (mono, hp), v in moment_bracket(gi, gj, max_order).items():
                if len(mono) > 1:
                    raise AssertionError("products cannot survive second-order truncation")
                k = _SLOT[mono[0]] if mono else -1
                entries.append((_SLOT[gj], k, float(v) * hbar**hp))
        table[_SLOT[gi]] = entries
    return table


@lru_cache(maxsize=64)
def _generated(params: SystemParams) -> GeneratedSystem:
    return GeneratedSystem(params)


def bracket_flow(y, gradient, hbar: float) -> np.ndarray:
    """{f, H} for all 14 variables from the partial derivatives of some H(p_theta, z, p_z, G).

    ``gradient`` is ``(dH/dp_theta, dH/dz, dH/dp_z, {slot: dH/dG})`` with
    slots 4..13 of the state vector; the moment block uses the order-2
    bracket table.
    """
    d_pt, d_z, d_pz, dG = gradient
    out = np.zeros(14)
    out[0], out[2], out[3] = d_pt, d_pz, -d_z
    for i, entries in _bracket_table(2, hbar).items():
        out[i] = sum(coef * dG.get(j, 0.0) * (1.0 if k < 0 else y[k]) for j, k, coef in entries)
    return out


def transcribed_gradient(y, params: SystemParams) -> tuple:
    """Partial derivatives of the printed H_Q by complex-step differentiation."""
    h = 1e-30

    def value(v):
        return sum(_transcribed_parts(v[1], v[2], v[3], dict(zip(MOMENT_ORDER, v[4:14])), params))

    grads = []
    for k in range(1, 14):
        v = np.asarray(y, dtype=complex).copy()
        v[k] += 1j * h
        grads.append(value(v).imag / h)
    return grads[0], grads[1], grads[2], {k: grads[k - 1] for k in range(4, 14)}


def eom_rhs_generated(state: MomentState, params: SystemParams, max_order: int = 2) -> np.ndarray:
    """d/dt of the 14 variables in ``STATE_FIELDS`` order, f' = {f, H_Q}."""
    if max_order != 2:
        raise NotImplementedError("only the second-order closure is tabulated")
    return _generated(params).rhs(0.0, state_vector(state))


# --- transcribed system -----------------------------------------------------------


def _rhs_transcribed(t, y, params: SystemParams, literal: bool = False) -> np.ndarray:
    R, m = params.R, params.mass
    pt, z, pz = y[1], y[2], y[3]
    x = z / R
    s = sech(x)
    s2, th = s * s, math.tanh(x)
    eta = s2 / (2 * m * R**2)
    E = pt**2 + R**2 * pz**2
    C = 2.0 - 3.0 * s2
    g1100, g1010, g1001, g0110, g0101, g0011, g2000, g0200, g0020, g0002 = y[4:14]
    moments = dict(zip(MOMENT_ORDER, y[4:14]))
    HQ = sum(_transcribed_parts(pt, z, pz, moments, params))

    out = np.empty(14)
    out[0] = s2 / (m * R**2) * (pt - 4.0 / R * th * pt * g0110 + 2.0 * pt / R**2 * C * g0020)
    out[1] = 0.0
    # three printed coefficients are corrected unless ``literal``; the
    # corrected system is exactly the bracket flow of the printed H_Q
    zpre = s2 / (m * R**2) if literal else s2 / (m * R)
    out[2] = zpre * (R * pz - 2.0 * th * g0011 + 2.0 * pz / R * C * g0020)
    out[3] = 2.0 / R * th * HQ - 2.0 / (m * R**2) * s2 * s2 * (
        3.0 / R**3 * E * th * g0020 - pz * g0011 - pt**2 / R**2 * g0110
    )
    tr = th / R
    out[4] = 4 * eta * (-tr * pt**2 * g0110 + g0200)
    out[5] = 4 * eta * (-tr * pt**2 * g0020 + R**2 * g1001 + g0110 - R * th * pz * g1010)
    out[6] = 4 * eta * (
        -tr * pt**2 * (g0011 - g1100) + R * th * pz * g1001 + g0101 - E / R**2 * C * g1010
    )
    out[7] = 4 * R * eta * (-th * (pz**2 if literal else pz) * g0110 + R * g0101)
    out[8] = 4 / R * eta * (th * (pt**2 * g0200 + R**2 * pz * g0101) - E / R * C * g0110)
    out[9] = eta * (4 * tr * pt**2 * g0110 + 4 * R**2 * g0002 - 4 * E / R**2 * C * g0020)
    out[10] = eta * (-(4 if literal else 8) * tr * pt**2 * g1010 + 8 * g1100)
    out[11] = 0.0
    out[12] = eta * (-8 * R * th * pz * g0020 + 8 * R**2 * g0011)
    out[13] = eta * (8 * tr * pt**2 * g0101 - 8 * E / R**2 * C * g0011 + 8 * R * th * pz * g0002)
    return out


def eom_rhs_transcribed(state: MomentState, params: SystemParams, literal: bool = False) -> np.ndarray:
    """The printed second-order equations of motion, same layout as ``STATE_FIELDS``.

    By default three coefficients are repaired: the z-dot prefactor is
    sech^2/(mR), the p_z^2 in the G0110 equation is p_z, and the p_theta^2 G1010
    coefficient in the G2000 equation is -8.  ``literal=True`` keeps them as printed.
    """
    return _rhs_transcribed(0.0, state_vector(state), params, literal)


def _rhs_function(source: str, params: SystemParams) -> Callable:
    if source == "generated":
        return _generated(params).rhs
    if source == "transcribed":
        return lambda t, y: _rhs_transcribed(t, y, params)
    if source == "transcribed-literal":
        return lambda t, y: _rhs_transcribed(t, y, params, literal=True)
    raise ValueError(f"unknown rhs source {source!r}; expected one of {RHS_SOURCES}")


def hamiltonian_value(y, params: SystemParams, source: str) -> float:
    if source == "generated":
        return _generated(params).hamiltonian(y)
    return sum(_transcribed_parts(y[1], y[2], y[3], dict(zip(MOMENT_ORDER, y[4:14])), params))


# --- integration -----------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # (n_samples, 14), theta unwound
    H_Q: np.ndarray
    U_theta: np.ndarray
    U_z: np.ndarray
    metadata: dict
    dense: Callable = field(repr=False)
    step_times: np.ndarray = field(repr=False)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def theta(self) -> np.ndarray:
        return (self.y[:, 0] + np.pi) % (2 * np.pi) - np.pi

    def column(self, name: str) -> np.ndarray:
        return self.y[:, STATE_FIELDS.index(name)]

    def state_at(self, t: float) -> MomentState:
        if not (0.0 <= t <= self.t_end):
            raise ValueError(f"t={t} outside trajectory [0, {self.t_end}]")
        y = self.y[0] if t == 0 else self.dense(t)
        return vector_state(y)

    def zdot(self, t: float) -> float:
        return float(self.metadata["_rhs"](t, self.dense(t))[2])


def default_horizon(state0: MomentState, params: SystemParams, cap: float = 5.0) -> float:
    """Time for the classical analogue to cover 4*z0 at its initial speed, capped."""
    p = state0.point
    speed = sech(p.z / params.R) ** 2 * abs(p.p_z) / params.mass
    if speed == 0 or p.z == 0:
        return cap
    return min(cap, 4.0 * abs(p.z) / speed)


def integrate(
    state0: MomentState,
    params: SystemParams,
    T: float,
    rhs_source: str = "generated",
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-10,
    sample_dt: float = 1e-3,
    z_far: float | None = None,
    stop_on_verdict: bool = False,
    method: str = "DOP853",
) -> Trajectory:
    """Adaptive embedded Runge-Kutta integration with dense output.

    With ``stop_on_verdict`` the run ends as soon as the particle reaches
    ``-z_far`` or comes back above its starting height.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not (abs_tol > 0 and rel_tol > 0):
        raise ValueError("tolerances must be positive")
    fun = _rhs_function(rhs_source, params)
    y0 = state_vector(state0)
    z0 = y0[2]
    z_far = abs(z0) if z_far is None else z_far

    def checked(t, y):
        dy = fun(t, y)
        if not np.all(np.isfinite(dy)):
            raise FloatingPointError(f"non-finite derivative at t={t}")
        return dy

    events = []
    if stop_on_verdict:
        def far(t, y):
            return y[2] + z_far
        far.terminal, far.direction = True, -1.0

        def back(t, y):
            return y[2] - z0 - _return_margin(z0)
        back.terminal, back.direction = True, 1.0
        events = [far, back]

    try:
        sol = solve_ivp(checked, (0.0, T), y0, method=method, rtol=rel_tol, atol=abs_tol,
                        dense_output=True, events=events or None)
    except FloatingPointError as exc:
        raise IntegrationError(str(exc), 0.0, y0) from exc
    if sol.status == -1 or not np.all(np.isfinite(sol.y)):
        finite = np.all(np.isfinite(sol.y), axis=0)
        last = int(np.nonzero(finite)[0][-1]) if finite.any() else 0
        raise IntegrationError(sol.message, float(sol.t[last]), sol.y[:, last])

    t_end = float(sol.t[-1])
    n = int(math.floor(t_end / sample_dt + 1e-9))
    ts = np.arange(n + 1) * sample_dt
    if t_end - ts[-1] > 1e-12:
        ts = np.append(ts, t_end)
    ys = sol.sol(ts).T
    ys[0] = y0
    H = np.array([hamiltonian_value(y, params, rhs_source) for y in ys])
    U_th = ys[:, _S["G2000"]] * ys[:, _S["G0200"]] - ys[:, _S["G1100"]] ** 2
    U_z = ys[:, _S["G0020"]] * ys[:, _S["G0002"]] - ys[:, _S["G0011"]] ** 2
    meta = {
        "params": params,
        "rhs_source": rhs_source,
        "abs_tol": abs_tol,
        "rel_tol": rel_tol,
        "T": T,
        "z0": z0,
        "z_far": z_far,
        "method": method,
        "n_steps": len(sol.t) - 1,
        "terminated_by": _terminal_event(sol, stop_on_verdict),
        "_rhs": fun,
    }
    return Trajectory(ts, ys, H, U_th, U_z, meta, sol.sol, np.asarray(sol.t))


def _terminal_event(sol, stop_on_verdict: bool) -> str | None:
    if sol.status != 1 or not stop_on_verdict:
        return None
    for name, times in zip(("far", "back"), sol.t_events):
        if len(times):
            return name
    return None


def _return_margin(z0: float) -> float:
    return 1e-9 * max(1.0, abs(z0))


# --- classification --------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    verdict: str  # "Reflected" | "Transmitted" | "Undetermined"
    crossing_time: float | None
    turning_time: float | None
    min_z: float
    max_excursion: float
    note: str = ""

    def __post_init__(self):
        if self.verdict == "Transmitted" and self.crossing_time is None:
            raise ValueError("a transmitted verdict needs a throat-crossing time")


def _roots(traj: Trajectory, func: Callable[[float], float], direction: int,
           t_min: float = 0.0, first: bool = True, subdivide: int = 4) -> list[float]:
    """Roots of func(t) on the dense output, located step by step with brentq."""
    grid = []
    st = traj.step_times
    for a, b in zip(st[:-1], st[1:]):
        grid.extend(np.linspace(a, b, subdivide + 1)[:-1])
    grid.append(st[-1])
    out = []
    prev_t, prev_f = None, None
    for t in grid:
        if t < t_min:
            continue
        f = func(t)
        if prev_t is not None:
            up = prev_f < 0 <= f
            down = prev_f > 0 >= f
            if (direction > 0 and up) or (direction < 0 and down) or (direction == 0 and (up or down)):
                root = t if f == 0 else brentq(func, prev_t, t, xtol=1e-14, rtol=1e-12)
                out.append(root)
                if first:
                    return out
        prev_t, prev_f = t, f
    return out


def throat_crossings(traj: Trajectory) -> list[float]:
    return _roots(traj, lambda t: float(traj.dense(t)[2]), 0, first=False)


def turning_points(traj: Trajectory) -> list[float]:
    """Times where z-dot changes sign."""
    return _roots(traj, traj.zdot, 0, first=False)


def classify(traj: Trajectory, z_far: float | None = None) -> Classification:
    z0 = traj.metadata["z0"]
    z_far = abs(z0) if z_far is None else z_far
    z = traj.column("z")
    min_z = float(min(z.min(), *(traj.dense(t)[2] for t in traj.step_times)))
    max_exc = float(np.max(np.abs(z - z0)))

    zf = lambda t: float(traj.dense(t)[2])
    far = _roots(traj, lambda t: zf(t) + z_far, -1)
    t_far = far[0] if far else None

    if traj.zdot(0.0) >= 0:
        t_turn = 0.0
    else:
        turns = _roots(traj, traj.zdot, +1)
        t_turn = turns[0] if turns else None
    t_back = None
    if t_turn is not None:
        back = _roots(traj, lambda t: zf(t) - z0 - _return_margin(z0), +1, t_min=t_turn)
        t_back = back[0] if back else None

    down = _roots(traj, zf, -1)
    t_cross = down[0] if down else None

    # a run stopped by its own event ends on the root, where the sign test above
    # may see a value a rounding error short of zero
    ended = traj.metadata.get("terminated_by")
    if ended == "far" and t_far is None:
        t_far = traj.t_end
    elif ended == "back" and t_back is None and t_turn is not None:
        t_back = traj.t_end

    if t_far is not None and (t_back is None or t_far < t_back):
        return Classification("Transmitted", t_cross, t_turn, min_z, max_exc)
    if t_back is not None:
        return Classification("Reflected", t_cross, t_turn, min_z, max_exc)
    return Classification("Undetermined", t_cross, t_turn, min_z, max_exc)


@dataclass(frozen=True)
class RunOutcome:
    classification: Classification
    trajectory: Trajectory | None
    failure: IntegrationError | None = None


def run_and_classify(state0: MomentState, params: SystemParams, T: float | None = None,
                     rhs_source: str = "generated", abs_tol: float = 1e-10,
                     rel_tol: float = 1e-10, sample_dt: float = 1e-3,
                     z_far: float | None = None) -> RunOutcome:
    """Integrate until a verdict or the horizon; a solver breakdown yields Undetermined.

    Before the breakdown the run is re-integrated up to the last good time so
    the diagnostics still describe the trajectory that was followed.
    """
    T = default_horizon(state0, params) if T is None else T
    kw = dict(rhs_source=rhs_source, abs_tol=abs_tol, rel_tol=rel_tol, sample_dt=sample_dt, z_far=z_far)
    try:
        traj = integrate(state0, params, T, stop_on_verdict=True, **kw)
    except IntegrationError as exc:
        t_stop = 0.99 * exc.t_last
        if t_stop <= 0:
            c = Classification("Undetermined", None, None, state0.point.z, 0.0, note=f"diverged: {exc}")
            return RunOutcome(c, None, exc)
        traj = integrate(state0, params, t_stop, stop_on_verdict=True, **kw)
        c = classify(traj, z_far)
        if c.verdict == "Undetermined":
            c = replace(c, note=f"diverged at t={exc.t_last:.6g}")
        return RunOutcome(c, traj, exc)
    return RunOutcome(classify(traj, z_far), traj)


# --- monitors ----------------------------------------------------------------------


@dataclass(frozen=True)
class DriftReport:
    drift_H: float
    drift_p_theta: float
    drift_G0200: float
    min_U_theta: float
    min_U_z: float
    floor_violation_theta: float
    floor_violation_z: float
    moment_block_zero: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _rel_drift(x: np.ndarray) -> float:
    ref = x[0]
    dev = float(np.max(np.abs(x - ref)))
    return dev / abs(ref) if ref != 0 else dev


def conserved_report(traj: Trajectory, tol: float = 1e-6) -> DriftReport:
    hbar = traj.metadata["params"].hbar
    floor = hbar**2 / 4 * (1 - tol)
    block_zero = bool(np.all(traj.y[:, 4:] == 0.0))
    if block_zero:
        v_th = v_z = 0.0
    else:
        v_th = float(max(0.0, floor - traj.U_theta.min()))
        v_z = float(max(0.0, floor - traj.U_z.min()))
    return DriftReport(
        drift_H=_rel_drift(traj.H_Q),
        drift_p_theta=_rel_drift(traj.column("p_theta")),
        drift_G0200=_rel_drift(traj.column("G0200")),
        min_U_theta=float(traj.U_theta.min()),
        min_U_z=float(traj.U_z.min()),
        floor_violation_theta=v_th,
        floor_violation_z=v_z,
        moment_block_zero=block_zero,
    )


_ODD = np.array([False, True, False, True] + [(i.b + i.d) % 2 == 1 for i in MOMENT_ORDER])


def time_reversed(state: MomentState) -> MomentState:
    """Flip both momenta and every moment with an odd number of momentum factors."""
    y = state_vector(state)
    y[_ODD] *= -1
    return vector_state(y)


@dataclass(frozen=True)
class VerdictFlip:
    """Where a sweep leaves the verdict it started with."""

    last_before: float | None
    first_after: float | None
    monotone: bool  # exactly one change of verdict, none after it
    before: str
    after: str | None

    @property
    def midpoint(self) -> float | None:
        if self.last_before is None or self.first_after is None:
            return None
        return 0.5 * (self.last_before + self.first_after)


def verdict_flip(grid, verdicts) -> VerdictFlip:
    """Locate the first verdict change along an increasing parameter grid."""
    if len(grid) != len(verdicts) or not len(grid):
        raise ValueError("grid and verdicts must be non-empty and of equal length")
    first = verdicts[0]
    k = next((i for i, v in enumerate(verdicts) if v != first), None)
    if k is None:
        return VerdictFlip(None, None, True, first, None)
    rest = verdicts[k:]
    return VerdictFlip(float(grid[k - 1]), float(grid[k]), all(v == rest[0] for v in rest), first, rest[0])
