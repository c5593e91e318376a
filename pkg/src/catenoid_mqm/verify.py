"""Cross-checks behind the ``verify`` command.

Every check returns a :class:`Check`.  ``normative`` checks decide the exit
status; informational ones only document where the printed formulas and the
derived ones part ways.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import product

import numpy as np

from . import weyl_oracle
from .catenoid import (
    MOMENT_ORDER,
    MomentState,
    PhasePoint,
    SystemParams,
    canonical_transform,
    classical_hamiltonian,
    effective_hamiltonian,
    generated_hamiltonian,
    kamiltonian,
    sech,
    symplectic_form,
    transform_jacobian,
    classical_transmission_threshold,
)
from .dynamics import (
    STATE_FIELDS,
    bracket_flow,
    eom_rhs_generated,
    eom_rhs_transcribed,
    run_and_classify,
    state_vector,
    transcribed_gradient,
)
from .initial_states import GaussianPacket, packet_from_paper_defaults, select_measure
from .moment_algebra import (
    MomentCombination,
    combination_bracket,
    derivative_polynomial,
    derivative_polynomial_paper_form,
    indices_of_order,
    moment_bracket,
    moment_bracket_printed,
)

FD_ABSCISSAE = (0.0, 0.3, 1.0, 2.0)


@dataclass
class Check:
    name: str
    normative: bool
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.normative else "INFO"
        return f"[{tag}] {self.name}"


def _indices(max_order: int, min_order: int = 1):
    return [i for o in range(min_order, max_order + 1) for i in indices_of_order(o)]


# --- (i) bracket engine ------------------------------------------------------------


def check_antisymmetry(max_order: int = 4) -> Check:
    idx = _indices(max_order)
    bad = [(x.label(), y.label()) for x in idx for y in idx
           if moment_bracket(x, y, 2 * max_order) != -moment_bracket(y, x, 2 * max_order)]
    return Check("bracket antisymmetry, order <= %d" % max_order, True, not bad,
                 {"pairs": len(idx) ** 2, "failures": bad[:10]})


def check_closure() -> Check:
    bad = []
    for x, y in product(indices_of_order(2), repeat=2):
        for (mono, _), _v in moment_bracket(x, y, 2).items():
            if len(mono) != 1 or mono[0].order != 2:
                bad.append((x.label(), y.label()))
    return Check("bracket closure on order 2", True, not bad, {"failures": bad[:10]})


def check_jacobi() -> Check:
    idx = indices_of_order(2)
    one = {i: MomentCombination.moment(i) for i in idx}
    bad = []
    for x, y, z in product(idx, repeat=3):
        total = (combination_bracket(one[x], moment_bracket(y, z, 2), 2)
                 + combination_bracket(one[y], moment_bracket(z, x, 2), 2)
                 + combination_bracket(one[z], moment_bracket(x, y, 2), 2))
        if not total.is_zero():
            bad.append((x.label(), y.label(), z.label()))
    return Check("Jacobi identity on order-2 triples", True, not bad,
                 {"triples": len(idx) ** 3, "failures": bad[:10]})


def check_oracle(max_order: int = 3) -> Check:
    idx = _indices(max_order)
    bad = []
    for x, y in product(idx, repeat=2):
        ours = dict(moment_bracket(x, y, 2 * max_order).items())
        ref = dict(weyl_oracle.central_bracket(tuple(x), tuple(y)))
        if ours != ref:
            bad.append((x.label(), y.label()))
    return Check("brackets equal the commutator oracle, order <= %d" % max_order, True, not bad,
                 {"pairs": len(idx) ** 2, "failures": bad[:10]})


def report_printed_bracket(max_order: int = 3) -> Check:
    # order-1 moments vanish identically, so only order >= 2 pairs are informative
    idx = _indices(max_order, min_order=2)
    real_diff, imag_nonzero, examples = 0, 0, []
    for x, y in product(idx, repeat=2):
        real, imag = moment_bracket_printed(x, y, 2 * max_order)
        ours = moment_bracket(x, y, 2 * max_order)
        if real != ours:
            real_diff += 1
            if len(examples) < 5:
                examples.append({"pair": f"{{{x.label()}, {y.label()}}}",
                                 "as_printed": repr(real), "commutator": repr(ours)})
        if not imag.is_zero():
            imag_nonzero += 1
    return Check("printed bracket formula vs commutator", False, True,
                 {"pairs": len(idx) ** 2, "real_part_differs": real_diff,
                  "imaginary_residue": imag_nonzero, "examples": examples})


# --- (ii) Hamiltonians and right-hand sides ----------------------------------------------


def hessian_hamiltonian(p_theta: float, z: float, p_z: float, moments: dict, params: SystemParams) -> float:
    """H + (1/2) tr(Hess H . Sigma) with the Hessian of the classical Hamiltonian worked out by hand."""
    R, m = params.R, params.mass
    s2, t = sech(z / R) ** 2, math.tanh(z / R)
    E = p_theta**2 + R**2 * p_z**2
    H = s2 * E / (2 * m * R**2)
    h_tt = s2 / (m * R**2)
    h_pp = s2 / m
    h_tz = -2 * t * s2 * p_theta / (m * R**3)
    h_pz = -2 * t * s2 * p_z / (m * R)
    h_zz = s2 * (6 * t * t - 2) * E / (2 * m * R**4)
    g = {k.label(): v for k, v in moments.items()}
    return H + 0.5 * (h_tt * g["G0200"] + h_pp * g["G0002"] + h_zz * g["G0020"]) + (
        h_tz * g["G0110"] + h_pz * g["G0011"])


def _random_states(rng, n):
    for _ in range(n):
        pt, z, pz = rng.uniform(-3, 3), rng.uniform(-1.5, 1.5), rng.uniform(-5, 5)
        g = rng.normal(size=10)
        yield MomentState(PhasePoint(rng.uniform(-math.pi, math.pi), pt, z, pz), tuple(g))


def check_generated_hamiltonian(params: SystemParams, rng, n: int = 100) -> Check:
    worst = 0.0
    for st in _random_states(rng, n):
        p = st.point
        ours = effective_hamiltonian(st, params, "generated")
        ref = hessian_hamiltonian(p.p_theta, p.z, p.p_z, st.moments(), params)
        worst = max(worst, abs(ours - ref) / max(abs(ref), 1e-300))
    return Check("generated H_Q equals the hand-derived Hessian form", True, worst < 1e-12,
                 {"states": n, "max_rel_error": worst})


def _moment_coefficients(state: MomentState, params: SystemParams, source: str) -> dict:
    """dH_Q/dG for every moment at the given state."""
    y = state_vector(state)
    if source == "generated":
        _, _, _, dG = generated_hamiltonian(2).gradient(y[1], y[2], y[3], state.moments(), params)
        return {k.label(): v for k, v in dG.items()}
    _, _, _, dG = transcribed_gradient(y, params)
    return {STATE_FIELDS[k]: v for k, v in dG.items()}


def report_hamiltonian_terms(params: SystemParams, rng, n: int = 100) -> Check:
    """Ratio of printed to generated dH_Q/dG per moment, and its dependence on p_theta."""
    ratios = {k.label(): [] for k in MOMENT_ORDER}
    over_pt = {k.label(): [] for k in MOMENT_ORDER}
    diffs = []
    for st in _random_states(rng, n):
        gen = _moment_coefficients(st, params, "generated")
        tra = _moment_coefficients(st, params, "transcribed")
        for k in ratios:
            if gen.get(k, 0.0) != 0.0:
                r = tra.get(k, 0.0) / gen[k]
                ratios[k].append(r)
                over_pt[k].append(r / st.point.p_theta)
        diffs.append(abs(effective_hamiltonian(st, params, "generated")
                         - effective_hamiltonian(st, params, "transcribed")))
    summary = {}
    for k, rs in ratios.items():
        if not rs:
            continue
        rs = np.array(rs)
        if np.ptp(rs) < 1e-9:
            summary[k] = f"printed/generated = {rs[0]:.12g}"
        elif np.ptp(over_pt[k]) < 1e-9:
            summary[k] = f"printed/generated = {over_pt[k][0]:.12g} * p_theta"
        else:
            summary[k] = f"printed/generated varies, range [{rs.min():.6g}, {rs.max():.6g}]"
    return Check("H_Q term diff, printed vs generated", False, True,
                 {"states": n, "max_abs_H_diff": float(max(diffs)), "coefficient_ratio": summary})


def report_rhs_diff(params: SystemParams, rng, n: int = 100) -> Check:
    gen_vs_tra = np.zeros(14)
    lit_vs_flow = np.zeros(14)
    fix_vs_flow = np.zeros(14)
    for st in _random_states(rng, n):
        y = state_vector(st)
        g = eom_rhs_generated(st, params)
        t = eom_rhs_transcribed(st, params)
        lit = eom_rhs_transcribed(st, params, literal=True)
        flow = bracket_flow(y, transcribed_gradient(y, params), params.hbar)
        scale = np.maximum(np.abs(flow), 1.0)
        gen_vs_tra = np.maximum(gen_vs_tra, np.abs(g - t))
        lit_vs_flow = np.maximum(lit_vs_flow, np.abs(lit - flow) / scale)
        fix_vs_flow = np.maximum(fix_vs_flow, np.abs(t - flow) / scale)
    named = lambda v, tol=0.0: {f: float(x) for f, x in zip(STATE_FIELDS, v) if x > tol}
    return Check("RHS diff: generated, transcribed, printed-as-is", False, True, {
        "states": n,
        "max_abs_generated_minus_transcribed": named(gen_vs_tra),
        "printed_as_is_vs_flow_of_printed_H_Q": named(lit_vs_flow, 1e-9),
        "repaired_vs_flow_of_printed_H_Q_max": float(fix_vs_flow.max()),
    })


def check_repaired_transcribed_is_hamiltonian(params: SystemParams, rng, n: int = 100) -> Check:
    worst = 0.0
    for st in _random_states(rng, n):
        y = state_vector(st)
        flow = bracket_flow(y, transcribed_gradient(y, params), params.hbar)
        t = eom_rhs_transcribed(st, params)
        worst = max(worst, float(np.max(np.abs(t - flow) / np.maximum(np.abs(flow), 1.0))))
    return Check("repaired transcribed RHS is the bracket flow of the printed H_Q", True, worst < 1e-10,
                 {"states": n, "max_rel_error": worst})


def check_zero_moment_rhs(params: SystemParams, rng, n: int = 50) -> Check:
    worst = 0.0
    R, m = params.R, params.mass
    for st in _random_states(rng, n):
        p = st.point
        s2, t = sech(p.z / R) ** 2, math.tanh(p.z / R)
        geo = np.zeros(14)
        geo[0] = s2 * p.p_theta / (m * R**2)
        geo[2] = s2 * p.p_z / m
        geo[3] = t * s2 * (p.p_theta**2 + R**2 * p.p_z**2) / (m * R**3)
        bare = MomentState(st.point)
        for rhs in (eom_rhs_generated(bare, params), eom_rhs_transcribed(bare, params)):
            worst = max(worst, float(np.max(np.abs(rhs - geo))))
    return Check("zero moments give the geodesic RHS (both sources)", True, worst < 1e-12,
                 {"states": n, "max_abs_error": worst})


# --- (iii) derivative polynomials ------------------------------------------------------


def _sech2_decimal(x: Decimal) -> Decimal:
    e = x.exp()
    return 4 / (e + 1 / e) ** 2


def central_difference(n: int, x: float, h: str = "1e-8", digits: int = 80) -> float:
    """n-th central difference of sech^2 at x, carried out in high-precision decimal."""
    with localcontext() as ctx:
        ctx.prec = digits
        X, H = Decimal(x), Decimal(h)
        acc = Decimal(0)
        for k in range(n + 1):
            acc += (-1) ** k * math.comb(n, k) * _sech2_decimal(X + (Decimal(n) / 2 - k) * H)
        return float(acc / H**n)


def check_derivative_polynomials(n_max: int = 6) -> Check:
    worst, rows = 0.0, []
    for n in range(n_max + 1):
        q = derivative_polynomial(n)
        for x in FD_ABSCISSAE:
            exact = sech(x) ** 2 * q(math.tanh(x))
            fd = central_difference(n, x)
            err = abs(exact - fd) / max(abs(exact), 1e-12) if exact else abs(fd)
            worst = max(worst, err)
            rows.append((n, x, exact, fd))
    return Check("derivative polynomials vs central differences, n <= %d" % n_max, True, worst < 1e-6,
                 {"max_rel_error": worst, "abscissae": FD_ABSCISSAE})


def report_closed_form(n_max: int = 6) -> Check:
    rows = {}
    for n in range(n_max + 1):
        q, pf = derivative_polynomial(n), derivative_polynomial_paper_form(n)
        if q.coeffs == pf.coeffs:
            continue
        rel = "negated" if (-q).coeffs == pf.coeffs else "differs"
        rows[n] = {"recurrence": str(q), "closed_form": str(pf), "relation": rel}
    return Check("closed-form derivative polynomials vs recurrence", False, True,
                 {"discrepant_orders": rows})


# --- (iv) canonical transformation -----------------------------------------------------


def check_canonical(params: SystemParams, rng, n: int = 1000) -> tuple[Check, Check]:
    omega = symplectic_form(2)
    worst_j, worst_k = 0.0, 0.0
    for _ in range(n):
        th, z = rng.uniform(-math.pi, math.pi), rng.uniform(-2, 2)
        pt, pz = rng.uniform(-5, 5), rng.uniform(-5, 5)
        J = transform_jacobian(th, pt, z, pz, params)
        worst_j = max(worst_j, float(np.max(np.abs(J.T @ omega @ J - omega))))
        p = PhasePoint(th, pt, z, pz)
        H = classical_hamiltonian(p, params)
        K = kamiltonian(canonical_transform(p, params), params)
        worst_k = max(worst_k, abs(K - H) / abs(H))
    return (
        Check("canonical map is symplectic", True, worst_j < 1e-10, {"points": n, "max_abs_error": worst_j}),
        Check("transformed Hamiltonian equals H", True, worst_k < 1e-12, {"points": n, "max_rel_error": worst_k}),
    )


# --- (v) initial data ------------------------------------------------------------------------


def check_measures(params: SystemParams, packet: GaussianPacket | None = None) -> tuple[Check, Check]:
    packet = packet or packet_from_paper_defaults()[0]
    best, rows = select_measure(packet, params)
    ok = best["G0002_rel_residual"] < 1e-3 and best["G0020_rel_residual"] < 1e-3
    return (
        Check("a measure reproduces the listed G0002 and the G0020 closed form", True, ok,
              {"selected": best}),
        Check("G0002 residuals by measure", False, True, {"rows": rows}),
    )


def report_classical_bounce(params: SystemParams) -> Check:
    st = MomentState(PhasePoint(0.0, 1.0, 1.0, -1.0))
    out = run_and_classify(st, params, 5.0, "generated")
    return Check("classical a=1 run", False, True, {
        "verdict": out.classification.verdict,
        "min_z": out.classification.min_z,
        "threshold": classical_transmission_threshold(1.0, 1.0, params),
    })


def run_all(params: SystemParams | None = None, seed: int = 0, points: int = 1000) -> list[Check]:
    params = params or SystemParams()
    rng = np.random.default_rng(seed)
    checks = [check_antisymmetry(), check_closure(), check_jacobi(), check_oracle(), report_printed_bracket()]
    checks += [
        check_generated_hamiltonian(params, rng),
        report_hamiltonian_terms(params, rng),
        report_rhs_diff(params, rng),
        check_repaired_transcribed_is_hamiltonian(params, rng),
        check_zero_moment_rhs(params, rng),
        check_derivative_polynomials(),
        report_closed_form(),
        *check_canonical(params, rng, points),
        *check_measures(params),
        report_classical_bounce(params),
    ]
    return checks


def _fmt(v, indent: int) -> list[str]:
    pad = " " * indent
    if isinstance(v, dict):
        out = []
        for k, x in v.items():
            if isinstance(x, (dict, list)) and x:
                out.append(f"{pad}{k}:")
                out += _fmt(x, indent + 2)
            else:
                out.append(f"{pad}{k}: {_scalar(x)}")
        return out
    if isinstance(v, list):
        out = []
        for x in v:
            if isinstance(x, dict):
                sub = _fmt(x, indent + 2)
                out.append(pad + "- " + sub[0].lstrip())
                out += sub[1:]
            else:
                out.append(f"{pad}- {_scalar(x)}")
        return out
    return [pad + _scalar(v)]


def _scalar(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, Fraction):
        return str(x)
    return str(x)


def format_report(checks: list[Check]) -> str:
    lines = []
    for c in checks:
        lines.append(c.line())
        lines += _fmt(c.detail, 4)
    normative = [c for c in checks if c.normative]
    failed = [c for c in normative if not c.passed]
    lines.append(f"normative checks: {len(normative) - len(failed)}/{len(normative)} passed")
    return "\n".join(lines) + "\n"
