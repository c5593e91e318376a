"""Brute-force commutator oracle for brackets of central moments.

Works directly with operators: each sector is a polynomial in ``q, p`` kept in
standard order (all ``q`` left of ``p``), built letter by letter using only
``p q = q p - i hbar``.  Weyl products are averages over every arrangement of
the letters.  Nothing here shares code with :mod:`moment_algebra`.

Coefficients are polynomials in ``u = i*hbar`` with rational coefficients,
stored as ``{power_of_u: Fraction}``.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb

Poly = dict  # {power_of_u: Fraction}
SectorOp = dict  # {(i, j): Poly} for q^i p^j
Op = dict  # {(i, j, k, l): Poly}


def _padd(x: Poly, y: Poly, scale: Fraction = Fraction(1), shift: int = 0) -> None:
    for k, v in y.items():
        x[k + shift] = x.get(k + shift, Fraction(0)) + scale * v


def _pmul(x: Poly, y: Poly) -> Poly:
    out: Poly = {}
    for k1, v1 in x.items():
        for k2, v2 in y.items():
            out[k1 + k2] = out.get(k1 + k2, Fraction(0)) + v1 * v2
    return {k: v for k, v in out.items() if v}


def _clean(op: dict) -> dict:
    out = {}
    for k, poly in op.items():
        poly = {e: v for e, v in poly.items() if v}
        if poly:
            out[k] = poly
    return out


def _times_letter(op: SectorOp, letter: str) -> SectorOp:
    out: dict = defaultdict(dict)
    for (i, j), poly in op.items():
        if letter == "p":
            _padd(out[(i, j + 1)], poly)
        else:
            # q^i p^j q = q^{i+1} p^j - j u q^i p^{j-1}
            _padd(out[(i + 1, j)], poly)
            if j:
                _padd(out[(i, j - 1)], poly, Fraction(-j), shift=1)
    return _clean(out)


@lru_cache(maxsize=None)
def _sector_weyl(i: int, j: int) -> tuple:
    """Weyl-symmetrised q^i p^j, averaged over all C(i+j, i) words."""
    n = i + j
    acc: dict = defaultdict(dict)
    words = 0
    for qpos in combinations(range(n), i):
        op: SectorOp = {(0, 0): {0: Fraction(1)}}
        for pos in range(n):
            op = _times_letter(op, "q" if pos in qpos else "p")
        for k, poly in op.items():
            _padd(acc[k], poly)
        words += 1
    scale = Fraction(1, words)
    return tuple(sorted((k, tuple(sorted((e, v * scale) for e, v in poly.items() if v)))
                        for k, poly in acc.items()))


def _sector_op(i: int, j: int) -> SectorOp:
    return {k: dict(poly) for k, poly in _sector_weyl(i, j)}


def _sector_mul(x: SectorOp, y: SectorOp) -> SectorOp:
    out: dict = defaultdict(dict)
    for (i1, j1), p1 in x.items():
        for (i2, j2), p2 in y.items():
            op: SectorOp = {(i1, j1): {0: Fraction(1)}}
            for _ in range(i2):
                op = _times_letter(op, "q")
            for _ in range(j2):
                op = _times_letter(op, "p")
            coeff = _pmul(p1, p2)
            for k, poly in op.items():
                _padd(out[k], _pmul(poly, coeff))
    return _clean(out)


def weyl_operator(idx) -> Op:
    """Weyl-ordered theta^a P_theta^b z^c P_z^d in standard-ordered form."""
    a, b, c, d = idx
    s0, s1 = _sector_op(a, b), _sector_op(c, d)
    out = {}
    for (i, j), p0 in s0.items():
        for (k, l), p1 in s1.items():
            out[(i, j, k, l)] = _pmul(p0, p1)
    return out


def _op_mul(x: Op, y: Op) -> Op:
    # sectors commute, so multiply sector-wise
    out: dict = defaultdict(dict)
    for (i1, j1, k1, l1), p1 in x.items():
        for (i2, j2, k2, l2), p2 in y.items():
            s0 = _sector_mul({(i1, j1): {0: Fraction(1)}}, {(i2, j2): {0: Fraction(1)}})
            s1 = _sector_mul({(k1, l1): {0: Fraction(1)}}, {(k2, l2): {0: Fraction(1)}})
            coeff = _pmul(p1, p2)
            for (i, j), q0 in s0.items():
                for (k, l), q1 in s1.items():
                    _padd(out[(i, j, k, l)], _pmul(coeff, _pmul(q0, q1)))
    return _clean(out)


def _to_weyl_basis(op: Op) -> dict:
    """Rewrite a standard-ordered operator as a sum of Weyl-ordered monomials."""
    op = _clean({k: dict(v) for k, v in op.items()})
    result: dict = {}
    while op:
        key = max(op, key=lambda k: (sum(k), k))
        coeff = dict(op[key])
        result[key] = coeff
        for k, poly in weyl_operator(key).items():
            cur = op.setdefault(k, {})
            _padd(cur, _pmul(poly, coeff), Fraction(-1))
        op = _clean(op)
    return result


@lru_cache(maxsize=None)
def raw_bracket(A: tuple, B: tuple) -> tuple:
    """{<W_A>, <W_B>} = <[W_A, W_B]> / (i hbar), in Weyl moments ``M^{ijkl}``.

    Returns sorted ``((index, hbar_power), Fraction)`` pairs.  Raises if an
    imaginary part survives.
    """
    wa, wb = weyl_operator(A), weyl_operator(B)
    ab, ba = _op_mul(wa, wb), _op_mul(wb, wa)
    comm = {k: dict(v) for k, v in ab.items()}
    for k, v in ba.items():
        _padd(comm.setdefault(k, {}), v, Fraction(-1))
    out = {}
    for key, poly in _to_weyl_basis(comm).items():
        for upow, v in poly.items():
            if not v:
                continue
            if upow == 0:
                raise AssertionError("commutator has a u^0 term")
            e = upow - 1  # divide by u
            if e % 2:
                raise AssertionError(f"imaginary residue in [{A}, {B}]")
            # u^e = (i hbar)^e = (-1)^{e/2} hbar^e
            out[(key, e)] = out.get((key, e), Fraction(0)) + v * (-1) ** (e // 2)
    return tuple(sorted((k, v) for k, v in out.items() if v))


# --- central moments as polynomials in raw Weyl moments ----------------------
# A polynomial is {(sorted tuple of raw indices, hbar_power): Fraction}.

_UNIT = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))


def _central_poly(idx) -> dict:
    """G^{idx} = <prod (x_i - <x_i>)^{n_i}> expanded in raw moments."""
    out: dict = defaultdict(Fraction)
    for js in product(*(range(n + 1) for n in idx)):
        coeff = Fraction(1)
        mono = []
        for i, (n, j) in enumerate(zip(idx, js)):
            coeff *= comb(n, j) * (-1) ** (n - j)
            mono += [_UNIT[i]] * (n - j)
        if any(js):
            mono.append(tuple(js))
        out[(tuple(sorted(mono)), 0)] += coeff
    return {k: v for k, v in out.items() if v}


def _pmul_m(x: dict, y: dict) -> dict:
    out: dict = defaultdict(Fraction)
    for (m1, h1), v1 in x.items():
        for (m2, h2), v2 in y.items():
            out[(tuple(sorted(m1 + m2)), h1 + h2)] += v1 * v2
    return out


def _derivative(poly: dict, var: tuple) -> dict:
    out: dict = defaultdict(Fraction)
    for (mono, h), v in poly.items():
        cnt = mono.count(var)
        if cnt:
            lst = list(mono)
            lst.remove(var)
            out[(tuple(lst), h)] += v * cnt
    return out


def _at_origin(poly: dict) -> dict:
    """Set all first moments <x_i> to zero."""
    out: dict = defaultdict(Fraction)
    for (mono, h), v in poly.items():
        if any(m in _UNIT for m in mono):
            continue
        out[(tuple(m for m in mono if any(m)), h)] += v
    return {k: v for k, v in out.items() if v}


@lru_cache(maxsize=None)
def central_bracket(i1: tuple, i2: tuple) -> tuple:
    """{G^{i1}, G^{i2}} by the Leibniz rule over raw moments, evaluated at <x> = 0.

    The bracket of two central moments is translation invariant, so its
    value at vanishing first moments determines it as a polynomial in
    central moments (where raw and central moments coincide).
    Returned as sorted ``((monomial, hbar_power), Fraction)`` pairs with
    monomials as sorted tuples of 4-tuples.
    """
    f, g = _central_poly(tuple(i1)), _central_poly(tuple(i2))
    fvars = {m for (mono, _), _v in f.items() for m in mono}
    gvars = {m for (mono, _), _v in g.items() for m in mono}
    acc: dict = defaultdict(Fraction)
    for v in fvars:
        df = _derivative(f, v)
        for w in gvars:
            br = raw_bracket(v, w)
            if not br:
                continue
            dg = _derivative(g, w)
            brp = {((k,) if any(k) else (), h): c for (k, h), c in br}
            for k, c in _pmul_m(_pmul_m(df, dg), brp).items():
                acc[k] += c
    res = _at_origin(acc)
    return tuple(sorted(res.items()))
