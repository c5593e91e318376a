"""Exact algebra of Weyl-ordered central moments for two degrees of freedom.

Moments are indexed as ``G^{a,b,c,d}`` with the layout
``(theta, P_theta, z, P_z)``; sector 0 is ``(a, b)`` and sector 1 is ``(c, d)``.
All arithmetic here is exact (``int`` / ``Fraction``).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, NamedTuple

__all__ = [
    "MomentIndex",
    "MomentCombination",
    "DerivPoly",
    "BracketResidueError",
    "stirling2",
    "derivative_polynomial",
    "derivative_polynomial_paper_form",
    "kappa_coefficient",
    "kappa_coefficient_printed",
    "moment_bracket",
    "moment_bracket_printed",
    "combination_bracket",
    "classical_moment_bracket",
    "indices_of_order",
    "CLASSICAL_VARIABLES",
]

CLASSICAL_VARIABLES = ("theta", "p_theta", "z", "p_z")


class BracketResidueError(ArithmeticError):
    """An imaginary part survived in a bracket of real moments."""


class MomentIndex(NamedTuple):
    a: int
    b: int
    c: int
    d: int

    @property
    def order(self) -> int:
        return self.a + self.b + self.c + self.d

    def sectors(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.a, self.b), (self.c, self.d)

    @classmethod
    def from_sectors(cls, s0: tuple[int, int], s1: tuple[int, int]) -> "MomentIndex":
        return cls(s0[0], s0[1], s1[0], s1[1])

    def label(self) -> str:
        return f"G{self.a}{self.b}{self.c}{self.d}"


ZERO_INDEX = MomentIndex(0, 0, 0, 0)


def indices_of_order(order: int) -> list[MomentIndex]:
    """All indices of a given total order, in lexicographic order."""
    out = []
    for a in range(order, -1, -1):
        for b in range(order - a, -1, -1):
            for c in range(order - a - b, -1, -1):
                out.append(MomentIndex(a, b, c, order - a - b - c))
    return out


# ---------------------------------------------------------------------------
# Moment combinations
# ---------------------------------------------------------------------------

Monomial = tuple  # sorted tuple of MomentIndex; () is the constant 1


def _normalize_monomial(factors: Iterable[MomentIndex]) -> Monomial | None:
    """Drop order-0 factors; return None if any factor is an order-1 moment."""
    kept = []
    for f in factors:
        f = MomentIndex(*f)
        o = f.order
        if o == 1:
            return None
        if o:
            kept.append(f)
    return tuple(sorted(kept))


def monomial_order(mono: Monomial) -> int:
    return sum(f.order for f in mono)


class MomentCombination(Mapping):
    """Finite exact linear combination of moment monomials.

    Keys are ``(monomial, hbar_power)`` where ``monomial`` is a sorted tuple of
    :class:`MomentIndex` (``()`` stands for the constant 1, a single-element
    tuple for a lone moment, longer tuples for products).  Values are
    non-zero :class:`~fractions.Fraction` coefficients.  Instances are
    immutable.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        acc: dict = defaultdict(Fraction)
        items = terms.items() if isinstance(terms, Mapping) else terms
        for (mono, hp), coeff in items:
            mono = _normalize_monomial(mono)
            if mono is None:
                continue
            acc[(mono, int(hp))] += Fraction(coeff)
        self._terms = {k: v for k, v in acc.items() if v != 0}

    @classmethod
    def moment(cls, idx, coeff=1, hbar_power: int = 0) -> "MomentCombination":
        return cls({((MomentIndex(*idx),), hbar_power): coeff})

    @classmethod
    def zero(cls) -> "MomentCombination":
        return cls()

    def __getitem__(self, key):
        return self._terms[key]

    def __iter__(self) -> Iterator:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, MomentCombination):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "MomentCombination") -> "MomentCombination":
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, Fraction(0)) + v
        return MomentCombination(acc)

    def __neg__(self) -> "MomentCombination":
        return MomentCombination({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "MomentCombination") -> "MomentCombination":
        return self + (-other)

    def scale(self, factor, hbar_power: int = 0) -> "MomentCombination":
        factor = Fraction(factor)
        return MomentCombination(
            {(m, hp + hbar_power): v * factor for (m, hp), v in self._terms.items()}
        )

    def __mul__(self, other: "MomentCombination") -> "MomentCombination":
        acc: dict = defaultdict(Fraction)
        for (m1, h1), v1 in self._terms.items():
            for (m2, h2), v2 in other._terms.items():
                acc[(m1 + m2, h1 + h2)] += v1 * v2
        return MomentCombination(acc)

    def is_zero(self) -> bool:
        return not self._terms

    def max_order(self) -> int:
        return max((monomial_order(m) for m, _ in self._terms), default=0)

    def truncated(self, max_order: int) -> "MomentCombination":
        return MomentCombination(
            {k: v for k, v in self._terms.items() if monomial_order(k[0]) <= max_order}
        )

    def linear_terms(self) -> dict[MomentIndex, dict[int, Fraction]]:
        """Single-moment terms as ``{index: {hbar_power: coeff}}``."""
        out: dict = defaultdict(dict)
        for (mono, hp), v in self._terms.items():
            if len(mono) == 1:
                out[mono[0]][hp] = v
        return dict(out)

    def evaluate(self, values: Mapping, hbar: float) -> float:
        """Numeric value; ``values`` maps MomentIndex -> float."""
        total = 0.0
        for (mono, hp), v in self._terms.items():
            term = float(v) * hbar**hp
            for f in mono:
                term *= values[f]
            total += term
        return total

    def dump(self) -> str:
        """One line per term: ``coeff hbar_power a b c d [a b c d ...]``."""
        lines = []
        for (mono, hp), v in sorted(self._terms.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            idx = " ".join(" ".join(str(x) for x in f) for f in mono) or "0 0 0 0"
            lines.append(f"{v.numerator}/{v.denominator} {hp} {idx}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        if not self._terms:
            return "MomentCombination(0)"
        parts = []
        for (mono, hp), v in sorted(self._terms.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            s = str(v)
            if hp:
                s += f"*hbar^{hp}"
            for f in mono:
                s += "*" + f.label()
            parts.append(s)
        return "MomentCombination(" + " + ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Stirling numbers and derivative polynomials
# ---------------------------------------------------------------------------


def _check_nonneg_int(**kw) -> None:
    for name, v in kw.items():
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeError(f"{name} must be an int, got {type(v).__name__}")
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k).

    Python integers are arbitrary precision, so there is no wraparound.
    """
    _check_nonneg_int(n=n, k=k)
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@dataclass(frozen=True)
class DerivPoly:
    """Integer polynomial in ``t = tanh(x)``; ``coeffs[j]`` multiplies ``t**j``."""

    n: int
    coeffs: tuple[int, ...]

    def __call__(self, t: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    @property
    def degree(self) -> int:
        for j in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[j]:
                return j
        return 0

    def __neg__(self) -> "DerivPoly":
        return DerivPoly(self.n, tuple(-c for c in self.coeffs))

    def __str__(self) -> str:
        parts = [f"{c:+d}*t^{j}" for j, c in enumerate(self.coeffs) if c]
        return " ".join(parts) or "0"


def _trim(coeffs: list[int]) -> tuple[int, ...]:
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


@lru_cache(maxsize=None)
def derivative_polynomial(n: int) -> DerivPoly:
    """Q_n with d^n/dx^n sech^2(x) = sech^2(x) * Q_n(tanh x).

    Built from Q_0 = 1, Q_{n+1} = (1 - t^2) Q_n' - 2 t Q_n.
    """
    _check_nonneg_int(n=n)
    if n == 0:
        return DerivPoly(0, (1,))
    q = list(derivative_polynomial(n - 1).coeffs)
    out = [0] * (len(q) + 1)
    for j, c in enumerate(q):
        if j:
            out[j - 1] += j * c  # Q'
            out[j + 1] -= j * c  # -t^2 Q'
        out[j + 1] -= 2 * c  # -2t Q
    return DerivPoly(n, _trim(out))


@lru_cache(maxsize=None)
def derivative_polynomial_paper_form(n: int) -> DerivPoly:
    """-2^{n+1} sum_{k=1}^{n+1} k!/2^k S(n+1,k) (t-1)^{k-1}, expanded in t."""
    _check_nonneg_int(n=n)
    acc = [Fraction(0)] * (n + 1)
    for k in range(1, n + 2):
        w = Fraction(-(2 ** (n + 1)) * factorial(k) * stirling2(n + 1, k), 2**k)
        # (t - 1)^{k-1}
        for j in range(k):
            acc[j] += w * comb(k - 1, j) * (-1) ** (k - 1 - j)
    assert all(c.denominator == 1 for c in acc)
    return DerivPoly(n, _trim([int(c) for c in acc]))


# ---------------------------------------------------------------------------
# Moment brackets
# ---------------------------------------------------------------------------


def _check_tuple(name: str, v) -> tuple[int, ...]:
    v = tuple(v)
    for x in v:
        if isinstance(x, bool) or not isinstance(x, int):
            raise TypeError(f"{name} entries must be int")
        if x < 0:
            raise ValueError(f"{name} has a negative entry: {v}")
    return v


def kappa_coefficient(n: int, s: int, e, a, b, c, d) -> int:
    """Combinatorial weight of the order-n quantum term with s (a,d)-pairings.

    ``e, a, b, c, d`` are per-degree-of-freedom tuples.  ``g_i`` counts the
    (b,c)-pairings in sector i, ``e_i - g_i`` the (a,d)-pairings, with
    ``sum(g) == n - s``.  Each split contributes
    ``prod_i g_i! (e_i-g_i)! C(a_i, e_i-g_i) C(b_i, g_i) C(c_i, g_i) C(d_i, e_i-g_i)``.
    An empty g-range gives 0.
    """
    _check_nonneg_int(n=n, s=s)
    e, a, b, c, d = (_check_tuple(nm, v) for nm, v in zip("eabcd", (e, a, b, c, d)))
    if s > n:
        raise ValueError(f"s={s} exceeds n={n}")
    k = len(e)
    if not all(len(t) == k for t in (a, b, c, d)):
        raise ValueError("per-sector tuples must share a length")
    ranges = []
    for i in range(k):
        lo = max(0, e[i] - a[i], e[i] - d[i])
        hi = min(b[i], c[i], n - s, e[i])
        if lo > hi:
            return 0
        ranges.append(range(lo, hi + 1))
    total = 0
    for g in product(*ranges):
        if sum(g) != n - s:
            continue
        term = 1
        for i in range(k):
            h = e[i] - g[i]
            term *= (
                factorial(g[i]) * factorial(h)
                * comb(a[i], h) * comb(b[i], g[i]) * comb(c[i], g[i]) * comb(d[i], h)
            )
        total += term
    return total


def kappa_coefficient_printed(n: int, s: int, e, a, b, c, d) -> Fraction:
    """The K weight with the normalisation and g-bounds exactly as printed.

    Reporting only: ``max[e_i, s, e_i-a_i, e_i-d_i, 0] <= g_i <= min[b_i, c_i, n-s, e_i]``
    and ``1/(s!(n-s)!) prod C(..)/(C(n-s,g_i) C(s,e_i-g_i))``.
    """
    _check_nonneg_int(n=n, s=s)
    e, a, b, c, d = (_check_tuple(nm, v) for nm, v in zip("eabcd", (e, a, b, c, d)))
    ranges = []
    for i in range(len(e)):
        lo = max(e[i], s, e[i] - a[i], e[i] - d[i], 0)
        hi = min(b[i], c[i], n - s, e[i])
        if lo > hi:
            return Fraction(0)
        ranges.append(range(lo, hi + 1))
    total = Fraction(0)
    for g in product(*ranges):
        if sum(g) != n - s:
            continue
        term = Fraction(1, factorial(s) * factorial(n - s))
        for i in range(len(e)):
            h = e[i] - g[i]
            den = comb(n - s, g[i]) * comb(s, h)
            if den == 0:
                term = Fraction(0)
                break
            term *= Fraction(comb(a[i], h) * comb(b[i], g[i]) * comb(c[i], g[i]) * comb(d[i], h), den)
        total += term
    return total


def _graded_sum(A, B, n: int, weight) -> dict[MomentIndex, Fraction]:
    """sum_s sum_e sign * K * G^{A+B-e} at grade n (one operand ordering)."""
    (a0, b0), (a1, b1) = A
    (c0, d0), (c1, d1) = B
    a, b, c, d = (a0, a1), (b0, b1), (c0, c1), (d0, d1)
    out: dict = defaultdict(Fraction)
    for s in range(n + 1):
        sign = weight.sign(n, s)
        e_ranges = [
            range(0, min(a[i], d[i], s) + min(b[i], c[i], n - s) + 1) for i in range(2)
        ]
        for e in product(*e_ranges):
            if sum(e) != n:
                continue
            kap = weight.kappa(n, s, e, a, b, c, d)
            if not kap:
                continue
            idx = MomentIndex(a0 + c0 - e[0], b0 + d0 - e[0], a1 + c1 - e[1], b1 + d1 - e[1])
            out[idx] += sign * kap
    return out


class _Corrected:
    @staticmethod
    def sign(n, s):
        return -1 if (n - s) % 2 else 1

    kappa = staticmethod(kappa_coefficient)


class _Printed:
    @staticmethod
    def sign(n, s):
        return -1 if s % 2 else 1

    kappa = staticmethod(kappa_coefficient_printed)


def _max_grade(A, B) -> int:
    return sum(min(A[i][0], B[i][1]) + min(A[i][1], B[i][0]) for i in range(2))


def _lower(idx: MomentIndex, pos: int) -> MomentIndex:
    v = list(idx)
    v[pos] -= 1
    return MomentIndex(*v)


@lru_cache(maxsize=None)
def _bracket_full(i1: MomentIndex, i2: MomentIndex) -> MomentCombination:
    A, B = i1.sectors(), i2.sectors()
    terms: dict = defaultdict(Fraction)
    # bilinear part from the dependence of central moments on expectation values
    for i in range(2):
        qa, pa = A[i]
        qb, pb = B[i]
        if qa and pb:
            terms[((_lower(i1, 2 * i), _lower(i2, 2 * i + 1)), 0)] -= qa * pb
        if pa and qb:
            terms[((_lower(i1, 2 * i + 1), _lower(i2, 2 * i)), 0)] += pa * qb
    # hbar-graded part: (i hbar/2)^{n-1} * (T_n(A,B) - T_n(B,A)) / 2
    for n in range(1, _max_grade(A, B) + 1):
        fwd = _graded_sum(A, B, n, _Corrected)
        bwd = _graded_sum(B, A, n, _Corrected)
        diff = {k: (fwd.get(k, 0) - bwd.get(k, 0)) / 2 for k in set(fwd) | set(bwd)}
        diff = {k: v for k, v in diff.items() if v}
        if n % 2 == 0:
            if diff:
                raise BracketResidueError(
                    f"imaginary residue at grade {n} in {{{i1.label()}, {i2.label()}}}: {diff}"
                )
            continue
        # (i/2)^{n-1} is real for odd n
        unit = Fraction((-1) ** ((n - 1) // 2), 2 ** (n - 1))
        for idx, v in diff.items():
            terms[((idx,), n - 1)] += unit * v
    return MomentCombination(terms)


def _check_bracket_args(i1, i2, max_order):
    i1, i2 = MomentIndex(*i1), MomentIndex(*i2)
    _check_tuple("i1", i1)
    _check_tuple("i2", i2)
    if i1.order < 1 or i2.order < 1:
        raise ValueError("bracket arguments must have order >= 1")
    if max_order < 2:
        raise ValueError("max_order must be >= 2")
    return i1, i2


def moment_bracket(i1, i2, max_order: int) -> MomentCombination:
    """Poisson bracket ``{G^{i1}, G^{i2}}`` truncated at ``max_order``.

    Monomials whose total moment order exceeds ``max_order`` are dropped and
    order-1 moments vanish.  Coefficients are exact; the hbar power of each
    term is kept symbolically.
    """
    i1, i2 = _check_bracket_args(i1, i2, max_order)
    return _bracket_full(i1, i2).truncated(max_order)


def moment_bracket_printed(i1, i2, max_order: int) -> tuple[MomentCombination, MomentCombination]:
    """Bracket assembled from the formula as printed; returns (real, imaginary) parts.

    Used only to report how far the printed formula is from the operator
    commutator; never used for dynamics.
    """
    i1, i2 = _check_bracket_args(i1, i2, max_order)
    A, B = i1.sectors(), i2.sectors()
    real: dict = defaultdict(Fraction)
    imag: dict = defaultdict(Fraction)
    for i in range(2):
        qa, pa = A[i]
        qb, pb = B[i]
        if qa and pb:
            real[((_lower(i1, 2 * i), _lower(i2, 2 * i + 1)), 0)] += qa * pb
        if pa and qb:
            real[((_lower(i1, 2 * i + 1), _lower(i2, 2 * i)), 0)] -= pa * qb
    eta = _max_grade(A, B)
    n_max = 1 if eta <= 1 else eta - 1
    for n in range(1, n_max + 1):
        # (i/2)^{n-1}: real for odd n, imaginary for even n
        mag = Fraction((-1) ** ((n - 1) // 2), 2 ** (n - 1))
        target = real if n % 2 else imag
        for idx, v in _graded_sum(A, B, n, _Printed).items():
            if v:
                target[((idx,), n - 1)] += mag * v
    return (MomentCombination(real).truncated(max_order),
            MomentCombination(imag).truncated(max_order))


def combination_bracket(x: MomentCombination, y: MomentCombination, max_order: int) -> MomentCombination:
    """Bracket of two combinations, extended by bilinearity and the Leibniz rule."""
    acc = MomentCombination()
    for (m1, h1), v1 in x.items():
        for (m2, h2), v2 in y.items():
            if not m1 or not m2:
                continue
            for p, f in enumerate(m1):
                rest1 = MomentCombination({(m1[:p] + m1[p + 1:], 0): 1})
                for q, g in enumerate(m2):
                    rest2 = MomentCombination({(m2[:q] + m2[q + 1:], 0): 1})
                    br = _bracket_full(f, g)
                    acc = acc + (rest1 * rest2 * br).scale(v1 * v2, h1 + h2)
    return acc.truncated(max_order)


def classical_moment_bracket(which: str, i) -> MomentCombination:
    """``{x, G}`` for a classical variable x: always zero."""
    if which not in CLASSICAL_VARIABLES:
        raise ValueError(f"unknown classical variable {which!r}")
    MomentIndex(*i)
    return MomentCombination()
