"""Exact polynomial algebra for the elimination pipeline.

Polynomials live in ``Q[t, t1, h]`` where ``t = tan(alpha/2)``,
``t1 = tan(theta1/2)`` and ``h`` is the platform altitude, kept as a free
symbol.  Only at root-finding time is ``h`` specialised to ``sqrt(h_squared)``
with ``h_squared`` an exact rational; signs of elements ``a + b*h`` are then
still decided exactly.

Multivariate arithmetic, resultants and irreducible factorisation over ``Q``
are delegated to FLINT (``python-flint``).  Square-free decomposition and real
root isolation are done here: Yun's algorithm, and Descartes' rule of signs
with dyadic bisection on integer polynomials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import flint
import mpmath

TRIG = flint.fmpq_mpoly_ctx.get(("ca", "sa", "c1", "s1", "h"), "lex")
RING = flint.fmpq_mpoly_ctx.get(("t", "t1", "h"), "lex")
_INDEX = {"t": 0, "t1": 1, "h": 2}

DEGREE_CAP = 128
EPS_ROOT = 1e-30


class DegreeCapError(ValueError):
    pass


def to_fmpq(x) -> flint.fmpq:
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def to_fraction(c) -> Fraction:
    return Fraction(int(c.p), int(c.q))


def trig_generators():
    """Generators ``(ca, sa, c1, s1, h)`` for building trigonometric polynomials."""
    return TRIG.gens()


def ring_generators():
    return RING.gens()


def _terms(poly) -> List[Tuple[Tuple[int, ...], Fraction]]:
    return [(tuple(int(e) for e in k), to_fraction(v)) for k, v in poly.to_dict().items()]


def _mp(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


# ---------------------------------------------------------------------------
# polynomial containers


class BivariatePolynomial:
    """Polynomial in ``(t, t1)`` with coefficients in ``Q[h]``.

    ``powers = (p, q)`` records the factor ``(1+t^2)^p (1+t1^2)^q`` that was
    cleared by :func:`tan_half_substitute`.
    """

    __slots__ = ("poly", "powers", "h_squared", "_terms")

    def __init__(self, poly, powers: Tuple[int, int] = (0, 0), h_squared: Optional[Fraction] = None):
        if poly.context() is not RING:
            raise TypeError("expected a polynomial over (t, t1, h)")
        self.poly = poly
        self.powers = tuple(powers)
        self.h_squared = h_squared
        self._terms = None

    @classmethod
    def from_terms(cls, terms: Dict[tuple, object], h_squared=None) -> "BivariatePolynomial":
        d = {}
        for k, v in terms.items():
            k = tuple(k) + (0,) * (3 - len(k))
            d[k] = to_fmpq(v)
        return cls(RING.from_dict(d), h_squared=h_squared)

    def terms(self):
        if self._terms is None:
            self._terms = _terms(self.poly)
        return self._terms

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def degree(self, var: str) -> int:
        if self.is_zero:
            return -1
        return int(self.poly.degrees()[_INDEX[var]])

    def _h(self, h):
        if h is not None:
            return h
        if any(k[2] for k, _ in self.terms()):
            if self.h_squared is None:
                raise ValueError("polynomial depends on h but no h value is known")
            return mpmath.sqrt(_mp(self.h_squared))
        return 1

    def evaluate(self, t, t1, h=None):
        """Exact for rational arguments of an h-free polynomial, mpmath otherwise."""
        return eval_bivariate(self, t, t1, h)

    def scale(self, t, t1, h=None):
        """Sum of absolute term values; the natural magnitude for relative residuals."""
        hv = abs(self._h(h))
        t, t1 = abs(mpmath.mpf(t)), abs(mpmath.mpf(t1))
        return mpmath.fsum(abs(_mp(c)) * t ** i * t1 ** j * hv ** k for (i, j, k), c in self.terms())

    def normalized_value(self, t, t1, h=None):
        """``|p| / scale`` at finite ``t, t1``; ``None`` stands for the tan-half pole."""
        p = self
        if t is None:
            p, t = self.leading_part("t"), 0
        if t1 is None:
            p, t1 = p.leading_part("t1"), 0
        s = p.scale(t, t1, h)
        if s == 0:
            return mpmath.mpf(0)
        return abs(eval_bivariate(p, t, t1, p._h(h))) / s

    def leading_part(self, var: str) -> "BivariatePolynomial":
        """Coefficient of the top power of ``var`` (value at the angle pi)."""
        i = _INDEX[var]
        top = 2 * self.powers[i] if i < 2 else self.degree(var)
        d = {k: v for k, v in self.poly.to_dict().items() if int(k[i]) == top}
        d = {tuple(0 if n == i else int(e) for n, e in enumerate(k)): v for k, v in d.items()}
        return BivariatePolynomial(RING.from_dict(d), h_squared=self.h_squared)

    def coefficients_in(self, var: str, other, h=None) -> list:
        """Numeric coefficients (ascending) in ``var`` with the other variable fixed."""
        hv = self._h(h)
        i = _INDEX[var]
        o = 1 - i
        out = [mpmath.mpf(0)] * (self.degree(var) + 1)
        other = mpmath.mpf(other)
        for k, c in self.terms():
            out[k[i]] += _mp(c) * other ** k[o] * hv ** k[2]
        return out

    def derivative(self, var: str) -> "BivariatePolynomial":
        return BivariatePolynomial(self.poly.derivative(var), h_squared=self.h_squared)

    def to_json(self) -> str:
        return json.dumps(
            {
                "vars": ["t", "t1", "h"],
                "powers": list(self.powers),
                "terms": [[list(k), str(c)] for k, c in sorted(self.terms())],
            }
        )

    def __repr__(self):
        return f"BivariatePolynomial(deg_t={self.degree('t')}, deg_t1={self.degree('t1')}, nterms={len(self.terms())})"


class UnivariatePolynomial:
    """Polynomial in one variable (``t`` or ``t1``) with coefficients in ``Q[h]``."""

    __slots__ = ("poly", "var", "h_squared", "_split")

    def __init__(self, poly, var: str = "t1", h_squared: Optional[Fraction] = None, cap: int = DEGREE_CAP):
        if var not in ("t", "t1"):
            raise ValueError("variable must be 't' or 't1'")
        degs = poly.degrees() if not poly.is_zero() else (0, 0, 0)
        other = "t" if var == "t1" else "t1"
        if int(degs[_INDEX[other]]) != 0:
            raise ValueError(f"polynomial depends on {other}")
        if int(degs[_INDEX[var]]) > cap:
            raise DegreeCapError(f"degree {int(degs[_INDEX[var]])} exceeds cap {cap}")
        self.poly = poly
        self.var = var
        self.h_squared = h_squared
        self._split = None

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, var: str = "t1") -> "UnivariatePolynomial":
        i = _INDEX[var]
        d = {}
        for n, c in enumerate(coeffs):
            if c:
                k = [0, 0, 0]
                k[i] = n
                d[tuple(k)] = to_fmpq(c)
        return cls(RING.from_dict(d), var)

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero()

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else int(self.poly.degrees()[_INDEX[self.var]])

    @property
    def degree_h(self) -> int:
        return -1 if self.is_zero else int(self.poly.degrees()[2])

    @property
    def is_rational(self) -> bool:
        return self.degree_h <= 0

    def _wrap(self, poly) -> "UnivariatePolynomial":
        return UnivariatePolynomial(poly, self.var, self.h_squared, cap=10 ** 9)

    def coefficients(self) -> List[Fraction]:
        """Rational coefficients, ascending; only for h-free polynomials."""
        if not self.is_rational:
            raise ValueError("coefficients depend on h")
        out = [Fraction(0)] * (self.degree + 1)
        i = _INDEX[self.var]
        for k, c in _terms(self.poly):
            out[k[i]] += c
        return out

    def split_surd(self) -> Tuple[List[Fraction], List[Fraction]]:
        """``(A, B)`` with ``p(x, h) = A(x) + h B(x)`` modulo ``h^2 = h_squared``."""
        if self._split is None:
            D = self.h_squared if self.h_squared is not None else Fraction(0)
            if self.degree_h > 0 and self.h_squared is None:
                raise ValueError("h_squared required")
            n = max(self.degree, 0)
            A, B = [Fraction(0)] * (n + 1), [Fraction(0)] * (n + 1)
            i = _INDEX[self.var]
            for k, c in _terms(self.poly):
                v = c * D ** (k[2] // 2)
                (B if k[2] % 2 else A)[k[i]] += v
            self._split = (A, B)
        return self._split

    def derivative(self) -> "UnivariatePolynomial":
        return self._wrap(self.poly.derivative(self.var))

    def evaluate(self, x, h=None):
        if self.is_rational and h is None and isinstance(x, (int, Fraction)):
            return _horner(self.coefficients(), Fraction(x))
        A, B = self.split_surd()
        hv = mpmath.sqrt(_mp(self.h_squared)) if h is None and self.h_squared is not None else (h or 0)
        x = mpmath.mpf(x) if not isinstance(x, Fraction) else _mp(x)
        return mpmath.polyval([_mp(c) for c in reversed(A)], x) + hv * mpmath.polyval(
            [_mp(c) for c in reversed(B)], x
        )

    def leading_coefficient_vanishes(self) -> bool:
        """True if the top coefficient is zero once h is specialised."""
        A, B = self.split_surd()
        return self.degree >= 0 and A[-1] == 0 and B[-1] == 0

    def __mul__(self, other: "UnivariatePolynomial") -> "UnivariatePolynomial":
        return self._wrap(self.poly * other.poly)

    def __pow__(self, n: int) -> "UnivariatePolynomial":
        return self._wrap(self.poly ** n)

    def __eq__(self, other):
        return isinstance(other, UnivariatePolynomial) and self.var == other.var and self.poly == other.poly

    def __hash__(self):
        return hash((self.var, str(self.poly)))

    def to_json(self) -> str:
        i = _INDEX[self.var]
        return json.dumps(
            {
                "var": self.var,
                "terms": [[k[i], k[2], str(c)] for k, c in sorted(_terms(self.poly))],
            }
        )

    def __repr__(self):
        return f"UnivariatePolynomial({self.var}, degree={self.degree}, degree_h={self.degree_h})"


def eval_bivariate(p: BivariatePolynomial, t, t1, h=None):
    """Evaluate ``p`` at ``(t, t1)``.

    With rational ``t, t1`` and no ``h`` dependence the result is an exact
    :class:`~fractions.Fraction`; otherwise mpmath numbers at the working
    precision are used, with ``h = sqrt(h_squared)`` unless given.
    """
    terms = p.terms()
    if not terms:
        return Fraction(0)
    exact = isinstance(t, (int, Fraction)) and isinstance(t1, (int, Fraction))
    if exact and not any(k[2] for k, _ in terms) and h is None:
        t, t1 = Fraction(t), Fraction(t1)
        return sum((c * t ** i * t1 ** j for (i, j, _), c in terms), Fraction(0))
    hv = p._h(h)
    t, t1 = (_mp(v) if isinstance(v, Fraction) else mpmath.mpf(v) for v in (t, t1))
    # Horner in t over coefficients that are polynomials in t1.
    rows: Dict[int, list] = {}
    for (i, j, k), c in terms:
        rows.setdefault(i, []).append((j, k, c))
    acc = mpmath.mpf(0)
    for i in range(max(rows), -1, -1):
        coef = mpmath.fsum(_mp(c) * t1 ** j * hv ** k for j, k, c in rows.get(i, ()))
        acc = acc * t + coef
    return acc


# ---------------------------------------------------------------------------
# tan-half substitution


def _strip_factor(poly, w):
    n = 0
    while not poly.is_zero():
        q, r = divmod(poly, w)
        if not r.is_zero():
            break
        poly = q
        n += 1
    return poly, n


def tan_half_substitute(expr, h_squared: Optional[Fraction] = None) -> BivariatePolynomial:
    """Rationalise a polynomial in ``cos/sin(alpha), cos/sin(theta1)``.

    ``expr`` is a polynomial over ``(ca, sa, c1, s1, h)``.  Each sine/cosine is
    replaced by its tan-half expression and the result multiplied by the least
    powers of ``(1+t^2)`` and ``(1+t1^2)`` that clear all denominators.
    """
    if expr.context() is not TRIG:
        raise TypeError("expected a polynomial over (ca, sa, c1, s1, h)")
    if expr.is_zero():
        return BivariatePolynomial(RING.from_dict({}), (0, 0), h_squared)
    terms = _terms(expr)
    p = max(a + b for (a, b, _, _, _), _ in terms)
    q = max(c + d for (_, _, c, d, _), _ in terms)
    t, t1, h = RING.gens()
    one = RING.from_dict({(0, 0, 0): 1})

    def powers(base, n):
        out = [one]
        for _ in range(n):
            out.append(out[-1] * base)
        return out

    C, S, W = powers(1 - t ** 2, p), powers(2 * t, p), powers(1 + t ** 2, p)
    C1, S1, W1 = powers(1 - t1 ** 2, q), powers(2 * t1, q), powers(1 + t1 ** 2, q)
    H = powers(h, max(k[4] for k, _ in terms))
    out = RING.from_dict({})
    for (a, b, c, d, e), coef in terms:
        out += to_fmpq(coef) * C[a] * S[b] * W[p - a - b] * C1[c] * S1[d] * W1[q - c - d] * H[e]
    out, np_ = _strip_factor(out, 1 + t ** 2)
    out, nq = _strip_factor(out, 1 + t1 ** 2)
    return BivariatePolynomial(out, (p - np_, q - nq), h_squared)


# ---------------------------------------------------------------------------
# resultant and factorisation


def resultant(f: BivariatePolynomial, g: BivariatePolynomial, eliminate: str = "t") -> UnivariatePolynomial:
    """Sylvester resultant of ``f`` and ``g`` with respect to ``eliminate``.

    A zero result means ``f`` and ``g`` share a factor depending on the
    eliminated variable; it is returned as the zero polynomial rather than
    raised, callers check :attr:`UnivariatePolynomial.is_zero`.
    """
    if f.is_zero or g.is_zero:
        raise ValueError("resultant of a zero polynomial")
    if f.degree(eliminate) < 1 or g.degree(eliminate) < 1:
        raise ValueError(f"both polynomials must depend on {eliminate}")
    r = f.poly.resultant(g.poly, eliminate)
    keep = "t1" if eliminate == "t" else "t"
    return UnivariatePolynomial(r, keep, f.h_squared if f.h_squared is not None else g.h_squared)


def content_in(p: UnivariatePolynomial):
    """Gcd of the coefficients of ``p`` viewed as polynomials in ``h``."""
    i = _INDEX[p.var]
    rows: Dict[int, dict] = {}
    for k, c in p.poly.to_dict().items():
        rows.setdefault(int(k[i]), {})[(0, 0, int(k[2]))] = c
    g = None
    for d in rows.values():
        c = RING.from_dict(d)
        g = c if g is None else g.gcd(c)
        if g.is_one():
            break
    return g


def squarefree_decomposition(p: UnivariatePolynomial) -> List[Tuple[UnivariatePolynomial, int]]:
    """Yun's algorithm on the primitive part of ``p`` (content in ``h`` dropped).

    Returns ``[(a_1, 1), (a_2, 2), ...]`` with every ``a_i`` square-free and
    pairwise coprime; trivial parts are omitted.
    """
    if p.is_zero:
        raise ValueError("square-free decomposition of zero")
    f = p.poly
    cont = content_in(p)
    if not cont.is_one():
        f = f // cont
    x = p.var
    if p.degree < 1:
        return []
    df = f.derivative(x)
    a = f.gcd(df)
    b = f // a
    c = df // a
    d = c - b.derivative(x)
    out = []
    i = 1
    while True:
        if int(b.degrees()[_INDEX[x]]) == 0:
            break
        ai = b.gcd(d)
        b = b // ai
        c = d // ai
        d = c - b.derivative(x)
        if int(ai.degrees()[_INDEX[x]]) > 0:
            out.append((p._wrap(ai), i))
        i += 1
    return out


@dataclass
class FactorizationResult:
    factors: List[Tuple[UnivariatePolynomial, int]]
    content: object = None
    constant: Fraction = Fraction(1)
    candidate_Q: Optional[UnivariatePolynomial] = None
    target_degree: int = 24

    @property
    def degrees(self) -> List[Tuple[int, int]]:
        return [(f.degree, m) for f, m in self.factors]

    def product(self) -> UnivariatePolynomial:
        acc = RING.from_dict({(0, 0, 0): 1})
        for f, m in self.factors:
            acc = acc * f.poly ** m
        if self.content is not None:
            acc = acc * self.content
        var = self.factors[0][0].var if self.factors else "t1"
        return UnivariatePolynomial(acc, var, self.factors[0][0].h_squared if self.factors else None, cap=10 ** 9)

    def summary(self) -> dict:
        return {
            "factor_degrees": [[d, m] for d, m in self.degrees],
            "candidate_Q_degree": self.candidate_Q.degree if self.candidate_Q is not None else None,
        }


def squarefree_factor(p: UnivariatePolynomial, target_degree: int = 24) -> FactorizationResult:
    """Square-free decomposition, then splitting of each part into irreducibles.

    The square-free parts come from :func:`squarefree_decomposition`; each is
    split into factors irreducible over ``Q(h)``.  ``candidate_Q`` is the unique
    multiplicity-one factor of degree ``target_degree``, if there is one.
    """
    parts = squarefree_decomposition(p)
    cont = content_in(p)
    factors = []
    for part, m in parts:
        _, fl = part.poly.factor()
        for f, e in fl:
            if int(f.degrees()[_INDEX[p.var]]) == 0:
                continue
            factors.append((part._wrap(f), m * int(e)))
    factors.sort(key=lambda fm: (fm[0].degree, fm[1], str(fm[0].poly)))
    product = RING.from_dict({(0, 0, 0): 1})
    for f, m in factors:
        product = product * f.poly ** m
    if cont is not None:
        product = product * cont
    ratio, rem = divmod(p.poly, product)
    if not rem.is_zero() or not ratio.is_constant():
        raise ArithmeticError("factorisation does not reconstruct the input")
    constant = to_fraction(ratio.leading_coefficient()) if not ratio.is_zero() else Fraction(0)
    target = [f for f, m in factors if m == 1 and f.degree == target_degree]
    return FactorizationResult(
        factors,
        content=cont,
        constant=constant,
        candidate_Q=target[0] if len(target) == 1 else None,
        target_degree=target_degree,
    )


def squarefree_part(p: UnivariatePolynomial) -> UnivariatePolynomial:
    acc = RING.from_dict({(0, 0, 0): 1})
    for f, _ in squarefree_decomposition(p):
        acc = acc * f.poly
    return UnivariatePolynomial(acc, p.var, p.h_squared, cap=10 ** 9)


# ---------------------------------------------------------------------------
# real root isolation


@dataclass(frozen=True)
class RootEnclosure:
    """Open interval ``(lo, hi)`` holding exactly one simple root, or ``lo == hi``."""

    lo: Fraction
    hi: Fraction

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def value(self):
        return _mp(self.midpoint)

    def __float__(self):
        return float(self.midpoint)


def _horner(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _int_sign_at(a: Sequence[int], x: Fraction) -> int:
    """Sign of the integer polynomial ``a`` (ascending) at rational ``x``."""
    p, q = x.numerator, x.denominator
    n = len(a) - 1
    acc = 0
    qp = 1
    # sum a_i p^i q^(n-i), Horner on the homogenised form.
    for i in range(n, -1, -1):
        acc = acc * p + a[i] * qp
        qp *= q
    return (acc > 0) - (acc < 0)


def _primitive_int(coeffs: Sequence[Fraction]) -> List[int]:
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return [v // g for v in ints] if g > 1 else ints


def _variations(a: Iterable[int]) -> int:
    n, last = 0, 0
    for v in a:
        if v:
            s = 1 if v > 0 else -1
            if last and s != last:
                n += 1
            last = s
    return n


def _taylor_shift1(a: List[int]) -> List[int]:
    a = list(a)
    n = len(a) - 1
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += a[j + 1]
    return a


def _isolate_unit(a: List[int]) -> List[Tuple[int, int, bool]]:
    """Roots of ``a`` in [0, 1) as dyadic cells ``(c, k, exact)``.

    Exact roots are the points ``c/2^k``; otherwise ``(c/2^k, (c+1)/2^k)``
    contains exactly one root.  ``a`` must be square-free.
    """
    out = []
    stack = [(0, 0, a)]
    while stack:
        c, k, q = stack.pop()
        if q[0] == 0:
            out.append((c, k, True))
            q = q[1:]
        n = len(q) - 1
        if n < 1:
            continue
        v = _variations(_taylor_shift1(q[::-1]))
        if v == 0:
            continue
        if v == 1 and sum(q) != 0:
            out.append((c, k, False))
            continue
        left = [q[i] << (n - i) for i in range(n + 1)]
        right = _taylor_shift1(left)
        stack.append((2 * c + 1, k + 1, right))
        stack.append((2 * c, k + 1, left))
    return out


def _isolate_int(a: List[int]) -> List[RootEnclosure]:
    """All real roots of a square-free integer polynomial (ascending coeffs)."""
    while a and a[-1] == 0:
        a.pop()
    if len(a) < 2:
        return []
    roots = []
    if a[0] == 0:
        roots.append(RootEnclosure(Fraction(0), Fraction(0)))
        a = a[1:]
        if len(a) < 2:
            return roots
    lead = abs(a[-1])
    bound = 2 + max(abs(v) for v in a[:-1]) // lead
    e = bound.bit_length()
    for sgn in (1, -1):
        b = [v * (sgn ** i) << (e * i) for i, v in enumerate(a)]
        for c, k, exact in _isolate_unit(b):
            lo = Fraction(c << e, 1 << k)
            hi = lo if exact else Fraction((c + 1) << e, 1 << k)
            if sgn < 0:
                lo, hi = -hi, -lo
            roots.append(RootEnclosure(lo, hi))
    roots.sort(key=lambda r: r.lo)
    return roots


def _side_signs(sign_at: Callable[[Fraction], int], dsign_at: Callable[[Fraction], int], r: RootEnclosure):
    """Signs just inside the ends of ``r`` (handles ends that are other roots)."""
    s_lo = sign_at(r.lo) or dsign_at(r.lo)
    s_hi = sign_at(r.hi) or -dsign_at(r.hi)
    return s_lo, s_hi


def _bisect(sign_at, dsign_at, r: RootEnclosure, done: Callable[[RootEnclosure], bool]) -> RootEnclosure:
    if r.is_exact:
        return r
    s_lo, _ = _side_signs(sign_at, dsign_at, r)
    lo, hi = r.lo, r.hi
    while not done(RootEnclosure(lo, hi)):
        m = (lo + hi) / 2
        s = sign_at(m)
        if s == 0:
            return RootEnclosure(m, m)
        if s == s_lo:
            lo = m
        else:
            hi = m
    return RootEnclosure(lo, hi)


def _eps_done(eps: float):
    e = Fraction(eps)

    def done(r: RootEnclosure) -> bool:
        return r.width <= e * max(1, abs(r.lo), abs(r.hi))

    return done


def _split_at(sign_at, dsign_at, r: RootEnclosure, x: Fraction) -> RootEnclosure:
    """Shrink ``r`` so that ``x`` is not strictly inside it."""
    if r.is_exact or not (r.lo < x < r.hi):
        return r
    s = sign_at(x)
    if s == 0:
        return RootEnclosure(x, x)
    s_lo, _ = _side_signs(sign_at, dsign_at, r)
    return RootEnclosure(x, r.hi) if s == s_lo else RootEnclosure(r.lo, x)


class _SignOracle:
    """Exact sign of ``A(x) + sqrt(D) B(x)`` and of its derivative.

    Coefficients are brought to a common integer scale so every evaluation is
    a homogenised integer Horner pass; ``D = Dn/Dd`` enters only through the
    comparison ``a^2 Dd`` versus ``b^2 Dn``.
    """

    def __init__(self, A: Sequence[Fraction], B: Sequence[Fraction], D: Fraction):
        n = max(len(A), len(B))
        A = list(A) + [Fraction(0)] * (n - len(A))
        B = list(B) + [Fraction(0)] * (n - len(B))
        den = 1
        for c in A + B:
            den = den * c.denominator // math.gcd(den, c.denominator)
        self.A = [int(c * den) for c in A]
        self.B = [int(c * den) for c in B]
        self.dA = [i * c for i, c in enumerate(self.A)][1:] or [0]
        self.dB = [i * c for i, c in enumerate(self.B)][1:] or [0]
        D = Fraction(D)
        self.Dn, self.Dd = D.numerator, D.denominator
        self.has_b = any(self.B)

    @staticmethod
    def _hval(a: Sequence[int], p: int, q: int) -> int:
        acc, qp = 0, 1
        for i in range(len(a) - 1, -1, -1):
            acc = acc * p + a[i] * qp
            qp *= q
        return acc

    def _sign(self, a: int, b: int) -> int:
        sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
        if sb == 0 or self.Dn == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb if sa == 0 else sa
        lhs, rhs = a * a * self.Dd, b * b * self.Dn
        return sa if lhs > rhs else (sb if lhs < rhs else 0)

    def _eval(self, A, B, x: Fraction) -> int:
        p, q = x.numerator, x.denominator
        a = self._hval(A, p, q)
        if not self.has_b:
            return (a > 0) - (a < 0)
        return self._sign(a, self._hval(B, p, q))

    def sign(self, x: Fraction) -> int:
        return self._eval(self.A, self.B, x)

    def dsign(self, x: Fraction) -> int:
        return self._eval(self.dA, self.dB, x)


def _rational_sqf_int(coeffs: Sequence[Fraction]) -> List[int]:
    f = flint.fmpq_poly([to_fmpq(c) for c in coeffs])
    g = f.gcd(f.derivative())
    if g.degree() > 0:
        f = f // g
    return _primitive_int([to_fraction(c) for c in f.coeffs()])


def real_roots(
    p: UnivariatePolynomial,
    interval: Optional[Tuple] = None,
    eps_root: float = EPS_ROOT,
) -> List[RootEnclosure]:
    """Isolate and refine the distinct real roots of ``p``.

    Every real root in ``interval`` (closed, default the whole line) appears
    exactly once, as an enclosure of relative width ``<= eps_root``.  For
    polynomials whose coefficients involve ``h`` the roots of the norm
    ``p(x, h) p(x, -h)`` are isolated and kept when ``p`` itself changes sign
    across the enclosure; ``p`` must then be square-free after specialising
    ``h``.
    """
    if p.is_zero:
        raise ValueError("real roots of the zero polynomial")
    if p.degree > DEGREE_CAP:
        raise DegreeCapError(f"degree {p.degree} exceeds cap {DEGREE_CAP}")
    A, B = p.split_surd()
    D = p.h_squared if p.h_squared is not None else Fraction(0)
    oracle = _SignOracle(A, B, D)
    if any(B):
        fA, fB = flint.fmpq_poly([to_fmpq(c) for c in A]), flint.fmpq_poly([to_fmpq(c) for c in B])
        norm = fA * fA - to_fmpq(D) * fB * fB
        ncoef = [to_fraction(c) for c in norm.coeffs()]
    else:
        ncoef = A
    while ncoef and ncoef[-1] == 0:
        ncoef.pop()
    if len(ncoef) < 2:
        return []
    sqf = _rational_sqf_int(ncoef)
    if not any(B):
        # Signs of the square-free part keep bisection valid at multiple roots.
        oracle = _SignOracle([Fraction(c) for c in sqf], [Fraction(0)] * len(sqf), D)
    cands = _isolate_int(sqf)
    kept = []
    for r in cands:
        if r.is_exact:
            if oracle.sign(r.lo) == 0:
                kept.append(r)
            continue
        if not any(B):
            kept.append(r)
            continue
        s_lo = oracle.sign(r.lo)
        s_hi = oracle.sign(r.hi)
        if s_lo * s_hi < 0:
            kept.append(r)
        elif s_lo == 0 or s_hi == 0:
            # An end is a root of p, so the interior root belongs to the conjugate.
            continue
    if interval is not None:
        a = None if interval[0] is None else Fraction(interval[0])
        b = None if interval[1] is None else Fraction(interval[1])
        trimmed = []
        for r in kept:
            if a is not None:
                r = _split_at(oracle.sign, oracle.dsign, r, a)
            if b is not None:
                r = _split_at(oracle.sign, oracle.dsign, r, b)
            if (a is None or r.lo >= a) and (b is None or r.hi <= b):
                trimmed.append(r)
        kept = trimmed
    done = _eps_done(eps_root)
    return [_bisect(oracle.sign, oracle.dsign, r, done) for r in kept]


def refine_root(p: UnivariatePolynomial, r: RootEnclosure, eps_root: float) -> RootEnclosure:
    A, B = p.split_surd()
    oracle = _SignOracle(A, B, p.h_squared or Fraction(0))
    return _bisect(oracle.sign, oracle.dsign, r, _eps_done(eps_root))


def count_sign_changes_on_grid(coeffs: Sequence[float], lo: float, hi: float, n: int = 100_000) -> int:
    """Brute-force root count: sign changes of ``p`` sampled on a uniform grid."""
    import numpy as np

    xs = np.linspace(lo, hi, n)
    vals = np.polynomial.polynomial.polyval(xs, np.asarray(coeffs, dtype=float))
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))
