"""Exact univariate polynomial and rational-function kernel.

Everything here is arbitrary-precision rational arithmetic over the discount
variable: dense polynomials, reduced rational functions, fraction-free linear
solves, Sturm-based real-root isolation on subintervals of (0, 1), and sign
classification.  No floating point enters at any stage; irrational roots are
only ever reported as isolating brackets with rational endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .mdp import DecisionRule, Mdp


class ZeroPolynomialError(ValueError):
    pass


class SingularMatrixError(ValueError):
    pass


class PoleInIntervalError(ValueError):
    pass


class Polynomial:
    """Dense polynomial with Fraction coefficients, constant term first.

    Canonical form: no trailing (highest-degree) zero coefficients; the zero
    polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Fraction | int] = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def constant(c) -> "Polynomial":
        return Polynomial([Fraction(c)])

    @staticmethod
    def x() -> "Polynomial":
        return Polynomial([0, 1])

    # -- basic structure -------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        if self.is_zero:
            raise ZeroPolynomialError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        if self.is_zero:
            return "Polynomial(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            elif i == 1:
                terms.append(f"{c}*a")
            else:
                terms.append(f"{c}*a^{i}")
        return "Polynomial(" + " + ".join(terms) + ")"

    # -- arithmetic --------------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Polynomial(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return Polynomial([c * other for c in self.coeffs])
        if self.is_zero or other.is_zero:
            return Polynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, ci in enumerate(self.coeffs):
            if ci == 0:
                continue
            for j, cj in enumerate(other.coeffs):
                out[i + j] += ci * cj
        return Polynomial(out)

    __rmul__ = __mul__

    def shift_up(self, k: int = 1) -> "Polynomial":
        """Multiply by the variable to the k-th power."""
        if self.is_zero:
            return self
        return Polynomial([Fraction(0)] * k + list(self.coeffs))

    def __call__(self, point: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * point + c
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        q = [Fraction(0)] * max(0, self.degree - other.degree + 1)
        rem = list(self.coeffs)
        d = other.degree
        lc = other.leading
        while len(rem) - 1 >= d and any(c != 0 for c in rem):
            while rem and rem[-1] == 0:
                rem.pop()
            if len(rem) - 1 < d:
                break
            k = len(rem) - 1 - d
            factor = rem[-1] / lc
            q[k] = factor
            for i, c in enumerate(other.coeffs):
                rem[k + i] -= factor * c
            rem.pop()
        return Polynomial(q), Polynomial(rem)

    def __mod__(self, other: "Polynomial") -> "Polynomial":
        return self.divmod(other)[1]

    def exact_div(self, other: "Polynomial") -> "Polynomial":
        q, r = self.divmod(other)
        if not r.is_zero:
            raise ArithmeticError("division was not exact")
        return q

    # -- normal forms -------------------------------------------------------------

    def content_and_primitive(self) -> tuple[Fraction, "Polynomial"]:
        """Write self = c * p with p having coprime integer coefficients and
        positive leading coefficient; c is a positive rational (sign goes to c)."""
        if self.is_zero:
            return Fraction(0), self
        den_lcm = 1
        for c in self.coeffs:
            den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
        ints = [int(c * den_lcm) for c in self.coeffs]
        g = 0
        for v in ints:
            g = math.gcd(g, abs(v))
        sign = 1 if ints[-1] > 0 else -1
        prim = Polynomial([Fraction(v * sign // g) for v in ints])
        return Fraction(sign * g, den_lcm), prim

    def primitive(self) -> "Polynomial":
        return self.content_and_primitive()[1]

    def monic(self) -> "Polynomial":
        if self.is_zero:
            return self
        lc = self.leading
        return Polynomial([c / lc for c in self.coeffs])


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Greatest common divisor, returned in primitive integer form."""
    if a.is_zero:
        return b.primitive() if not b.is_zero else Polynomial()
    if b.is_zero:
        return a.primitive()
    a = a.primitive()
    b = b.primitive()
    while not b.is_zero:
        r = (a % b)
        if not r.is_zero:
            r = r.primitive()
        a, b = b, r
    return a.primitive()


def squarefree_part(p: Polynomial) -> Polynomial:
    if p.is_zero:
        raise ZeroPolynomialError("square-free part of the zero polynomial")
    if p.degree == 0:
        return Polynomial.constant(1)
    g = poly_gcd(p, p.derivative())
    if g.degree == 0:
        return p.primitive()
    return p.exact_div(g).primitive()


def root_multiplicity(p: Polynomial, root: Fraction) -> int:
    """Multiplicity of an exact rational root."""
    linear = Polynomial([-root, 1])
    mult = 0
    while not p.is_zero and p(root) == 0:
        p = p.exact_div(linear)
        mult += 1
    return mult


# -- Sturm machinery ------------------------------------------------------------


def _positive_scaled(p: Polynomial) -> Polynomial:
    """Divide by the positive content only, preserving the sign pattern."""
    if p.is_zero:
        return p
    content, prim = p.content_and_primitive()
    return prim if content > 0 else -prim


def sturm_chain(p: Polynomial) -> list[Polynomial]:
    # Scaling by positive constants keeps coefficients small and does not
    # disturb the sign variations; sign-flipping normalizations would.
    chain = [_positive_scaled(p), _positive_scaled(p.derivative())]
    while not chain[-1].is_zero:
        r = chain[-2] % chain[-1]
        if r.is_zero:
            break
        chain.append(_positive_scaled(-r))
    return [c for c in chain if not c.is_zero]


def _sign_variations(values: Sequence[Fraction]) -> int:
    signs = [1 if v > 0 else -1 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots_open(p: Polynomial, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of p in the open interval (lo, hi)."""
    if p.is_zero:
        raise ZeroPolynomialError("root counting on the zero polynomial")
    if lo >= hi:
        return 0
    s = squarefree_part(p)
    for endpoint in (lo, hi):
        while not s.is_zero and s(endpoint) == 0:
            s = s.exact_div(Polynomial([-endpoint, 1]))
    if s.degree <= 0:
        return 0
    chain = sturm_chain(s)
    v_lo = _sign_variations([q(lo) for q in chain])
    v_hi = _sign_variations([q(hi) for q in chain])
    return v_lo - v_hi


def simplest_fraction_between(lo: Fraction, hi: Fraction) -> Fraction:
    """The rational with smallest denominator strictly inside (lo, hi)."""
    if not lo < hi:
        raise ValueError("empty interval")
    n = math.floor(lo)
    if lo < n + 1 < hi:
        return Fraction(n + 1)
    a, b = lo - n, hi - n  # 0 <= a < b <= 1, no integer strictly inside
    if a == 0:
        q = math.floor(Fraction(1) / b) + 1
        return n + Fraction(1, q)
    inner = simplest_fraction_between(Fraction(1) / b, Fraction(1) / a)
    return n + Fraction(1) / inner


@dataclass(frozen=True)
class IsolatedRoot:
    """One real root, either exact or isolated by a rational bracket.

    ``defining`` is a primitive square-free integer polynomial vanishing at
    the root; for exact rational roots it is the corresponding linear factor's
    multiple inside the original polynomial's square-free part.
    """

    lo: Fraction
    hi: Fraction
    defining: Polynomial
    exact: Fraction | None = None
    multiplicity: int = 1

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    def refined(self, max_width: Fraction) -> "IsolatedRoot":
        if self.exact is not None or self.hi - self.lo <= max_width:
            return self
        lo, hi = self.lo, self.hi
        while hi - lo > max_width:
            mid = (lo + hi) / 2
            if self.defining(mid) == 0:
                # The defining polynomial is square-free with exactly one
                # root here, so mid is that root.
                return IsolatedRoot(
                    lo, hi, self.defining, exact=mid, multiplicity=self.multiplicity
                )
            if count_roots_open(self.defining, lo, mid) == 1:
                hi = mid
            else:
                lo = mid
        return IsolatedRoot(lo, hi, self.defining, None, self.multiplicity)

    def excluding(self, point: Fraction) -> "IsolatedRoot":
        """Refine until the bracket no longer contains the given rational."""
        root = self
        while root.exact is None and root.lo < point < root.hi:
            root = root.refined((root.hi - root.lo) / 4)
        return root

    def position(self) -> tuple[Fraction, Fraction]:
        if self.exact is not None:
            return self.exact, self.exact
        return self.lo, self.hi


def _identify_rational(s: Polynomial, lo: Fraction, hi: Fraction) -> IsolatedRoot:
    """Resolve a width-1 bracket of square-free s into an exact rational root
    or a certified-irrational bracket."""
    prim = s.primitive()
    qmax = abs(int(prim.leading))
    # Two distinct rationals with denominator <= qmax differ by >= 1/qmax^2,
    # so a bracket narrower than that holds at most one candidate.
    width_target = Fraction(1, 2 * qmax * qmax)
    while hi - lo > width_target:
        mid = (lo + hi) / 2
        if prim(mid) == 0:
            return IsolatedRoot(lo, hi, prim, exact=mid)
        if count_roots_open(prim, lo, mid) == 1:
            hi = mid
        else:
            lo = mid
    cand = simplest_fraction_between(lo, hi)
    if cand.denominator <= qmax and prim(cand) == 0:
        return IsolatedRoot(lo, hi, prim, exact=cand)
    return IsolatedRoot(lo, hi, prim, exact=None)


def isolate_roots(
    p: Polynomial, lo: Fraction = Fraction(0), hi: Fraction = Fraction(1)
) -> list[IsolatedRoot]:
    """Disjoint isolating brackets, one per distinct real root in (lo, hi).

    Rational roots come back exact; every root carries its multiplicity in p.
    """
    if p.is_zero:
        raise ZeroPolynomialError("cannot isolate roots of the zero polynomial")
    if p.degree == 0 or lo >= hi:
        return []
    s = squarefree_part(p)
    for endpoint in (lo, hi):
        while not s.is_zero and s(endpoint) == 0:
            s = s.exact_div(Polynomial([-endpoint, 1]))
    if s.degree <= 0:
        return []
    s = s.primitive()
    found: list[IsolatedRoot] = []
    stack = [(lo, hi, count_roots_open(s, lo, hi), s)]
    while stack:
        a, b, count, q = stack.pop()
        if count == 0:
            continue
        if count == 1:
            found.append(_identify_rational(q, a, b))
            continue
        mid = (a + b) / 2
        if q(mid) == 0:
            found.append(IsolatedRoot(a, b, q, exact=mid))
            q = q.exact_div(Polynomial([-mid, 1]))
            if q.degree <= 0:
                continue
        cl = count_roots_open(q, a, mid)
        cr = count_roots_open(q, mid, b)
        stack.append((a, mid, cl, q))
        stack.append((mid, b, cr, q))
    for i, root in enumerate(found):
        mult = _multiplicity_at(p, root)
        if mult != 1:
            found[i] = IsolatedRoot(
                root.lo, root.hi, root.defining, root.exact, mult
            )
    found.sort(key=lambda r: (r.exact, r.exact) if r.exact is not None else (r.lo, r.hi))
    return _disjoin(found)


def _multiplicity_at(p: Polynomial, root: IsolatedRoot) -> int:
    if root.exact is not None:
        return root_multiplicity(p, root.exact)
    mult = 1
    g = poly_gcd(p, p.derivative())
    while not g.is_zero and g.degree > 0 and polynomial_vanishes_at(g, root):
        mult += 1
        g = poly_gcd(g, g.derivative())
    return mult


def _disjoin(roots: list[IsolatedRoot]) -> list[IsolatedRoot]:
    """Refine brackets so that consecutive isolating intervals do not overlap."""
    out = list(roots)
    for i in range(len(out) - 1):
        a, b = out[i], out[i + 1]
        while True:
            a_lo, a_hi = a.position()
            b_lo, b_hi = b.position()
            if a_hi < b_lo or (a.exact is not None and b.exact is not None):
                break
            a = a.refined((a.hi - a.lo) / 4) if a.exact is None else a
            b = b.refined((b.hi - b.lo) / 4) if b.exact is None else b
        out[i], out[i + 1] = a, b
    return out


def polynomial_vanishes_at(p: Polynomial, root: IsolatedRoot) -> bool:
    """Does p vanish at the (possibly irrational) isolated root?"""
    if p.is_zero:
        return True
    if root.exact is not None:
        return p(root.exact) == 0
    g = poly_gcd(p, root.defining)
    if g.degree <= 0:
        return False
    return count_roots_open(g, root.lo, root.hi) > 0


def same_root(a: IsolatedRoot, b: IsolatedRoot) -> bool:
    if a.exact is not None and b.exact is not None:
        return a.exact == b.exact
    if a.exact is not None:
        return polynomial_vanishes_at(Polynomial([-a.exact, 1]), b)
    if b.exact is not None:
        return polynomial_vanishes_at(Polynomial([-b.exact, 1]), a)
    g = poly_gcd(a.defining, b.defining)
    if g.degree <= 0:
        return False
    a2, b2 = a, b
    while True:
        lo = max(a2.lo, b2.lo)
        hi = min(a2.hi, b2.hi)
        if lo >= hi:
            return False
        if count_roots_open(g, lo, hi) > 0 and (
            count_roots_open(a2.defining, lo, hi) == 1
            and count_roots_open(b2.defining, lo, hi) == 1
        ):
            return True
        a2 = a2.refined((a2.hi - a2.lo) / 4)
        b2 = b2.refined((b2.hi - b2.lo) / 4)
        if a2.exact is not None or b2.exact is not None:
            return same_root(a2, b2)


# -- rational functions -----------------------------------------------------------


class RationalFunction:
    """Reduced quotient of polynomials, analytic at 0.

    Canonical form: numerator and denominator coprime, denominator in
    primitive integer form with positive leading coefficient.  Requiring
    den(0) != 0 matches the use here (value functions on [0, 1)).
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial):
        if den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero:
            den = Polynomial.constant(1)
        else:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num = num.exact_div(g)
                den = den.exact_div(g)
            content, prim = den.content_and_primitive()
            den = prim
            num = num * (Fraction(1) / content)
        if den(Fraction(0)) == 0:
            raise ZeroDivisionError("denominator vanishes at 0")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @staticmethod
    def from_polynomial(p: Polynomial) -> "RationalFunction":
        return RationalFunction(p, Polynomial.constant(1))

    @staticmethod
    def constant(c) -> "RationalFunction":
        return RationalFunction.from_polynomial(Polynomial.constant(c))

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalFunction)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RationalFunction({self.num!r} / {self.den!r})"

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self + (-other)

    def __mul__(self, other) -> "RationalFunction":
        if isinstance(other, (int, Fraction)):
            return RationalFunction(self.num * other, self.den)
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __call__(self, point: Fraction) -> Fraction:
        d = self.den(point)
        if d == 0:
            raise ZeroDivisionError(f"pole at {point}")
        return self.num(point) / d

    def derivative(self) -> "RationalFunction":
        return RationalFunction(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    def key(self) -> tuple:
        return (self.num.coeffs, self.den.coeffs)


@dataclass(frozen=True)
class SignResult:
    sign: str  # '+', '-', '0', 'mixed'
    roots: tuple[IsolatedRoot, ...] = ()


def sign_on_interval(
    f: RationalFunction, lo: Fraction, hi: Fraction
) -> SignResult:
    """Exact sign of f on the open interval (lo, hi).

    '+' / '-' mean strict sign everywhere; '0' identically zero; 'mixed'
    means f has a zero inside, with the separating roots attached.
    """
    if f.is_zero:
        return SignResult("0")
    if f.den.degree > 0 and count_roots_open(f.den, lo, hi) > 0:
        raise PoleInIntervalError(f"denominator vanishes inside ({lo}, {hi})")
    roots = isolate_roots(f.num, lo, hi)
    if roots:
        return SignResult("mixed", tuple(roots))
    mid = (lo + hi) / 2
    return SignResult("+" if f(mid) > 0 else "-")


# -- exact linear algebra ---------------------------------------------------------


def solve_linear(
    a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> list[Fraction]:
    """Exact solution of a square rational system via Gaussian elimination.

    The result is verified by back-substitution before it is returned.
    """
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("matrix/vector shapes do not match")
    mat = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        mat[col], mat[pivot] = mat[pivot], mat[col]
        pv = mat[col][col]
        for r in range(n):
            if r == col or mat[r][col] == 0:
                continue
            factor = mat[r][col] / pv
            for c in range(col, n + 1):
                mat[r][c] -= factor * mat[col][c]
    x = [mat[i][n] / mat[i][i] for i in range(n)]
    for i in range(n):
        residual = sum((a[i][j] * x[j] for j in range(n)), Fraction(0)) - b[i]
        if residual != 0:
            raise AssertionError("linear solve verification failed")
    return x


def poly_det(matrix: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Determinant of a polynomial matrix by fraction-free (Bareiss) elimination."""
    n = len(matrix)
    a = [list(row) for row in matrix]
    sign = 1
    prev = Polynomial.constant(1)
    for k in range(n - 1):
        if a[k][k].is_zero:
            pivot = next((r for r in range(k + 1, n) if not a[r][k].is_zero), None)
            if pivot is None:
                return Polynomial()
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]).exact_div(prev)
            a[i][k] = Polynomial()
        prev = a[k][k]
    return a[n - 1][n - 1] * sign


def value_rational_function(
    mdp: Mdp, rule: DecisionRule
) -> tuple[RationalFunction, ...]:
    """Per-state stationary value of a decision rule as a function of the
    discount factor, in reduced form.

    Solves (I - a*P) v = r by Cramer's rule with fraction-free determinants;
    numerator and denominator degrees are bounded by the state count.
    """
    m = mdp.m
    p = mdp.transition_matrix(rule)
    r = mdp.reward_vector(rule)
    a_mat = [
        [
            Polynomial([Fraction(1 if i == j else 0), -p[i][j]])
            for j in range(m)
        ]
        for i in range(m)
    ]
    det = poly_det(a_mat)
    out = []
    for x in range(m):
        col_replaced = [
            [
                Polynomial.constant(r[i]) if j == x else a_mat[i][j]
                for j in range(m)
            ]
            for i in range(m)
        ]
        num = poly_det(col_replaced)
        rf = RationalFunction(num, det)
        if rf.num.degree > m or rf.den.degree > m:
            raise AssertionError(
                "value function degree exceeded the state count; kernel bug"
            )
        out.append(rf)
    return tuple(out)
