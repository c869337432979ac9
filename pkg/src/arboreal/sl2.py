"""SL_2 over the Laurent field F_q((pi)), pi = 1/t, and its Bruhat-Tits tree.

Vertices are homothety classes of O-lattices, O = F_q[[pi]].  Every class has
a unique Hermite representative

    M(n, u) = [[pi^n, u], [0, 1]],   u taken modulo pi^n O,

stored with u as a finite Laurent polynomial whose exponents are all < n.
The lattice is the O-span of the columns.  The base vertex is (0, 0) = O^2.
The cusp end fixed by the upper triangular group is n -> -infinity, and
a = diag(t, 1/t) maps (n, 0) to (n - 2, 0).

Laurent values carry an absolute precision N: the value is known modulo
pi^N, and N = None means exact.  Reading a coefficient at or beyond N
raises PrecisionExhausted.
"""
from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import HeightExhausted, PrecisionExhausted, PreconditionViolated


def _check_prime(q: int) -> None:
    if q < 2 or any(q % p == 0 for p in range(2, int(q ** 0.5) + 1)):
        raise PreconditionViolated(f"q = {q} must be prime")


def _min_prec(*ps):
    vals = [p for p in ps if p is not None]
    return min(vals) if vals else None


# ------------------------------------------------------------------- F_q

@dataclass(frozen=True)
class FieldElem:
    value: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.q)

    def _lift(self, other):
        if isinstance(other, FieldElem):
            if other.q != self.q:
                raise PreconditionViolated("mixed characteristics")
            return other.value
        return other % self.q

    def __add__(self, o): return FieldElem(self.value + self._lift(o), self.q)
    __radd__ = __add__
    def __sub__(self, o): return FieldElem(self.value - self._lift(o), self.q)
    def __rsub__(self, o): return FieldElem(self._lift(o) - self.value, self.q)
    def __mul__(self, o): return FieldElem(self.value * self._lift(o), self.q)
    __rmul__ = __mul__
    def __neg__(self): return FieldElem(-self.value, self.q)

    def inverse(self) -> "FieldElem":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElem(pow(self.value, self.q - 2, self.q), self.q)

    def __truediv__(self, o):
        return self * FieldElem(self._lift(o), self.q).inverse()

    def __bool__(self): return self.value != 0


# -------------------------------------------------------------- F_q[t]

@dataclass(frozen=True)
class Poly:
    """Polynomial in t, coefficients low degree first, no trailing zeros."""
    q: int
    coeffs: tuple = ()

    def __post_init__(self):
        c = [x % self.q for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def const(cls, q, c):
        return cls(q, (c,))

    @classmethod
    def t(cls, q):
        return cls(q, (0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for zero

    def is_zero(self) -> bool:
        return not self.coeffs

    def lead(self) -> int:
        return self.coeffs[-1]

    def __add__(self, o):
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = o.coeffs + (0,) * (n - len(o.coeffs))
        return Poly(self.q, tuple(x + y for x, y in zip(a, b)))

    def __neg__(self):
        return Poly(self.q, tuple(-x for x in self.coeffs))

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, int):
            return Poly(self.q, tuple(o * x for x in self.coeffs))
        if self.is_zero() or o.is_zero():
            return Poly(self.q)
        out = [0] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(o.coeffs):
                    out[i + j] += x * y
        return Poly(self.q, tuple(out))

    __rmul__ = __mul__

    def divmod(self, o):
        if o.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        q = self.q
        rem = list(self.coeffs)
        inv = pow(o.lead(), q - 2, q)
        quo = [0] * max(0, len(rem) - len(o.coeffs) + 1)
        for k in range(len(rem) - len(o.coeffs), -1, -1):
            c = rem[k + len(o.coeffs) - 1] * inv % q
            quo[k] = c
            if c:
                for j, y in enumerate(o.coeffs):
                    rem[k + j] -= c * y
        return Poly(q, tuple(quo)), Poly(q, tuple(rem))

    def __floordiv__(self, o):
        return self.divmod(o)[0]

    def __mod__(self, o):
        return self.divmod(o)[1]

    def __call__(self, x: int) -> int:
        out = 0
        for c in reversed(self.coeffs):
            out = (out * x + c) % self.q
        return out

    def to_laurent(self) -> "LaurentTrunc":
        return LaurentTrunc(self.q, {-k: c for k, c in enumerate(self.coeffs) if c})

    def __str__(self):
        if self.is_zero():
            return "0"
        terms = []
        for k, c in reversed(list(enumerate(self.coeffs))):
            if c:
                mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
                coef = str(c) if (c != 1 or k == 0) else ""
                terms.append(coef + mono)
        return " + ".join(terms)


def poly_gcdex(a: Poly, b: Poly):
    """(g, x, y) with a x + b y = g, g monic (or zero)."""
    q = a.q
    r0, r1 = a, b
    s0, s1 = Poly.const(q, 1), Poly(q)
    t0, t1 = Poly(q), Poly.const(q, 1)
    while not r1.is_zero():
        quo, rem = r0.divmod(r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 - quo * s1
        t0, t1 = t1, t0 - quo * t1
    if r0.is_zero():
        return r0, s0, t0
    inv = pow(r0.lead(), q - 2, q)
    return r0 * inv, s0 * inv, t0 * inv


def all_polys(q: int, max_degree: int):
    """Every polynomial of degree at most max_degree (zero included)."""
    for coeffs in itertools.product(range(q), repeat=max_degree + 1):
        yield Poly(q, coeffs)


# -------------------------------------------------------- F_q((pi))

class LaurentTrunc:
    """Laurent series in pi known modulo pi^prec (prec None: exact)."""
    __slots__ = ("q", "c", "prec")

    def __init__(self, q: int, coeffs=None, prec=None):
        self.q = q
        self.prec = prec
        c = {}
        for e, v in (coeffs or {}).items():
            v %= q
            if v and (prec is None or e < prec):
                c[e] = v
        self.c = c

    @classmethod
    def monomial(cls, q, e, c=1):
        return cls(q, {e: c})

    @classmethod
    def zero(cls, q):
        return cls(q, {})

    @property
    def exact(self) -> bool:
        return self.prec is None

    def is_zero(self) -> bool:
        """True only when the value is known to be exactly zero."""
        return not self.c and self.prec is None

    def valuation(self):
        if self.c:
            return min(self.c)
        if self.prec is None:
            return math.inf
        raise PrecisionExhausted(f"valuation unknown: value is 0 modulo pi^{self.prec}")

    def coeff(self, e: int) -> int:
        if self.prec is not None and e >= self.prec:
            raise PrecisionExhausted(f"coefficient of pi^{e} beyond precision {self.prec}")
        return self.c.get(e, 0)

    def with_prec(self, prec):
        return LaurentTrunc(self.q, self.c, _min_prec(self.prec, prec))

    def __add__(self, o):
        if isinstance(o, int):
            o = LaurentTrunc(self.q, {0: o})
        c = dict(self.c)
        for e, v in o.c.items():
            c[e] = c.get(e, 0) + v
        return LaurentTrunc(self.q, c, _min_prec(self.prec, o.prec))

    __radd__ = __add__

    def __neg__(self):
        return LaurentTrunc(self.q, {e: -v for e, v in self.c.items()}, self.prec)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, int):
            return LaurentTrunc(self.q, {e: v * o for e, v in self.c.items()}, self.prec)
        if self.is_zero() or o.is_zero():
            return LaurentTrunc.zero(self.q)
        va, vb = self._val_bound(), o._val_bound()
        prec = _min_prec(None if self.prec is None else self.prec + vb,
                         None if o.prec is None else o.prec + va)
        c = {}
        for e1, v1 in self.c.items():
            for e2, v2 in o.c.items():
                e = e1 + e2
                if prec is None or e < prec:
                    c[e] = c.get(e, 0) + v1 * v2
        return LaurentTrunc(self.q, c, prec)

    __rmul__ = __mul__

    def _val_bound(self):
        return min(self.c) if self.c else self.prec

    def inverse(self, prec: int) -> "LaurentTrunc":
        """1/x known modulo pi^prec, or to the precision the input allows."""
        v = self.valuation()
        if v == math.inf:
            raise ZeroDivisionError("inverse of zero")
        if self.prec is None and len(self.c) == 1:
            return LaurentTrunc(self.q, {-v: pow(self.c[v], self.q - 2, self.q)})
        avail = None if self.prec is None else self.prec - 2 * v
        target = prec if avail is None else min(prec, avail)
        q = self.q
        # unit part w = x / pi^v = w0 + w1 pi + ...; solve w * y = 1 term by term
        n = target + v  # number of unit-part coefficients needed
        w = [self.c.get(v + k, 0) for k in range(max(n, 0))]
        inv0 = pow(w[0], q - 2, q) if n > 0 else 0
        y = []
        for k in range(max(n, 0)):
            s = 1 if k == 0 else 0
            for j in range(1, k + 1):
                s -= w[j] * y[k - j]
            y.append(s * inv0 % q)
        return LaurentTrunc(q, {k - v: y[k] for k in range(len(y))}, target)

    def __truediv__(self, o):
        raise TypeError("use divide(a, b, prec) to state the precision needed")

    def truncate(self, n: int) -> dict:
        """Representative of the class modulo pi^n O: coefficients below n."""
        if self.prec is not None and self.prec < n:
            raise PrecisionExhausted(f"need precision {n}, have {self.prec}")
        return {e: v for e, v in self.c.items() if e < n}

    def polynomial_part(self) -> Poly:
        if self.prec is not None and self.prec <= 0:
            raise PrecisionExhausted("polynomial part lies beyond precision")
        top = max([-e for e in self.c if e <= 0], default=-1)
        return Poly(self.q, tuple(self.c.get(-k, 0) for k in range(top + 1)))

    def fractional_part(self) -> "LaurentTrunc":
        if self.prec is not None and self.prec <= 0:
            raise PrecisionExhausted("fractional part lies beyond precision")
        return LaurentTrunc(self.q, {e: v for e, v in self.c.items() if e > 0}, self.prec)

    def __eq__(self, o):
        return isinstance(o, LaurentTrunc) and self.c == o.c and self.prec == o.prec

    def agrees(self, o, n: int) -> bool:
        """Equal modulo pi^n."""
        return self.truncate(n) == o.truncate(n)

    def __repr__(self):
        terms = " + ".join(f"{v}p^{e}" for e, v in sorted(self.c.items())) or "0"
        return f"L({terms}; {'exact' if self.prec is None else 'O(p^%d)' % self.prec})"


def divide(a: LaurentTrunc, b: LaurentTrunc, prec: int) -> LaurentTrunc:
    """a / b known modulo pi^prec, raising when inputs are too coarse."""
    if a.is_zero():
        return LaurentTrunc.zero(a.q)
    va = a._val_bound()
    return (a * b.inverse(prec - va)).with_prec(prec)


def rational_series(num: Poly, den: Poly, prec: int) -> LaurentTrunc:
    return divide(num.to_laurent(), den.to_laurent(), prec)


# ------------------------------------------------------------- matrices

@dataclass(frozen=True)
class Matrix2:
    """2x2 matrix over F_q((pi)), entries LaurentTrunc."""
    a: LaurentTrunc
    b: LaurentTrunc
    c: LaurentTrunc
    d: LaurentTrunc

    @property
    def q(self):
        return self.a.q

    def det(self) -> LaurentTrunc:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, o: "Matrix2") -> "Matrix2":
        return Matrix2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                       self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    @classmethod
    def diag_t(cls, q, n: int = 1) -> "Matrix2":
        """a^n with a = diag(t, 1/t)."""
        z = LaurentTrunc.zero(q)
        return cls(LaurentTrunc.monomial(q, -n), z, z, LaurentTrunc.monomial(q, n))


@dataclass(frozen=True)
class GammaElem:
    """Element of SL_2(F_q[t])."""
    a: Poly
    b: Poly
    c: Poly
    d: Poly

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det.coeffs != (1,):
            raise PreconditionViolated("determinant must be 1")

    @property
    def q(self):
        return self.a.q

    @property
    def height(self) -> int:
        return max(p.degree for p in (self.a, self.b, self.c, self.d))

    def matrix(self) -> Matrix2:
        return Matrix2(self.a.to_laurent(), self.b.to_laurent(), self.c.to_laurent(), self.d.to_laurent())

    def __matmul__(self, o):
        return GammaElem(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                         self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inverse(self):
        return GammaElem(self.d, -self.b, -self.c, self.a)

    @classmethod
    def identity(cls, q):
        one, zero = Poly.const(q, 1), Poly(q)
        return cls(one, zero, zero, one)


def sl2_finite(q: int) -> list:
    """All of SL_2(F_q) by brute force."""
    out = []
    for a, b, c, d in itertools.product(range(q), repeat=4):
        if (a * d - b * c) % q == 1:
            out.append((a, b, c, d))
    return out


# --------------------------------------------------------------- vertices

@dataclass(frozen=True)
class LatticeVertex:
    q: int
    n: int
    u: tuple = ()   # sorted (exponent, coefficient) pairs, exponents < n

    @classmethod
    def make(cls, q, n, coeffs: dict):
        return cls(q, n, tuple(sorted((e, v % q) for e, v in coeffs.items() if v % q and e < n)))

    @classmethod
    def base(cls, q):
        return cls(q, 0, ())

    def u_series(self) -> LaurentTrunc:
        return LaurentTrunc(self.q, dict(self.u))

    def matrix(self) -> Matrix2:
        q = self.q
        return Matrix2(LaurentTrunc.monomial(q, self.n), self.u_series(),
                       LaurentTrunc.zero(q), LaurentTrunc(q, {0: 1}))

    def __str__(self):
        return f"({self.n}, {LaurentTrunc(self.q, dict(self.u))!r})"


def vertex_neighbors(v: LatticeVertex) -> list:
    q, n = v.q, v.n
    base = dict(v.u)
    out = []
    for c in range(q):
        coeffs = dict(base)
        if c:
            coeffs[n] = c
        out.append(LatticeVertex.make(q, n + 1, coeffs))
    out.append(LatticeVertex.make(q, n - 1, {e: x for e, x in base.items() if e < n - 1}))
    return out


def _val_dict(d: dict):
    return min(d) if d else math.inf


def vertex_distance(v: LatticeVertex, w: LatticeVertex) -> int:
    """Tree distance from the elementary divisors of M(v)^{-1} M(w).

    M(v)^{-1} M(w) = [[pi^(nw-nv), (uw - uv) pi^(-nv)], [0, 1]], whose
    elementary divisor valuations are the minimal entry valuation a and
    v(det) - a; the distance is their difference."""
    diff = dict(w.u)
    for e, x in v.u:
        diff[e] = (diff.get(e, 0) - x) % v.q
    diff = {e: x for e, x in diff.items() if x}
    dn = w.n - v.n
    low = min(dn, _val_dict(diff) - v.n, 0)
    return dn - 2 * low


def act(g, v: LatticeVertex) -> LatticeVertex:
    """Class of g M(v) reduced to Hermite form by column operations over O."""
    if isinstance(g, GammaElem):
        g = g.matrix()
    m = g @ v.matrix()
    top1, bot1, top2, bot2 = m.a, m.c, m.b, m.d
    if bot2.is_zero() or (not bot1.is_zero() and bot1.valuation() < bot2.valuation()):
        top1, bot1, top2, bot2 = top2, bot2, top1, bot1
    vz = bot2.valuation()
    vdet = g.det().valuation() + v.n
    n = vdet - 2 * vz
    u = divide(top2, bot2, n).truncate(n) if not top2.is_zero() else {}
    return LatticeVertex.make(v.q, n, u)


gamma_act = act


def standard_axis(q: int, k: int) -> LatticeVertex:
    """Vertex (k, 0); a^n maps it to (k - 2n, 0)."""
    return LatticeVertex(q, k, ())


# ------------------------------------------------------ quotient position

def quotient_position_fast(v: LatticeVertex) -> int:
    """Position on the quotient ray by continued-fraction reduction.

    Translations by F_q[t] remove the polynomial part of u.  If u is then
    zero modulo pi^n the class is (n, 0) and the position is |n|.
    Otherwise, with k = v(u) in [1, n), the element [[0, -1], [1, 0]] maps
    (n, u) to (n - 2k, -1/u), strictly closer to the base vertex.
    """
    q, n = v.q, v.n
    u = LaurentTrunc(q, dict(v.u))
    while True:
        frac = {e: x for e, x in u.c.items() if 0 < e < n}
        if n <= 0 or not frac:
            return abs(n)
        f = LaurentTrunc(q, frac)
        k = min(frac)
        n = n - 2 * k
        u = LaurentTrunc(q, (-f.inverse(n)).truncate(n)) if n > 0 else LaurentTrunc.zero(q)


def gamma_ball(q: int, height: int) -> list:
    """Every gamma in SL_2(F_q[t]) with all entry degrees at most height."""
    polys = list(all_polys(q, height))
    out = []
    for a in polys:
        for c in polys:
            if a.is_zero() and c.is_zero():
                continue
            g, x, y = poly_gcdex(a, c)
            if g.coeffs != (1,):
                continue
            # a d - b c = 1: (b, d) = (-y, x) + k (a, c), and deg k is bounded by
            # height - max(deg a, deg c) since b0, d0 have smaller degrees.
            b0, d0 = -y, x
            room = height - max(a.degree, c.degree)
            if room < 0:
                continue
            for k in all_polys(q, room) if room >= 0 else ():
                b, d = b0 + k * a, d0 + k * c
                if b.degree <= height and d.degree <= height:
                    out.append(GammaElem(a, b, c, d))
    return out


@dataclass
class OrbitIndex:
    """Distances to the orbit points gamma^{-1}(base), deg gamma <= height,
    over the ball of radius 2 * height around the base vertex."""
    q: int
    height: int
    distance: dict = field(default_factory=dict)
    orbit_size: int = 0

    @classmethod
    def build(cls, q: int, height: int) -> "OrbitIndex":
        base = LatticeVertex.base(q)
        orbit = {act(g.inverse(), base) for g in gamma_ball(q, height)}
        radius = 2 * height
        dist = {o: 0 for o in orbit}
        frontier = deque(orbit)
        while frontier:
            v = frontier.popleft()
            for w in vertex_neighbors(v):
                if w not in dist and vertex_distance(w, base) <= radius:
                    dist[w] = dist[v] + 1
                    frontier.append(w)
        return cls(q, height, dist, len(orbit))


_ORBITS = {}


def quotient_position_oracle(v: LatticeVertex, height: int) -> int:
    """min over gamma with entry degrees <= height of d(gamma v, base).

    Equivalently the distance from v to the orbit points gamma^{-1}(base),
    which lie at distance 2 deg(gamma) from the base; a multi-source search
    over the ball of radius 2 * height evaluates the minimum.  Orbit points
    all have even distance to the base, so the value is certified once
    2 * height >= d(v, base) + best - 2."""
    key = (v.q, height)
    if key not in _ORBITS:
        _ORBITS[key] = OrbitIndex.build(v.q, height)
    index = _ORBITS[key]
    r = vertex_distance(v, LatticeVertex.base(v.q))
    best = index.distance.get(v)
    if best is None:
        raise HeightExhausted(f"{v} lies outside the searched ball", best=None)
    if 2 * height < r + best - 2:
        raise HeightExhausted(f"height {height} cannot certify {best} at {v}", best=best)
    return best


def ball_vertices(q: int, radius: int) -> list:
    base = LatticeVertex.base(q)
    seen = {base}
    frontier = [base]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in vertex_neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(seen, key=lambda v: (vertex_distance(v, base), v.n, v.u))


# ------------------------------------------------------ continued fractions

def iter_partials(x: LaurentTrunc):
    """Partial quotients a0, a1, ... of x, until it terminates or precision runs out."""
    cur = x
    while True:
        yield cur.polynomial_part()
        frac = cur.fractional_part()
        if frac.is_zero():
            return
        if not frac.c:
            raise PrecisionExhausted(f"remainder is zero to precision {frac.prec}")
        v = frac.valuation()
        cap = frac.prec - 2 * v if frac.prec is not None else 64
        cur = frac.inverse(cap)


def cf_expansion(x: LaurentTrunc, steps: int) -> list:
    """Partial quotients a0, a1, ... (at most steps + 1) of x."""
    out = []
    for a in iter_partials(x):
        out.append(a)
        if len(out) == steps + 1:
            break
    return out


def iter_convergents(partials):
    """(p_k, q_k) by the standard recurrence, lazily."""
    p_prev = q = None
    for a in partials:
        if p_prev is None:
            p_prev, p = Poly.const(a.q, 1), a
            q_prev, q = Poly(a.q), Poly.const(a.q, 1)
        else:
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
        yield p, q


def convergents(partials: list) -> list:
    return list(iter_convergents(partials))


# ------------------------------------------------------ ends and samples

@dataclass(frozen=True)
class Rational:
    num: Poly
    den: Poly


@dataclass(frozen=True)
class Series:
    value: LaurentTrunc
    tag: str = ""


@dataclass(frozen=True)
class EndClass:
    kind: str          # "BoundedParabolic" or "ConicalCandidate"
    caveat: str = ""
    window: tuple = ()


def classify_end(e, steps: int = 12) -> EndClass:
    if e == "infinity" or isinstance(e, Rational):
        return EndClass("BoundedParabolic", "rational point of the boundary")
    try:
        partials = cf_expansion(e.value, steps)
    except PrecisionExhausted:
        return EndClass("ConicalCandidate", "continued fraction hit the precision limit")
    degs = tuple(p.degree for p in partials)
    if len(partials) <= steps and e.value.fractional_part().c == {}:
        return EndClass("BoundedParabolic", "series is a polynomial", degs)
    return EndClass("ConicalCandidate",
                    "rationality is undecidable from a truncation; window shows no termination", degs)


def make_series(q: int, tag: str, prec: int) -> Series:
    """Configured boundary points: 'random:<seed>', 'lacunary', 'squares'."""
    if tag.startswith("random:"):
        rng = random.Random(tag)
        coeffs = {e: rng.randrange(q) for e in range(1, prec)}
        coeffs[1] = rng.randrange(1, q)
    elif tag == "lacunary":
        coeffs = {2 ** k: 1 for k in range(prec.bit_length()) if 2 ** k < prec}
    elif tag == "squares":
        coeffs = {k * k: 1 for k in range(1, prec) if k * k < prec}
    else:
        raise PreconditionViolated(f"unknown series tag {tag}")
    return Series(LaurentTrunc(q, coeffs, prec), tag)


def horospherical_sample(q: int, m_scale: int, prec: int, rng: random.Random) -> Matrix2:
    """Haar-random (alpha, beta; 0, 1/alpha): alpha a unit of O, beta in pi^{-m} O."""
    alpha = {0: rng.randrange(1, q)}
    alpha.update({e: rng.randrange(q) for e in range(1, prec)})
    beta = {e: rng.randrange(q) for e in range(-m_scale, prec)}
    a = LaurentTrunc(q, alpha, prec)
    return Matrix2(a, LaurentTrunc(q, beta, prec), LaurentTrunc.zero(q), a.inverse(prec))


def point_matrix(q: int, end) -> Matrix2:
    """g^{-1} = [[s, -1], [1, 0]] sending the cusp to the point s."""
    if isinstance(end, Series):
        s = end.value
    elif isinstance(end, Rational):
        raise PreconditionViolated("pass rational points as exact series")
    else:
        s = end
    return Matrix2(s, LaurentTrunc(q, {0: -1}), LaurentTrunc(q, {0: 1}), LaurentTrunc.zero(q))


def end_ray(q: int, s, depth: int) -> list:
    """Vertices of the ray from the base vertex toward the point s (or 'infinity')."""
    if s == "infinity":
        return [LatticeVertex(q, -k, ()) for k in range(depth + 1)]
    if s.c and s.valuation() < 0:
        inv = s.inverse(depth + 1)
        swap = Matrix2(LaurentTrunc.zero(q), LaurentTrunc(q, {0: 1}),
                       LaurentTrunc(q, {0: 1}), LaurentTrunc.zero(q))
        return [act(swap, LatticeVertex.make(q, k, inv.truncate(k))) for k in range(depth + 1)]
    return [LatticeVertex.make(q, k, s.truncate(k)) for k in range(depth + 1)]


# ------------------------------------------------------------ ray weights

@dataclass
class NagaoRayWeights:
    q: int
    window: int
    weights: dict
    tail: Fraction
    vertex_group_orders: dict

    def ratio(self, n: int) -> Fraction:
        return self.weights[n + 1] / self.weights[n]


def ray_weights(q: int, window: int) -> NagaoRayWeights:
    """Masses 1/|A_n| normalized over the whole ray; |A_0^+| = |SL_2(F_q)|
    and |A_n| = (q - 1) q^{n+1} for n >= 1."""
    top = len(sl2_finite(q))
    orders = {0: top}
    for n in range(1, window + 1):
        orders[n] = (q - 1) * q ** (n + 1)
    total = Fraction(1, top) + Fraction(1, q * (q - 1) ** 2)
    weights = {n: Fraction(1, orders[n]) / total for n in orders}
    tail = 1 - sum(weights.values())
    return NagaoRayWeights(q, window, weights, tail, orders)
