"""Coherent extension of partial automorphisms and the constructions built on it.

`ExtensionOracle` grows a partial automorphism sphere by sphere around a
basepoint, choosing at every vertex the smallest allowed local permutation
that is compatible with what is already fixed.  The choices at different
vertices are independent, so the lexicographically least tuple on each sphere
is the tuple of least choices.  Two partial automorphisms agreeing on
D ∩ B(o, r) therefore produce the same element on B(o, r).
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from . import perms as P
from .automorphism import (Composite, ElementOracle, GroupSpec, Identity, LocalRule, Portrait,
                           Unbounded, power, r_of_epsilon, standard_a)
from .errors import Inconclusive, Infeasible, OutOfDomain, PreconditionViolated
from .tree import (Vertex, ball, busemann, color_to, distance, in_half_tree, neighbor, path,
                   step_toward, valency, x)


@dataclass
class PartialAutomorphism:
    """A graph homomorphism `tau` defined on a connected vertex set containing o.

    The domain may be infinite; it is given by the predicate `contains`.
    """
    contains: object
    tau: object
    o: Vertex

    @classmethod
    def from_mapping(cls, mapping: dict, o: Vertex) -> "PartialAutomorphism":
        m = dict(mapping)
        return cls(m.__contains__, m.__getitem__, o)

    @classmethod
    def from_portrait(cls, p: Portrait, fix_line_from=None) -> "PartialAutomorphism":
        """Domain: the portrait's ball, plus the ray [x_k, xi) fixed if requested."""
        m = p.vertex_map()

        def contains(v):
            if v in m:
                return True
            return fix_line_from is not None and v.on_line and v.anchor >= fix_line_from

        def tau(v):
            got = m.get(v)
            return v if got is None else got

        return cls(contains, tau, p.base)


class ExtensionOracle(ElementOracle):
    """The coherent extension of a partial automorphism.

    With `seed` set, each local is drawn at random among the compatible
    permutations instead of taking the least one; this yields other valid
    extensions for cross-checks.
    """

    def __init__(self, spec: GroupSpec, pa: PartialAutomorphism, seed=None):
        if not pa.contains(pa.o):
            raise PreconditionViolated("basepoint must lie in the domain")
        super().__init__(spec.shape, pa.o, pa.tau(pa.o))
        self.spec = spec
        self.pa = pa
        self.seed = seed
        self._locals = {}

    def _constraints(self, v: Vertex, gv: Vertex) -> dict:
        shape = self.shape
        req = {}
        if v != self.base:
            u = step_toward(v, self.base)
            req[color_to(v, u)] = color_to(gv, self.image(u))
        if self.pa.contains(v):
            tv = self.pa.tau(v)
            if tv != gv:
                raise Infeasible(f"domain is not connected through {v}")
            for c in range(1, valency(v, shape) + 1):
                w = neighbor(v, c, shape)
                if self.pa.contains(w):
                    tw = self.pa.tau(w)
                    if distance(tv, tw) != 1:
                        raise Infeasible(f"map does not preserve the edge {v}-{w}")
                    t = color_to(tv, tw)
                    if req.get(c, t) != t:
                        raise Infeasible(f"conflicting constraints at {v}")
                    req[c] = t
        return req

    def local(self, v: Vertex) -> tuple:
        got = self._locals.get(v)
        if got is not None:
            return got
        gv = self.image(v)
        if v.parity != gv.parity:
            raise Infeasible(f"map does not preserve type at {v}")
        req = self._constraints(v, gv)
        d = valency(v, self.shape)
        if self.seed is None:
            if self.spec.kind == "full":
                perm = P.lexmin_with(d, req)
            else:
                perm = next((p for p in self.spec.allowed(v)
                             if all(p[c - 1] == t for c, t in req.items())), None)
        else:
            opts = [p for p in self.spec.allowed(v) if all(p[c - 1] == t for c, t in req.items())]
            perm = opts[random.Random(f"{self.seed}|{v}").randrange(len(opts))] if opts else None
        if perm is None:
            raise Infeasible(f"no allowed local permutation at {v}")
        with self._lock:
            self._locals.setdefault(v, perm)
        return perm


def extend(spec: GroupSpec, pa: PartialAutomorphism, depth: int) -> Portrait:
    """Portrait of the coherent extension on B(o, depth)."""
    return ExtensionOracle(spec, pa).portrait(pa.o, depth)


def complete(spec: GroupSpec, p: Portrait, fix_line_from=None) -> ExtensionOracle:
    """Canonical full element extending a portrait."""
    return ExtensionOracle(spec, PartialAutomorphism.from_portrait(p, fix_line_from))


def ray_toward(start: Vertex, ray, n: int) -> Vertex:
    """n-th vertex of the ray from `start` to the end of `ray` (k -> vertex)."""
    far = ray(n + distance(start, ray(0)))
    return path(start, far)[n]


def splice(inner: ElementOracle, outer: ElementOracle, start: Vertex, end: Vertex) -> ElementOracle:
    """Element equal to `inner` off the strict `end` side of [start, end] and to
    `outer` on it.  Both must agree on start and end (Tits independence)."""
    if inner(start) != outer(start) or inner(end) != outer(end):
        raise PreconditionViolated("splice needs both elements to agree on the edge")

    def rule(v):
        return outer.local(v) if in_half_tree(start, end, v) else inner.local(v)

    return LocalRule(inner.shape, start, inner(start), rule, "splice")


# --------------------------------------------------------------- drift maps

def drift_index(e: ElementOracle, window: int = 12) -> int:
    """i = r(e) + 1, requiring r(e) finite within the window."""
    r = r_of_epsilon(e, window)
    if isinstance(r, Unbounded):
        raise PreconditionViolated(f"r(e) is {r.value}; need a finite value")
    return r + 1


def _as_oracle(spec, u, i):
    if isinstance(u, Portrait):
        return complete(spec, u, fix_line_from=i)
    return u


def check_in_F(u, i: int, depth: int) -> None:
    """u fixes x_i..x_{i+depth} and moves x_{i-1}."""
    for k in range(depth + 1):
        try:
            img = u(x(i + k))
        except OutOfDomain:
            break
        if img != x(i + k):
            raise PreconditionViolated(f"element does not fix x_{i + k}")
    if u(x(i - 1)) == x(i - 1):
        raise PreconditionViolated(f"element fixes x_{i - 1}, so it is not in F_{i}")


class Psi(ExtensionOracle):
    """Fixes the half-tree behind x_i and swaps the rays [x_i, xi) and [x_i, u e(xi))."""

    def __init__(self, spec: GroupSpec, e: ElementOracle, u, depth: int, i: int = None):
        if spec.flip is not True:
            raise Infeasible("the configured group lacks the flip capability")
        i = drift_index(e) if i is None else i
        check_in_F(u, i, depth)
        self.i = i
        self.certified_radius = depth
        self.u = _as_oracle(spec, u, i)
        ue = Composite(self.u, e)
        self._ray = {0: x(i)}

        def ray(k):
            got = self._ray.get(k)
            if got is None:
                got = ue(x(i - 2 + k))
                self._ray[k] = got
            return got

        self.ray = ray
        here, back = x(i), x(i - 1)

        def in_rear(v):
            return v == here or in_half_tree(here, back, v)

        def contains(v):
            if in_rear(v) or (v.on_line and v.anchor > i):
                return True
            return ray(distance(here, v)) == v

        def tau(v):
            if in_rear(v):
                return v
            if v.on_line and v.anchor > i:
                return ray(v.anchor - i)
            return x(i + distance(here, v))

        if ray(1) == x(i + 1) or ray(1) == back:
            raise PreconditionViolated("u e(xi) must leave the line at x_i")
        super().__init__(spec, PartialAutomorphism(contains, tau, here))


def psi(spec: GroupSpec, e: ElementOracle, u, depth: int) -> Psi:
    return Psi(spec, e, u, depth)


def phi(spec: GroupSpec, e: ElementOracle, u, depth: int, psi_element: Psi = None) -> Portrait:
    """Portrait of a^{-1} Psi(u)^{-1} u e on B(e^{-1}(x_i), depth)."""
    ps = psi_element or Psi(spec, e, u, depth)
    a = standard_a(spec)
    chain = Composite(a.inverse(), Composite(ps.inverse(), Composite(ps.u, e)))
    return chain.portrait(e.preimage(x(ps.i)), depth)


def t_epsilon(spec: GroupSpec, e: ElementOracle, seed=None) -> ExtensionOracle:
    """Element of G_{[x_{i-1}, xi)} with t^{-1}[x_{i-3}, x_{i-1}] = e^{-1}[x_{i-1}, x_{i+1}]."""
    i = drift_index(e)
    p1, p2 = e.preimage(x(i)), e.preimage(x(i + 1))
    special = {p1: x(i - 2), p2: x(i - 3)}

    def contains(v):
        return v in special or (v.on_line and v.anchor >= i - 1)

    def tau(v):
        return special.get(v, v)

    return ExtensionOracle(spec, PartialAutomorphism(contains, tau, x(i - 1)), seed=seed)


# ------------------------------------------------------------ decompositions

@dataclass
class BruhatResult:
    v: ElementOracle
    n: int
    u: ElementOracle
    radius: int
    branch_index: object = None


@dataclass
class WCase:
    radius: int


def _fixes_line(g, lo: int, hi: int) -> bool:
    return all(g(x(m)) == x(m) for m in range(lo, hi + 1))


def end_direction(g, depth: int, limit: int = 64):
    """Where g sends xi: ("off", b) when it branches off the line at x_b,
    ("plus", None) or ("minus", None) when it runs along the line.

    A run along the line is only accepted once it lasts to the search limit:
    a generic element can follow the line for many steps before branching."""
    shape_slack = depth + 4
    run = 0
    prev = g(x(0))
    y = prev
    for k in range(1, limit + 1):
        y = g(x(k))
        if y.anchor == prev.anchor and len(y.branch) == len(prev.branch) + 1:
            return ("off", y.anchor)
        run = run + 1 if y.on_line and prev.on_line else 0
        prev_anchor, prev = prev.anchor, y
    if run >= shape_slack:
        return ("plus" if y.anchor > prev_anchor else "minus", None)
    raise Inconclusive("image of xi not settled within the search limit")


def bruhat_decompose(spec: GroupSpec, g: ElementOracle, depth: int):
    kind, b = end_direction(g, depth)
    if kind == "minus":
        return WCase(depth)
    if kind == "plus":
        v = Identity(spec.shape)
    else:
        def image_ray(m):
            return g(x(m))

        def tau(w):
            if w.anchor <= b:
                return w
            return ray_toward(x(b), image_ray, w.anchor - b)

        # the whole line is the domain: [x_b, xi_-) stays, the rest goes onto [x_b, g(xi))
        v = ExtensionOracle(spec, PartialAutomorphism(lambda w: w.on_line, tau, x(b)))
    g1 = Composite(v.inverse(), g)
    shift = busemann(g1(x(0))) - busemann(x(0))
    if shift % 2:
        raise Inconclusive("odd horospherical displacement")
    n = -shift // 2
    u = Composite(power(standard_a(spec), -n), g1)
    return BruhatResult(v, n, u, depth, b)


def verify_bruhat(spec: GroupSpec, g: ElementOracle, res, depth: int, horizon: int = None) -> list:
    """Problems found with a Bruhat decomposition; empty when everything checks."""
    problems = []
    if isinstance(res, WCase):
        if end_direction(g, depth)[0] != "minus":
            problems.append("WCase reported but g(xi) is not xi_-")
        return problems
    a_n = power(standard_a(spec), res.n)
    for p in ball(x(0), depth, spec.shape):
        if res.v(a_n(res.u(p))) != g(p):
            problems.append(f"recomposition differs at {p}")
            break
    b = res.branch_index if res.branch_index is not None else 0
    if not _fixes_line(res.v, b - depth, b):
        problems.append("v does not fix the ray toward xi_-")
    horizon = horizon or depth + 40
    c = _ray_start(res.u, horizon)
    if c is None or c > horizon - depth:
        problems.append("u does not fix a ray toward xi")
    return problems


def _ray_start(g, horizon: int, floor: int = -64):
    """Least c >= floor with g fixing x_c, ..., x_horizon (None if g moves x_horizon)."""
    if g(x(horizon)) != x(horizon):
        return None
    c = horizon
    while c - 1 >= floor and g(x(c - 1)) == x(c - 1):
        c -= 1
    return c


@dataclass
class ANResult:
    n: int
    u: ElementOracle
    radius: int


def an_decompose(spec: GroupSpec, h: ElementOracle, depth: int) -> ANResult:
    kind, _ = end_direction(h, depth)
    if kind != "plus":
        raise PreconditionViolated("element does not fix xi")
    shift = busemann(h(x(0))) - busemann(x(0))
    n = -shift // 2
    return ANResult(n, Composite(power(standard_a(spec), -n), h), depth)


@dataclass
class LeviResult:
    uplus: ElementOracle
    m: ElementOracle
    level: int
    radius: int


def approximate_by_contraction(spec: GroupSpec, u: ElementOracle, level: int) -> ElementOracle:
    """Element fixing the half-tree beyond [x_level, x_{level+1}] (toward xi)
    and agreeing with u on the other side; u must fix x_level onward."""
    return splice(u, Identity(spec.shape), x(level), x(level + 1))


def levi_decompose(spec: GroupSpec, u: ElementOracle, depth: int, horizon: int = None) -> LeviResult:
    horizon = horizon or depth + 40
    c = _ray_start(u, horizon)
    if c is None:
        raise Inconclusive("u does not visibly fix a ray toward xi")
    level = max(c, depth)
    up = approximate_by_contraction(spec, u, level)
    m = Composite(up.inverse(), u)
    return LeviResult(up, m, level, depth)


def verify_levi(spec: GroupSpec, u: ElementOracle, res: LeviResult, depth: int) -> list:
    problems = []
    for p in ball(x(0), depth, spec.shape):
        if res.uplus(res.m(p)) != u(p):
            problems.append(f"recomposition differs at {p}")
            break
    if not _fixes_line(res.m, -depth - 2, res.level + depth):
        problems.append("m does not fix the line")
    top, nxt = x(res.level), x(res.level + 1)
    for p in ball(nxt, depth, spec.shape):
        if in_half_tree(top, nxt, p) and res.uplus(p) != p:
            problems.append(f"uplus moves {p} beyond the level edge")
            break
    for p in ball(x(0), depth, spec.shape):
        if res.uplus(p) != u(p):
            problems.append(f"uplus differs from u at {p}")
            break
    return problems


@dataclass
class StabilizerFactors:
    w1: ElementOracle
    w2: ElementOracle
    m: ElementOracle
    k: int
    radius: int


def stabilizer_factor(spec: GroupSpec, w: ElementOracle, k: int, depth: int) -> StabilizerFactors:
    lo, hi = -2 * k, 2 * k
    if not _fixes_line(w, lo, hi):
        raise PreconditionViolated("w must fix the segment [x_{-2k}, x_{2k}]")
    ident = Identity(spec.shape)
    if _fixes_line(w, lo - depth - 4, hi):
        w1, w2 = w, ident
    elif _fixes_line(w, lo, hi + depth + 4):
        w1, w2 = ident, w
    else:
        # w1 acts as w on the xi side of [x_{-2k}, x_{-2k+1}] and trivially behind it
        w1 = splice(ident, w, x(lo), x(lo + 1))
        w2 = Composite(w1.inverse(), w)
    middle = splice(splice(ident, w, x(lo), x(lo + 1)), ident, x(hi - 1), x(hi))
    return StabilizerFactors(w1, w2, middle.inverse(), k, depth)


def verify_stabilizer_factor(spec: GroupSpec, w: ElementOracle, res: StabilizerFactors, depth: int) -> list:
    problems = []
    k = res.k
    for p in ball(x(0), depth, spec.shape):
        if res.w1(res.w2(p)) != w(p):
            problems.append(f"w1 w2 differs from w at {p}")
            break
    if not _fixes_line(res.w1, 2 * k - depth - 4, 2 * k):
        problems.append("w1 does not fix [x_2k, xi_-)")
    if not _fixes_line(res.w2, -2 * k, -2 * k + depth + 4):
        problems.append("w2 does not fix [x_-2k, xi)")
    if not _fixes_line(res.m, -depth - 4, depth + 4):
        problems.append("m does not fix the line")
    for p in ball(x(0), 2 * k - 1, spec.shape):
        if res.m(w(p)) != p:
            problems.append(f"m w moves {p}")
            break
    return problems
