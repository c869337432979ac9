"""Exact Haar calculus on compact open subsets of the horospherical group.

Notation: H_y is the group of elements fixing the ray [y, xi) pointwise.
A cylinder set with anchor y and members Z is the set of horospherical
elements g with g(y) in Z.  Each member z stands for the left coset g H_y
with g(y) = z.  Its measure is |Z| times the measure of H_y.  By
unimodularity that equals haar_value(m), where the horosphere of y is the
horosphere of x_m.

Some operations leave the anchor alone: left translation, left
multiplication by a ray stabilizer, and products of the form A^{-1} B.
Right multiplication by a horospherical element t moves the anchor to
t^{-1}(y).
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .automorphism import (ElementOracle, GroupSpec, Portrait, RandomElement)
from .errors import LevelOverflow, MalformedCylinder, PreconditionViolated
from .extension import ExtensionOracle, PartialAutomorphism
from .tree import (TreeShape, Vertex, ancestor, ball, busemann, color_to, descendants, distance,
                   meet, neighbor, path, sort_key, valency, x)


def haar_value(k: int, shape: TreeShape) -> Fraction:
    """Measure of the stabilizer of [x_k, xi), normalized at k = 0."""
    lo, hi = k // 2, -((-k) // 2)
    return Fraction(shape.d0 - 1) ** lo * Fraction(shape.d1 - 1) ** hi


def depth_budget(shape: TreeShape) -> int:
    return 6 if max(shape.d0, shape.d1) == 3 else 4


# ----------------------------------------------------------------- subgroups

@dataclass(frozen=True)
class CompactOpenSubgroup:
    """Pointwise stabilizer (inside the horospherical group) of a ray [y, xi),
    optionally together with the ball B(y, radius)."""
    anchor: Vertex
    radius: int = -1

    @classmethod
    def ray(cls, k: int) -> "CompactOpenSubgroup":
        return cls(x(k))

    @classmethod
    def ball(cls, j: int, r: int) -> "CompactOpenSubgroup":
        return cls(x(j), r)

    def fixes(self, v: Vertex) -> bool:
        if meet(v, self.anchor) == v:
            return True
        return distance(v, self.anchor) <= self.radius

    def fixed_colors(self, v: Vertex, shape: TreeShape) -> tuple:
        """Colors that every element's local permutation at v must fix."""
        if not self.fixes(v):
            return (1,)
        if distance(v, self.anchor) < self.radius:
            return tuple(range(1, valency(v, shape) + 1))
        out = {1}
        if v != self.anchor and meet(v, self.anchor) == v:
            out.add(color_to(v, path(v, self.anchor)[1]))
        if self.radius >= 0 and distance(v, self.anchor) == self.radius and v != self.anchor:
            out.add(color_to(v, path(v, self.anchor)[1]))
        return tuple(sorted(out))

    def sample(self, spec: GroupSpec, depth: int, rng: random.Random) -> Portrait:
        """Uniform restriction to B(anchor, depth) of a random element."""
        g = RandomElement(spec, rng.getrandbits(64), self.anchor, self.anchor,
                          fixed=lambda v: self.fixed_colors(v, spec.shape))
        return g.portrait(self.anchor, depth)

    def restriction_count(self, spec: GroupSpec, depth: int) -> int:
        """Number of distinct restrictions to B(anchor, depth)."""
        total = 1
        for v in ball(self.anchor, depth - 1, spec.shape) if depth else ():
            total *= len(_options(spec, v, self.fixed_colors(v, spec.shape), self.anchor))
        return total

    def enumerate(self, spec: GroupSpec, depth: int, accept_base=None):
        """All restrictions to B(anchor, depth), as Portraits."""
        shape = spec.shape
        inner = list(ball(self.anchor, depth - 1, shape)) if depth else []
        opts = []
        for v in inner:
            o = _options(spec, v, self.fixed_colors(v, shape), self.anchor)
            if v == self.anchor and accept_base is not None:
                o = [p for p in o if accept_base(p)]
            opts.append(o)
        for choice in itertools.product(*opts):
            yield _portrait_from_choices(shape, self.anchor, depth, inner, choice)


def _options(spec: GroupSpec, v: Vertex, fixed: tuple, center: Vertex) -> list:
    """Local permutations at v for elements fixing `center`; the edge back toward
    the center keeps its color because every non-fixed vertex hangs below its parent."""
    req = set(fixed)
    if v != center:
        req.add(color_to(v, path(v, center)[1]))
    return list(spec.allowed(v, tuple(sorted(req))))


def _portrait_from_choices(shape, center, depth, inner, choice) -> Portrait:
    return Portrait(shape, center, depth, center, dict(zip(inner, choice)))


def portrait_from_map(shape: TreeShape, center: Vertex, radius: int, vmap: dict) -> Portrait:
    locals_ = {}
    for v in ball(center, radius - 1, shape) if radius else ():
        gv = vmap[v]
        locals_[v] = tuple(color_to(gv, vmap[neighbor(v, c, shape)])
                           for c in range(1, valency(v, shape) + 1))
    return Portrait(shape, center, radius, vmap[center], locals_)


# ---------------------------------------------------- generator-based orbits

def rotation_image(pivot: Vertex, perm: tuple, z: Vertex, shape: TreeShape) -> Vertex:
    """Image of z under the rotation acting by `perm` at pivot and trivially elsewhere.

    `perm` fixes color 1, so only vertices below the pivot move: the first color
    of the downward path is replaced and the rest of the path is replayed."""
    if z == pivot or meet(z, pivot) != pivot:
        return z
    route = path(pivot, z)
    colors = [color_to(route[j], route[j + 1]) for j in range(len(route) - 1)]
    cur = neighbor(pivot, perm[colors[0] - 1], shape)
    for c in colors[1:]:
        cur = neighbor(cur, c, shape)
    return cur


def orbit(points, sub: CompactOpenSubgroup, spec: GroupSpec, limit: int = 2_000_000) -> frozenset:
    """Orbit of a vertex set under `sub`, closing under single-vertex rotations."""
    shape = spec.shape
    seen = set(points)
    frontier = list(points)
    while frontier:
        nxt = []
        for z in frontier:
            top = meet(z, sub.anchor)
            pivot = z
            pivots = []
            while True:
                pivots.append(pivot)
                if pivot == top:
                    break
                pivot = ancestor(pivot, 1)
            for pv in pivots[1:]:
                if sub.radius >= 0 and distance(pv, sub.anchor) < sub.radius:
                    continue
                for perm in spec.allowed(pv, sub.fixed_colors(pv, shape)):
                    w = rotation_image(pv, perm, z, shape)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
                        if len(seen) > limit:
                            raise LevelOverflow("orbit exceeds the enumeration limit")
        frontier = nxt
    return frozenset(seen)


def coset_representative(spec: GroupSpec, y: Vertex, z: Vertex) -> ExtensionOracle:
    """Horospherical element mapping the ray [y, xi) onto [z, xi), with g(y) = z."""
    if busemann(y) != busemann(z):
        raise PreconditionViolated("y and z must lie on one horosphere")

    def contains(v):
        return meet(v, y) == v

    def tau(v):
        return ancestor(z, busemann(y) - busemann(v))

    return ExtensionOracle(spec, PartialAutomorphism(contains, tau, y))


# ------------------------------------------------------------ cylinder sets

@dataclass(frozen=True)
class CylinderSet:
    anchor: Vertex
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        level = busemann(self.anchor)
        for z in self.members:
            if busemann(z) != level:
                raise MalformedCylinder(f"{z} is not on the horosphere of {self.anchor}")

    @classmethod
    def from_members(cls, anchor: Vertex, members) -> "CylinderSet":
        """Build from a list of coset labels; a repeated label is an error."""
        members = list(members)
        if len(set(members)) != len(members):
            raise MalformedCylinder("duplicate coset in cylinder set")
        return cls(anchor, frozenset(members))

    @property
    def level(self) -> int:
        return -busemann(self.anchor)

    def contains(self, g) -> bool:
        return g(self.anchor) in self.members

    def representatives(self, spec: GroupSpec, radius: int) -> list:
        """One Portrait per coset, on B(anchor, radius)."""
        return [coset_representative(spec, self.anchor, z).portrait(self.anchor, radius)
                for z in sorted(self.members, key=sort_key)]

    def sorted_members(self) -> list:
        return sorted(self.members, key=sort_key)


def measure(s: CylinderSet, shape: TreeShape) -> Fraction:
    return len(s.members) * haar_value(s.level, shape)


def canonical_descendant(v: Vertex, k: int) -> Vertex:
    for _ in range(k):
        v = Vertex(v.anchor - 1) if v.on_line else Vertex(v.anchor, v.branch + (2,))
    return v


def refine(s: CylinderSet, k: int, shape: TreeShape, budget: int = None) -> CylinderSet:
    """Same set expressed with an anchor k levels further from xi."""
    budget = depth_budget(shape) if budget is None else budget
    if k > budget:
        raise LevelOverflow(f"refinement by {k} levels exceeds the budget {budget}")
    if k == 0:
        return s
    members = set()
    for z in s.members:
        members.update(descendants(z, k, shape))
    return CylinderSet(canonical_descendant(s.anchor, k), frozenset(members))


def refine_to(s: CylinderSet, target: Vertex, shape: TreeShape, budget: int = None) -> CylinderSet:
    if meet(target, s.anchor) != s.anchor:
        raise MalformedCylinder("target anchor is not below the current anchor")
    k = busemann(target) - busemann(s.anchor)
    budget = depth_budget(shape) if budget is None else budget
    if k > budget:
        raise LevelOverflow(f"refinement by {k} levels exceeds the budget {budget}")
    members = set()
    for z in s.members:
        members.update(descendants(z, k, shape))
    return CylinderSet(target, frozenset(members))


def align(s: CylinderSet, t: CylinderSet, shape: TreeShape, budget: int = None):
    if s.anchor == t.anchor:
        return s, t
    if meet(s.anchor, t.anchor) == s.anchor:
        return refine_to(s, t.anchor, shape, budget), t
    if meet(s.anchor, t.anchor) == t.anchor:
        return s, refine_to(t, s.anchor, shape, budget)
    raise MalformedCylinder("anchors are incomparable; no common refinement")


def union(s, t, shape, budget=None):
    s, t = align(s, t, shape, budget)
    return CylinderSet(s.anchor, s.members | t.members)


def intersection(s, t, shape, budget=None):
    s, t = align(s, t, shape, budget)
    return CylinderSet(s.anchor, s.members & t.members)


def difference(s, t, shape, budget=None):
    s, t = align(s, t, shape, budget)
    return CylinderSet(s.anchor, s.members - t.members)


def symmetric_difference(s, t, shape, budget=None):
    s, t = align(s, t, shape, budget)
    return CylinderSet(s.anchor, s.members ^ t.members)


def same_set(s, t, shape, budget=None) -> bool:
    s, t = align(s, t, shape, budget)
    return s.members == t.members


def ray_subgroup_set(k: int) -> CylinderSet:
    """H_{x_k} itself as a cylinder set."""
    return CylinderSet(x(k), frozenset([x(k)]))


def folner_set(i: int, shape: TreeShape, refine_by: int = 0) -> CylinderSet:
    """F_i: elements fixing [x_i, xi) and moving x_{i-1}."""
    d = shape.valency(i)
    s = CylinderSet(x(i - 1), frozenset(Vertex(i, (c,)) for c in range(3, d + 1)))
    return refine(s, refine_by, shape) if refine_by else s


def conjugate(s: CylinderSet, n: int) -> CylinderSet:
    """a^n s a^{-n}."""
    shift = lambda v: Vertex(v.anchor + 2 * n, v.branch)
    return CylinderSet(shift(s.anchor), frozenset(shift(z) for z in s.members))


def left_translate(g, s: CylinderSet) -> CylinderSet:
    return CylinderSet(s.anchor, frozenset(g(z) for z in s.members))


def right_translate(s: CylinderSet, t: ElementOracle) -> CylinderSet:
    """s t for a horospherical element t."""
    return CylinderSet(t.preimage(s.anchor), s.members)


def left_multiply(sub: CompactOpenSubgroup, s: CylinderSet, spec: GroupSpec) -> CylinderSet:
    """K s for the subgroup K = sub."""
    return CylinderSet(s.anchor, orbit(s.members, sub, spec))


def inverse_product(a: CylinderSet, b: CylinderSet, spec: GroupSpec) -> CylinderSet:
    """The set a^{-1} b, anchored like b."""
    sub = CompactOpenSubgroup(a.anchor)
    out = set()
    for z in a.sorted_members():
        g = coset_representative(spec, a.anchor, z)
        pulled = [g.preimage(w) for w in b.members]
        out |= orbit(pulled, sub, spec)
    return CylinderSet(b.anchor, frozenset(out))


# ------------------------------------------------------ Folner diagnostics

def folner_defect(K, F: CylinderSet, spec: GroupSpec) -> Fraction:
    """m(F delta K F) / m(F); K = None means the trivial group."""
    if K is None:
        return Fraction(0)
    if isinstance(K, CylinderSet):
        if K.members != frozenset([K.anchor]):
            raise PreconditionViolated("K must be a ray stabilizer")
        K = CompactOpenSubgroup(K.anchor)
    KF = left_multiply(K, F, spec)
    sym = symmetric_difference(F, KF, spec.shape)
    return measure(sym, spec.shape) / measure(F, spec.shape)


def tempered_ratio(sequence, i: int, spec: GroupSpec) -> Fraction:
    """m(union_{k=1}^{i-1} F_k^{-1} F_i) / m(F_i) for a callable sequence k -> F_k."""
    Fi = sequence(i)
    if i <= 1:
        return Fraction(0)
    acc = CylinderSet(Fi.anchor, frozenset())
    for k in range(1, i):
        acc = union(acc, inverse_product(sequence(k), Fi, spec), spec.shape)
    return measure(acc, spec.shape) / measure(Fi, spec.shape)


def conjugated_sequence(F0: CylinderSet):
    return lambda n: conjugate(F0, n)


def representative_set(spec: GroupSpec, k: int, radius: int) -> list:
    """Minimal set of elements of H_{x_k} with pairwise distinct restrictions
    to B(x_k, radius), as Portraits."""
    return list(CompactOpenSubgroup.ray(k).enumerate(spec, radius))


@dataclass
class FolnerFamily:
    parity: str
    twist: Portrait
    base: CylinderSet

    def term(self, n: int, spec: GroupSpec) -> CylinderSet:
        t = _complete_twist(spec, self.twist)
        return conjugate(right_translate(self.base, t), n)


def _complete_twist(spec, p: Portrait):
    from .extension import complete
    return complete(spec, p, fix_line_from=p.base.anchor)


def folner_collection(spec: GroupSpec, variant: str = "literal") -> list:
    """Sequences n -> a^n F t a^{-n} with t running over the representative sets.

    variant "literal": F = F_0 (t in C_even) and F = F_1 (t in C_odd).
    variant "shifted": F = F_{-2} and F = F_{-1}, the form in which the twisted
    sets arise from the drift maps.
    """
    shape = spec.shape
    c_even = representative_set(spec, -1, 2)
    c_odd = representative_set(spec, 0, 2)
    even_base, odd_base = (0, 1) if variant == "literal" else (-2, -1)
    fam = [FolnerFamily("even", t, folner_set(even_base, shape)) for t in c_even]
    fam += [FolnerFamily("odd", t, folner_set(odd_base, shape)) for t in c_odd]
    return fam


def line_stabilizer_invariant(s: CylinderSet, spec: GroupSpec) -> bool:
    """Is s invariant under left multiplication by the line stabilizer M?"""
    return _m_orbit(s.members, spec) == s.members


def _m_orbit(points, spec: GroupSpec) -> frozenset:
    shape = spec.shape
    seen = set(points)
    frontier = list(points)
    while frontier:
        nxt = []
        for z in frontier:
            pv = z
            pivots = []
            while not pv.on_line:
                pv = ancestor(pv, 1)
                pivots.append(pv)
            for p in pivots:
                fixed = (1, 2) if p.on_line else (1,)
                for perm in spec.allowed(p, fixed):
                    w = rotation_image(p, perm, z, shape)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
        frontier = nxt
    return frozenset(seen)


# ---------------------------------------------------------- brute force haar

def coset_count_by_orbit(shape: TreeShape, big: int, small: int) -> int:
    """[H_{x_big} : H_{x_small}] for big >= small, via rotation-generated orbits
    of the segment [x_small, x_big]."""
    spec = GroupSpec.full(shape)
    return len(orbit([x(small)], CompactOpenSubgroup.ray(big), spec))


def coset_count_by_portraits(shape: TreeShape, big: int, small: int) -> int:
    """Same index, by enumerating local data on the segment from x_big down to x_small
    and counting the distinct images of x_small."""
    spec = GroupSpec.full(shape)
    sub = CompactOpenSubgroup.ray(big)
    seg = [x(j) for j in range(big, small, -1)]
    opts = [_options(spec, v, sub.fixed_colors(v, shape), x(big)) for v in seg]
    images = set()
    for choice in itertools.product(*opts):
        cur_img = x(big)
        for v, perm in zip(seg, choice):
            nxt = Vertex(v.anchor - 1)
            cur_img = neighbor(cur_img, perm[color_to(v, nxt) - 1], shape)
        images.add(cur_img)
    return len(images)


def brute_haar(k: int, shape: TreeShape, method: str = "portraits") -> Fraction:
    count = coset_count_by_portraits if method == "portraits" else coset_count_by_orbit
    if k >= 0:
        return Fraction(count(shape, k, 0))
    return Fraction(1, count(shape, 0, k))


# ------------------------------------------------------- Radon-Nikodym check

@dataclass
class Check:
    name: str
    cases: int = 0
    failures: int = 0
    witness: str = None

    def record(self, ok: bool, witness=None):
        self.cases += 1
        if not ok:
            self.failures += 1
            if self.witness is None:
                self.witness = str(witness)

    def to_json(self) -> dict:
        out = {"name": self.name, "cases": self.cases, "failures": self.failures}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class RNReport:
    i: int
    radius: int
    cosets: int
    image_cosets: int
    coset_ratio: Fraction
    folner_ratio: Fraction
    expected: Fraction
    checks: list

    @property
    def ok(self) -> bool:
        return (all(c.failures == 0 for c in self.checks)
                and self.coset_ratio == self.expected == self.folner_ratio)

    def to_json(self) -> dict:
        return {"i": self.i, "radius": self.radius, "cosets": self.cosets,
                "image_cosets": self.image_cosets, "coset_ratio": str(self.coset_ratio),
                "folner_ratio": str(self.folner_ratio), "expected": str(self.expected),
                "ok": self.ok, "checks": [c.to_json() for c in self.checks]}


def drift_sets(spec: GroupSpec, i: int, radius: int):
    """Restrictions to B(x_i, radius) of the elements of F_i."""
    return CompactOpenSubgroup.ray(i).enumerate(spec, radius, accept_base=lambda perm: perm[1] != 2)


def inverse_phi_key(spec, e, u_element, ps, radius) -> tuple:
    """Vertex images of B(x_{i-2}, radius) under Phi(u)^{-1} = e^{-1} u^{-1} Psi(u) a.

    This determines the right coset G_{B(x_{i-2}, radius), xi} Phi(u)."""
    from .automorphism import Composite, standard_a
    chain = Composite(e.inverse(), Composite(u_element.inverse(), Composite(ps, standard_a(spec))))
    return tuple(chain(v) for v in ball(x(ps.i - 2), radius, spec.shape))


def rn_check(spec: GroupSpec, e: ElementOracle, i: int, radius: int,
             completions: int = 2, horizon: int = 6, t: ElementOracle = None) -> RNReport:
    """Coset-level verification that Phi_e pushes Haar measure forward with
    constant density (d0-1)(d1-1) on F_i.

    Passing t replaces the constructed t_e; used for fault injection."""
    from .automorphism import Composite, r_of_epsilon
    from .extension import Psi, t_epsilon
    shape = spec.shape
    if r_of_epsilon(e, 12) != i - 1:
        raise PreconditionViolated(f"need r(e) = {i - 1}")
    if radius > depth_budget(shape):
        raise LevelOverflow(f"radius {radius} exceeds the depth budget")
    well = Check("well_defined")
    inj = Check("injective")
    cont = Check("containment")
    t = t if t is not None else t_epsilon(spec, e)
    keys = {}
    for n, p in enumerate(drift_sets(spec, i, radius)):
        seen_key = None
        for c in range(completions):
            pa = PartialAutomorphism.from_portrait(p, fix_line_from=i)
            u = ExtensionOracle(spec, pa, seed=None if c == 0 else f"rn|{n}|{c}")
            ps = Psi(spec, e, u, radius, i=i)
            key = inverse_phi_key(spec, e, u, ps, radius)
            if seen_key is None:
                seen_key = key
                # t Phi(u)^{-1} must lie in F_{i-2}
                from .automorphism import standard_a
                inv_phi = Composite(e.inverse(), Composite(u.inverse(), Composite(ps, standard_a(spec))))
                tp = Composite(t, inv_phi)
                fixed = all(tp(x(m)) == x(m) for m in range(i - 2, i - 2 + horizon))
                cont.record(fixed and tp(x(i - 3)) != x(i - 3), p)
            else:
                well.record(key == seen_key, p)
        inj.record(seen_key not in keys, p)
        keys[seen_key] = p
    domain = len(keys)
    count = Check("counts_match")
    target = CompactOpenSubgroup.ray(i - 2).restriction_count(spec, radius)
    target_f = sum(1 for _ in drift_sets(spec, i - 2, radius))
    count.record(domain == target_f, f"{domain} vs {target_f}")
    ball_here = haar_value(i, shape) / CompactOpenSubgroup.ray(i).restriction_count(spec, radius)
    ball_there = haar_value(i - 2, shape) / target
    image = right_translate(folner_set(i - 2, shape), t)
    folner_ratio = measure(folner_set(i, shape), shape) / measure(image, shape)
    return RNReport(i, radius, domain, target_f, ball_here / ball_there, folner_ratio,
                    Fraction((shape.d0 - 1) * (shape.d1 - 1)), [well, inj, cont, count])
