"""Finite-depth portraits and lazily evaluated tree automorphisms.

All automorphisms are type preserving.  An element is described by the image
of one base vertex together with a local color permutation at every vertex:
the edge of color c at v goes to the edge of color perm[c-1] at g(v).
"""
from __future__ import annotations

import enum
import random
import threading
from dataclasses import dataclass, field

from . import perms as P
from .errors import EmptyDomain, Inconclusive, OutOfDomain, PreconditionViolated
from .perms import PermutationGroup
from .tree import (EndPrefix, TreeShape, Vertex, ball, color_to, distance, neighbor,
                   path, sort_key, step_toward, valency, x)


# ---------------------------------------------------------------- group specs

@dataclass(frozen=True)
class GroupSpec:
    """Either the full automorphism group or a universal group U(F_even, F_odd)."""
    shape: TreeShape
    kind: str = "full"
    f_even: PermutationGroup = None
    f_odd: PermutationGroup = None

    def __post_init__(self):
        if self.kind not in ("full", "universal"):
            raise PreconditionViolated(f"unknown group kind {self.kind}")
        if self.kind == "universal":
            for f, d in ((self.f_even, self.shape.d0), (self.f_odd, self.shape.d1)):
                if f is None or f.degree != d:
                    raise PreconditionViolated("local group degree must match valency")
                if not f.is_group():
                    raise PreconditionViolated("local data is not a group")
                if not f.is_transitive() or not f.generated_by_point_stabilizers():
                    raise PreconditionViolated(
                        "local group must be transitive and generated by point stabilizers")

    @classmethod
    def full(cls, shape: TreeShape) -> "GroupSpec":
        return cls(shape)

    @classmethod
    def universal(cls, f_even: PermutationGroup, f_odd: PermutationGroup) -> "GroupSpec":
        return cls(TreeShape(f_even.degree, f_odd.degree), "universal", f_even, f_odd)

    def local_group(self, parity: int):
        if self.kind == "full":
            return None
        return self.f_even if parity % 2 == 0 else self.f_odd

    def allowed(self, v: Vertex, fixed: tuple = ()) -> tuple:
        """Allowed local permutations at v fixing the colors in `fixed`, in order."""
        d = valency(v, self.shape)
        cands = P.fixing(d, tuple(sorted(fixed)))
        f = self.local_group(v.parity)
        if f is None:
            return cands
        return tuple(p for p in cands if p in f)

    def permits(self, v: Vertex, perm: tuple) -> bool:
        f = self.local_group(v.parity)
        return f is None or perm in f

    @property
    def flip(self):
        if self.kind == "full":
            return True
        a, b = self.f_even.flip_capability(), self.f_odd.flip_capability()
        if a is False or b is False:
            return False
        if a is None or b is None:
            return None
        return True

    @property
    def tits_independence(self) -> bool:
        return True

    def describe(self) -> dict:
        out = {"shape": [self.shape.d0, self.shape.d1], "kind": self.kind}
        if self.kind == "universal":
            out["f_even"] = [list(p) for p in self.f_even.elements]
            out["f_odd"] = [list(p) for p in self.f_odd.elements]
        return out


# ------------------------------------------------------------------ portraits

class Portrait:
    """An automorphism restricted to the ball B(base, radius)."""

    def __init__(self, shape: TreeShape, base: Vertex, radius: int, base_image: Vertex, locals_: dict):
        if radius < 0:
            raise EmptyDomain("negative radius")
        if base.parity != base_image.parity:
            raise PreconditionViolated("portrait must preserve vertex type")
        self.shape = shape
        self.base = base
        self.radius = radius
        self.base_image = base_image
        self.locals = dict(locals_)
        self._map = None

    def vertex_map(self) -> dict:
        if self._map is None:
            m = {self.base: self.base_image}
            layer = [self.base]
            for _ in range(self.radius):
                nxt = []
                for v in layer:
                    perm = self.locals[v]
                    gv = m[v]
                    for c in range(1, len(perm) + 1):
                        w = neighbor(v, c, self.shape)
                        if w not in m:
                            m[w] = neighbor(gv, perm[c - 1], self.shape)
                            nxt.append(w)
                layer = nxt
            self._map = m
        return self._map

    def __call__(self, v: Vertex) -> Vertex:
        return apply(self, v)

    def __eq__(self, other):
        if not isinstance(other, Portrait):
            return NotImplemented
        mine, theirs = self.vertex_map(), other.vertex_map()
        common = [v for v in mine if v in theirs]
        return bool(common) and all(mine[v] == theirs[v] for v in common)

    def __hash__(self):
        return hash((self.base, self.radius, self.base_image))

    def key(self) -> tuple:
        """Hashable encoding of the vertex map in ball order."""
        m = self.vertex_map()
        return tuple(m[v] for v in ball(self.base, self.radius, self.shape))

    def to_json(self) -> dict:
        return {
            "base": str(self.base),
            "radius": self.radius,
            "base_image": str(self.base_image),
            "locals": [{"vertex": str(v), "perm": list(self.locals[v])}
                       for v in sorted(self.locals, key=sort_key)],
        }

    @classmethod
    def from_json(cls, data: dict, shape: TreeShape) -> "Portrait":
        locals_ = {Vertex.parse(e["vertex"]): tuple(e["perm"]) for e in data["locals"]}
        return cls(shape, Vertex.parse(data["base"]), data["radius"],
                   Vertex.parse(data["base_image"]), locals_)

    def __repr__(self):
        return f"Portrait(base={self.base}, radius={self.radius}, base_image={self.base_image})"


def identity_portrait(shape: TreeShape, base: Vertex, radius: int) -> Portrait:
    locals_ = {v: P.identity(valency(v, shape)) for v in ball(base, radius - 1, shape)} if radius else {}
    return Portrait(shape, base, radius, base, locals_)


def apply(p: Portrait, v: Vertex) -> Vertex:
    if distance(p.base, v) > p.radius:
        raise OutOfDomain(f"{v} outside B({p.base},{p.radius})")
    return p.vertex_map()[v]


def local_action(p: Portrait, v: Vertex) -> tuple:
    if distance(p.base, v) >= p.radius:
        raise OutOfDomain(f"no local data at {v}")
    return p.locals[v]


def compose(p: Portrait, q: Portrait) -> Portrait:
    """Portrait of p after q on the largest ball the data certifies."""
    r = min(q.radius, p.radius - distance(q.base_image, p.base))
    if r < 0:
        raise EmptyDomain("composite has no certified ball")
    qm = q.vertex_map()
    locals_ = {}
    for v in ball(q.base, r - 1, q.shape) if r else ():
        locals_[v] = P.compose(p.locals[qm[v]], q.locals[v])
    return Portrait(q.shape, q.base, r, p.vertex_map()[q.base_image], locals_)


def invert(p: Portrait) -> Portrait:
    m = p.vertex_map()
    locals_ = {m[v]: P.inverse(perm) for v, perm in p.locals.items()}
    return Portrait(p.shape, p.base_image, p.radius, p.base, locals_)


def restrict(p: Portrait, radius: int, center: Vertex = None) -> Portrait:
    center = p.base if center is None else center
    if distance(center, p.base) + radius > p.radius:
        raise OutOfDomain("restriction ball not inside portrait")
    m = p.vertex_map()
    locals_ = {v: p.locals[v] for v in ball(center, radius - 1, p.shape)} if radius else {}
    return Portrait(p.shape, center, radius, m[center], locals_)


def is_member(p: Portrait, spec: GroupSpec) -> bool:
    return all(spec.permits(v, perm) for v, perm in p.locals.items())


# -------------------------------------------------------------------- oracles

class ElementOracle:
    """A lazily evaluated automorphism given by a base image and local rules.

    Subclasses implement `local(v)`.  Image and preimage lookups are memoized
    behind a lock, so concurrent evaluation is safe and observationally pure.
    """

    def __init__(self, shape: TreeShape, base: Vertex, base_image: Vertex):
        if base.parity != base_image.parity:
            raise PreconditionViolated("automorphisms must preserve vertex type")
        self.shape = shape
        self.base = base
        self.base_image = base_image
        self._lock = threading.RLock()
        self._img = {base: base_image}
        self._pre = {base_image: base}

    def local(self, v: Vertex) -> tuple:
        raise NotImplementedError

    def image(self, v: Vertex) -> Vertex:
        hit = self._img.get(v)
        if hit is not None:
            return hit
        route = path(self.base, v)
        cur, gcur = route[0], self.base_image
        for nxt in route[1:]:
            got = self._img.get(nxt)
            if got is None:
                perm = self.local(cur)
                got = neighbor(gcur, perm[color_to(cur, nxt) - 1], self.shape)
                with self._lock:
                    self._img.setdefault(nxt, got)
                    self._pre.setdefault(got, nxt)
            cur, gcur = nxt, got
        return gcur

    def preimage(self, w: Vertex) -> Vertex:
        hit = self._pre.get(w)
        if hit is not None:
            return hit
        route = path(self.base_image, w)
        cur, pcur = route[0], self.base
        for nxt in route[1:]:
            got = self._pre.get(nxt)
            if got is None:
                perm = self.local(pcur)
                got = neighbor(pcur, P.inverse(perm)[color_to(cur, nxt) - 1], self.shape)
                with self._lock:
                    self._pre.setdefault(nxt, got)
                    self._img.setdefault(got, nxt)
            cur, pcur = nxt, got
        return pcur

    def __call__(self, v: Vertex) -> Vertex:
        return self.image(v)

    def portrait(self, center: Vertex, radius: int) -> Portrait:
        locals_ = {v: self.local(v) for v in ball(center, radius - 1, self.shape)} if radius else {}
        return Portrait(self.shape, center, radius, self.image(center), locals_)

    def __mul__(self, other: "ElementOracle") -> "ElementOracle":
        return Composite(self, other)

    def inverse(self) -> "ElementOracle":
        return Inverse(self)


class LocalRule(ElementOracle):
    """Element given by a base image and a rule v -> local permutation."""

    def __init__(self, shape, base, base_image, rule, name="rule"):
        super().__init__(shape, base, base_image)
        self._rule = rule
        self.name = name

    def local(self, v):
        return self._rule(v)


class Identity(LocalRule):
    def __init__(self, shape: TreeShape):
        super().__init__(shape, x(0), x(0), lambda v: P.identity(valency(v, shape)), "id")

    def image(self, v):
        return v

    def preimage(self, w):
        return w


class Shift(LocalRule):
    """Translation (j, branch) -> (j + 2n, branch) with identity locals."""

    def __init__(self, shape: TreeShape, n: int = 1):
        super().__init__(shape, x(0), x(2 * n), lambda v: P.identity(valency(v, shape)), f"a^{n}")
        self.n = n

    def image(self, v):
        return Vertex(v.anchor + 2 * self.n, v.branch)

    def preimage(self, w):
        return Vertex(w.anchor - 2 * self.n, w.branch)

    def inverse(self):
        return Shift(self.shape, -self.n)


class Reflection(LocalRule):
    """x_j -> x_{-j}, swapping colors 1 and 2 on the line; exchanges the two ends."""

    def __init__(self, shape: TreeShape):
        def rule(v):
            p = P.identity(valency(v, shape))
            if v.on_line:
                p = (2, 1) + p[2:]
            return p
        super().__init__(shape, x(0), x(0), rule, "w")

    def image(self, v):
        return Vertex(-v.anchor, v.branch)

    def preimage(self, w):
        return Vertex(-w.anchor, w.branch)


class Composite(ElementOracle):
    """g after h."""

    def __init__(self, g: ElementOracle, h: ElementOracle):
        super().__init__(h.shape, h.base, g.image(h.base_image))
        self.g, self.h = g, h

    def local(self, v):
        return P.compose(self.g.local(self.h.image(v)), self.h.local(v))

    def image(self, v):
        return self.g.image(self.h.image(v))

    def preimage(self, w):
        return self.h.preimage(self.g.preimage(w))


class Inverse(ElementOracle):
    def __init__(self, g: ElementOracle):
        super().__init__(g.shape, g.base_image, g.base)
        self.g = g

    def local(self, w):
        return P.inverse(self.g.local(self.g.preimage(w)))

    def image(self, w):
        return self.g.preimage(w)

    def preimage(self, v):
        return self.g.image(v)

    def inverse(self):
        return self.g


class PortraitElement(ElementOracle):
    """A portrait viewed as an oracle; raises OutOfDomain outside its ball."""

    def __init__(self, p: Portrait):
        super().__init__(p.shape, p.base, p.base_image)
        self.p = p

    def local(self, v):
        return local_action(self.p, v)


class RandomElement(ElementOracle):
    """Deterministic pseudo-random element.

    The local at v is drawn, from a stream keyed by (seed, vertex), among the
    allowed permutations that send the edge back toward the base to the edge
    back toward the base image and that fix the colors listed by `fixed(v)`.
    """

    def __init__(self, spec: GroupSpec, seed, base: Vertex, base_image: Vertex, fixed=None):
        super().__init__(spec.shape, base, base_image)
        self.spec = spec
        self.seed = seed
        self._fixed = fixed or (lambda v: ())
        self._locals = {}

    def constraints(self, v: Vertex) -> dict:
        req = {c: c for c in self._fixed(v)}
        if v != self.base:
            u = step_toward(v, self.base)
            c, t = color_to(v, u), color_to(self.image(v), self.image(u))
            if req.get(c, t) != t:
                raise PreconditionViolated(f"inconsistent constraints at {v}")
            req[c] = t
        return req

    def local(self, v):
        hit = self._locals.get(v)
        if hit is not None:
            return hit
        req = self.constraints(v)
        opts = [p for p in self.spec.allowed(v) if all(p[c - 1] == t for c, t in req.items())]
        if not opts:
            raise PreconditionViolated(f"no allowed local permutation at {v}")
        rng = random.Random(f"{self.seed}|{v}")
        return self._locals.setdefault(v, opts[rng.randrange(len(opts))])


def power(g: ElementOracle, n: int) -> ElementOracle:
    if n == 0:
        return Identity(g.shape)
    base = g if n > 0 else g.inverse()
    out = base
    for _ in range(abs(n) - 1):
        out = Composite(base, out)
    return out


def standard_a(spec: GroupSpec) -> ElementOracle:
    """Translation of length 2 along the marked line toward xi.

    All locals are the identity, so it lies in every universal group and its
    local data is lexicographically minimal.
    """
    return Shift(spec.shape, 1)


def standard_w(spec: GroupSpec) -> ElementOracle:
    return Reflection(spec.shape)


def random_element(spec: GroupSpec, seed, spread: int = 3) -> ElementOracle:
    """A random element of the group moving x_0 to a random nearby vertex."""
    rng = random.Random(f"base|{seed}")
    target = x(0)
    steps = rng.randrange(0, spread + 1) * 2
    prev = None
    for _ in range(steps):
        opts = [n for n in (neighbor(target, c, spec.shape) for c in range(1, valency(target, spec.shape) + 1))
                if n != prev]
        prev, target = target, opts[rng.randrange(len(opts))]
    return RandomElement(spec, seed, x(0), target)


# ------------------------------------------------------------- classification

@dataclass
class Elliptic:
    witness: Vertex


@dataclass
class Hyperbolic:
    translation_length: int
    axis_segment: list = field(default_factory=list)


def classify(g: ElementOracle, window: int):
    vs = ball(x(0), window, g.shape)
    disp = {v: distance(v, g.image(v)) for v in vs}
    low = min(disp.values())
    winners = [v for v in vs if disp[v] == low]
    if low == 0:
        return Elliptic(winners[0])
    inner = [v for v in winners if distance(x(0), v) < window]
    if not inner:
        raise Inconclusive(f"minimal displacement only seen on the boundary of radius {window}")
    return Hyperbolic(low, sorted(winners, key=lambda v: (v.anchor, sort_key(v))))


class Unbounded(enum.Enum):
    PLUS_WITHIN_WINDOW = "PlusInfinityWithinWindow"
    MINUS = "MinusInfinity"


def r_of_epsilon(e: ElementOracle, window: int):
    """Largest i in the window with [x_{i-1}, x_i] fixed pointwise."""
    fixed = {k: e.image(x(k)) == x(k) for k in range(-window - 1, window + 1)}
    best = None
    for i in range(-window, window + 1):
        if fixed[i - 1] and fixed[i]:
            best = i
    if best is None:
        return Unbounded.MINUS
    if best == window:
        return Unbounded.PLUS_WITHIN_WINDOW
    return best


def end_image(g, end: EndPrefix, depth: int) -> EndPrefix:
    if depth > end.depth:
        raise OutOfDomain("requested depth exceeds the prefix")
    return EndPrefix(tuple(g(v) for v in end.ray[:depth + 1]))


class DriftElement(RandomElement):
    """Random element fixing the edge [x_{i-2}, x_{i-1}] and moving x_i, so r = i - 1."""

    def __init__(self, spec: GroupSpec, i: int, seed):
        super().__init__(spec, seed, x(i - 1), x(i - 1))
        self.i = i

    def local(self, v):
        if v != self.base:
            return super().local(v)
        opts = [p for p in self.spec.allowed(v, (2,)) if p[0] != 1]
        if not opts:
            raise PreconditionViolated(f"no local permutation at {v} moves x_{self.i}")
        rng = random.Random(f"{self.seed}|{v}")
        return opts[rng.randrange(len(opts))]


def random_drift_element(spec: GroupSpec, i: int, seed) -> ElementOracle:
    return DriftElement(spec, i, seed)
