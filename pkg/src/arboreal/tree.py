"""Coordinates and metric on a biregular tree with a marked bi-infinite line.

Every vertex is addressed relative to the marked line (x_j): an anchor index j
and a branch of edge colors leading away from x_j.  The edge coloring is fixed:

  * at a line vertex x_j, color 1 points to x_{j+1}, color 2 points to x_{j-1}
    and colors 3..d point to the off-line children (j, (c,));
  * at an off-line vertex, color 1 points back to its parent and colors
    2..d point to its children.

So color 1 always points toward the end at +infinity (called xi here), which
keeps the ray-stabilizer conditions local.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import PreconditionViolated


@dataclass(frozen=True)
class TreeShape:
    d0: int
    d1: int

    def __post_init__(self):
        if self.d0 < 3 or self.d1 < 3:
            raise PreconditionViolated(f"valencies must be at least 3, got {self.d0},{self.d1}")

    def valency(self, parity: int) -> int:
        return self.d0 if parity % 2 == 0 else self.d1

    @classmethod
    def parse(cls, text: str) -> "TreeShape":
        a, b = text.split(",")
        return cls(int(a), int(b))

    def __str__(self):
        return f"{self.d0},{self.d1}"


@dataclass(frozen=True)
class Vertex:
    anchor: int
    branch: tuple = ()

    @property
    def parity(self) -> int:
        return (self.anchor + len(self.branch)) % 2

    @property
    def on_line(self) -> bool:
        return not self.branch

    def __str__(self):
        return f"{self.anchor}:" + ".".join(str(c) for c in self.branch)

    def __repr__(self):
        return f"V({self})"

    @classmethod
    def parse(cls, text: str) -> "Vertex":
        anchor, _, rest = text.partition(":")
        branch = tuple(int(c) for c in rest.split(".")) if rest else ()
        return cls(int(anchor), branch)


def x(j: int) -> Vertex:
    """The line vertex x_j."""
    return Vertex(j, ())


def sort_key(v: Vertex) -> str:
    return str(v)


def valency(v: Vertex, shape: TreeShape) -> int:
    return shape.valency(v.parity)


def check_address(v: Vertex, shape: TreeShape) -> None:
    b = v.branch
    for k, c in enumerate(b):
        d = shape.valency(v.anchor + k)
        low = 3 if k == 0 else 2
        if not low <= c <= d:
            raise PreconditionViolated(f"bad label {c} at position {k} of {v}")


def neighbor(v: Vertex, color: int, shape: TreeShape) -> Vertex:
    d = valency(v, shape)
    if not 1 <= color <= d:
        raise PreconditionViolated(f"color {color} out of range at {v}")
    if v.on_line:
        if color == 1:
            return Vertex(v.anchor + 1)
        if color == 2:
            return Vertex(v.anchor - 1)
        return Vertex(v.anchor, (color,))
    if color == 1:
        return Vertex(v.anchor, v.branch[:-1])
    return Vertex(v.anchor, v.branch + (color,))


def neighbors(v: Vertex, shape: TreeShape) -> list:
    return [neighbor(v, c, shape) for c in range(1, valency(v, shape) + 1)]


def up(v: Vertex) -> Vertex:
    """One step toward xi (color 1)."""
    if v.on_line:
        return Vertex(v.anchor + 1)
    return Vertex(v.anchor, v.branch[:-1])


def color_to(v: Vertex, w: Vertex) -> int:
    """Color of the edge from v to an adjacent vertex w."""
    if v.on_line:
        if w.on_line:
            if w.anchor == v.anchor + 1:
                return 1
            if w.anchor == v.anchor - 1:
                return 2
        elif w.anchor == v.anchor and len(w.branch) == 1:
            return w.branch[0]
    elif w.anchor == v.anchor:
        if w.branch == v.branch[:-1]:
            return 1
        if len(w.branch) == len(v.branch) + 1 and w.branch[:-1] == v.branch:
            return w.branch[-1]
    raise PreconditionViolated(f"{v} and {w} are not adjacent")


def busemann(v: Vertex) -> int:
    """Horospherical height: b(x_i) = -i, increasing away from xi."""
    return -v.anchor + len(v.branch)


def _raise_to(v: Vertex, level: int) -> Vertex:
    """Ancestor of v toward xi with busemann value `level` (level <= b(v))."""
    steps = busemann(v) - level
    b = v.branch
    if steps <= len(b):
        return Vertex(v.anchor, b[:len(b) - steps])
    return Vertex(v.anchor + steps - len(b))


def ancestor(v: Vertex, k: int) -> Vertex:
    """The vertex k steps from v along the ray toward xi."""
    return _raise_to(v, busemann(v) - k)


def meet(v: Vertex, w: Vertex) -> Vertex:
    """First common vertex of the rays from v and w toward xi."""
    level = min(busemann(v), busemann(w))
    a, b = _raise_to(v, level), _raise_to(w, level)
    if a == b:
        return a
    if a.anchor == b.anchor:
        n = 0
        for c1, c2 in zip(a.branch, b.branch):
            if c1 != c2:
                break
            n += 1
        return Vertex(a.anchor, a.branch[:n])
    return Vertex(max(a.anchor, b.anchor))


def distance(v: Vertex, w: Vertex) -> int:
    if v.anchor == w.anchor:
        n = 0
        for c1, c2 in zip(v.branch, w.branch):
            if c1 != c2:
                break
            n += 1
        return len(v.branch) + len(w.branch) - 2 * n
    return len(v.branch) + abs(v.anchor - w.anchor) + len(w.branch)


def path(v: Vertex, w: Vertex) -> list:
    """Geodesic from v to w, both endpoints included."""
    m = meet(v, w)
    left = [v]
    while left[-1] != m:
        left.append(up(left[-1]))
    right = [w]
    while right[-1] != m:
        right.append(up(right[-1]))
    return left + right[-2::-1]


def step_toward(v: Vertex, w: Vertex) -> Vertex:
    """The neighbor of v on the geodesic to w (v != w)."""
    m = meet(v, w)
    if m != v:
        return up(v)
    # w lies below v: descend along w's ray
    level = busemann(v) + 1
    return _raise_to(w, level)


def in_half_tree(start: Vertex, end: Vertex, v: Vertex) -> bool:
    """True iff v lies strictly on the `end` side of the edge [start, end]."""
    return distance(v, end) < distance(v, start)


def sphere(center: Vertex, r: int, shape: TreeShape) -> list:
    return sorted(_sphere(center, r, shape), key=sort_key)


def _sphere(center: Vertex, r: int, shape: TreeShape) -> list:
    if r == 0:
        return [center]
    layer, prev = [center], {center: None}
    for _ in range(r):
        nxt = []
        for u in layer:
            for n in neighbors(u, shape):
                if n != prev[u]:
                    prev[n] = u
                    nxt.append(n)
        layer = nxt
    return layer


@lru_cache(maxsize=4096)
def ball(center: Vertex, r: int, shape: TreeShape) -> tuple:
    """Vertices within distance r, sorted by (distance, address)."""
    out = []
    for k in range(r + 1):
        out.extend(sphere(center, k, shape))
    return tuple(out)


def descendants(v: Vertex, depth: int, shape: TreeShape) -> list:
    """Vertices `depth` steps below v (away from xi), sorted."""
    layer = [v]
    for _ in range(depth):
        nxt = []
        for u in layer:
            for c in range(2, valency(u, shape) + 1):
                nxt.append(neighbor(u, c, shape))
        layer = nxt
    return sorted(layer, key=sort_key)


def ray_to_xi(v: Vertex, length: int) -> list:
    out = [v]
    for _ in range(length):
        out.append(up(out[-1]))
    return out


@dataclass(frozen=True)
class EndPrefix:
    """Initial segment of a geodesic ray: consecutive, non-backtracking."""
    ray: tuple

    @property
    def depth(self) -> int:
        return len(self.ray) - 1

    def check(self) -> None:
        for k in range(1, len(self.ray)):
            if distance(self.ray[k - 1], self.ray[k]) != 1:
                raise PreconditionViolated("ray entries not adjacent")
            if k >= 2 and self.ray[k - 2] == self.ray[k]:
                raise PreconditionViolated("ray backtracks")

    def __str__(self):
        return " ".join(str(v) for v in self.ray)


def xi_prefix(start: int, depth: int) -> EndPrefix:
    return EndPrefix(tuple(x(start + k) for k in range(depth + 1)))


def xi_minus_prefix(start: int, depth: int) -> EndPrefix:
    return EndPrefix(tuple(x(start - k) for k in range(depth + 1)))


@dataclass(frozen=True)
class HalfTreeRef:
    start: Vertex
    end: Vertex

    def contains(self, v: Vertex) -> bool:
        return in_half_tree(self.start, self.end, v)
