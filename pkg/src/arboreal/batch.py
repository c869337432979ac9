"""Exhaustive vectorized verification of the drift maps Psi and Phi.

Every element u of F_i is enumerated through its restriction to B(x_i, R).
The restriction is stored as a row of ball indices.  Psi(u) depends on u only
through the ray from x_i toward u e(xi).  So Psi is built once per ray class
by the oracle and is then applied to all rows of that class with array
indexing.

Translation by a identifies B(x_{i-2}, R) with B(x_i, R).  On that ball the
inverse drift map is e^{-1} u^{-1} Psi(u) a.  The factor e^{-1} is common to
all rows, so the coset of Phi(u) is encoded by w = u^{-1} Psi(u), an
isometry of B(x_i, R) fixing x_i.  Such isometries get an exact integer code
built from the child ranks of the images.  The digits run from the center
outward, so the code modulo a level weight is the code of the restriction to
a smaller ball.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .automorphism import Composite, GroupSpec, r_of_epsilon
from .errors import LevelOverflow, PreconditionViolated
from .extension import Psi, complete, t_epsilon
from .haar import Check, CompactOpenSubgroup, _options, inverse_phi_key, portrait_from_map
from .tree import Vertex, ball, distance, in_half_tree, neighbor, path, valency, x

CHUNK = 1 << 19
MAX_ROWS = 50_000_000   # enumeration budget for one suite run


@dataclass
class BallIndex:
    """Index tables for B(center, radius)."""
    shape: object
    center: object
    radius: int
    verts: tuple = field(init=False)

    def __post_init__(self):
        shape = self.shape
        self.verts = ball(self.center, self.radius, shape)
        self.ids = {v: j for j, v in enumerate(self.verts)}
        n = len(self.verts)
        dmax = max(shape.d0, shape.d1)
        self.dist = np.array([distance(v, self.center) for v in self.verts])
        self.nb = np.full((n, dmax + 1), -1, dtype=np.int16)
        for j, v in enumerate(self.verts):
            for c in range(1, valency(v, shape) + 1):
                w = neighbor(v, c, shape)
                if w in self.ids:
                    self.nb[j, c] = self.ids[w]
        self.parent = np.full(n, -1, dtype=np.int16)
        self.rank = np.zeros(n, dtype=np.uint64)
        self.base = np.ones(n, dtype=object)
        for j, v in enumerate(self.verts[1:], start=1):
            p = path(v, self.center)[1]
            self.parent[j] = self.ids[p]
            kids = [w for w in (neighbor(p, c, shape) for c in range(1, valency(p, shape) + 1))
                    if distance(w, self.center) > distance(p, self.center)]
            self.rank[j] = kids.index(v)
            self.base[j] = len(kids)
        weights, total = [0], 1
        for j in range(1, n):
            weights.append(total)
            total *= int(self.base[j])
        if total >= 1 << 63:
            raise LevelOverflow("isometry codes do not fit in 63 bits")
        self.weight = np.array(weights, dtype=np.uint64)
        self.level_weight = {}
        for r in range(self.radius + 1):
            inside = [j for j in range(1, n) if self.dist[j] <= r]
            w = 1
            for j in inside:
                w *= int(self.base[j])
            self.level_weight[r] = np.uint64(w)

    def codes(self, rows: np.ndarray) -> np.ndarray:
        """Exact codes of isometries fixing the center, given as image rows."""
        return (self.rank[rows] * self.weight).sum(axis=1, dtype=np.uint64)

    def code_of(self, images) -> int:
        return int(self.codes(np.asarray([images], dtype=np.int64))[0])


@dataclass
class SuiteReport:
    shape: str
    i: int
    depth: int
    seed: object
    elements: int
    classes: int
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.failures == 0 for c in self.checks)

    def to_json(self) -> dict:
        return {"shape": self.shape, "i": self.i, "depth": self.depth, "seed": self.seed,
                "elements": self.elements, "classes": self.classes, "ok": self.ok,
                "checks": [c.to_json() for c in self.checks]}


class DriftEnumerator:
    """Mixed-radix enumeration of F_i restricted to B(x_i, R)."""

    def __init__(self, spec: GroupSpec, i: int, radius: int):
        self.spec, self.i, self.radius = spec, i, radius
        self.index = BallIndex(spec.shape, x(i), radius)
        sub = CompactOpenSubgroup.ray(i)
        self.inner = [j for j, v in enumerate(self.index.verts) if self.index.dist[j] < radius]
        self.options = []
        for j in self.inner:
            v = self.index.verts[j]
            opts = _options(spec, v, sub.fixed_colors(v, spec.shape), x(i))
            if j == 0:
                opts = [p for p in opts if p[1] != 2]
            self.options.append(np.array(opts, dtype=np.int16).reshape(len(opts), -1))
        self.count = 1
        for o in self.options:
            self.count *= len(o)

    def rows(self, start: int, stop: int) -> np.ndarray:
        idx = self.index
        n = stop - start
        out = np.full((n, len(idx.verts)), -1, dtype=np.int16)
        out[:, 0] = 0
        rest = np.arange(start, stop, dtype=np.int64)
        for j, opts in zip(self.inner, self.options):
            rest, digit = np.divmod(rest, len(opts))
            perm = opts[digit]
            img = out[:, j]
            v = idx.verts[j]
            for c in range(1, valency(v, self.spec.shape) + 1):
                child = idx.nb[j, c]
                if child < 0 or idx.dist[child] <= idx.dist[j]:
                    continue
                out[:, child] = idx.nb[img, perm[:, c - 1]]
        return out

    def portrait(self, row) -> object:
        verts = self.index.verts
        vmap = {v: verts[int(row[j])] for j, v in enumerate(verts)}
        return portrait_from_map(self.spec.shape, x(self.i), self.radius, vmap)


def _groups_consistent(keys: np.ndarray, vals: np.ndarray) -> int:
    """Number of rows whose value differs from another row sharing its key."""
    order = np.argsort(keys, kind="stable")
    k, v = keys[order], vals[order]
    same = k[1:] == k[:-1]
    return int(np.count_nonzero(same & (v[1:] != v[:-1])))


def _record_rows(check: Check, ok: np.ndarray, start: int, en: DriftEnumerator) -> None:
    """Bulk version of Check.record; the first failing row becomes the witness."""
    check.cases += len(ok)
    bad = np.flatnonzero(~ok)
    check.failures += len(bad)
    if len(bad) and check.witness is None:
        row = en.rows(start + int(bad[0]), start + int(bad[0]) + 1)[0]
        check.witness = json.dumps(en.portrait(row).to_json(), sort_keys=True)


def psi_phi_suite(spec: GroupSpec, e, i: int, depth: int = 3, seed=0,
                  samples: int = 24, chunk: int = CHUNK, t=None,
                  max_rows: int = MAX_ROWS) -> SuiteReport:
    """Exhaustive checks of the five Psi properties, containment, coset-level
    bijectivity, the factorization identity and the coset identity at every
    smaller radius, for all of F_i restricted to B(x_i, depth)."""
    shape = spec.shape
    if r_of_epsilon(e, 12) != i - 1:
        raise PreconditionViolated(f"need r(e) = {i - 1}")
    en = DriftEnumerator(spec, i, depth)
    if en.count > max_rows:
        raise LevelOverflow(f"{en.count} restrictions at depth {depth} exceed the budget {max_rows}")
    idx = en.index
    ids, verts = idx.ids, idx.verts
    ray_cols = [ids[e(x(i - 2 + k))] for k in range(1, depth + 1)]
    ray_line = [ids[x(i + k)] for k in range(depth + 1)]
    rear = [j for j, v in enumerate(verts) if v == x(i) or in_half_tree(x(i), x(i - 1), v)]
    t = t if t is not None else t_epsilon(spec, e)
    et = Composite(e, t.inverse())
    # an image outside the ball gets id -1, which no row can match
    contain_fix = np.array([ids.get(et(x(m)), -1) for m in range(i - 2, i - 1 + depth)], dtype=np.int16)
    contain_move = ids.get(et(x(i - 3)), -1)

    checks = {name: Check(name) for name in (
        "psi_fixes_base", "psi_fixes_rear", "psi_swaps_ends", "psi_locality", "psi_classes",
        "psi_matches_oracle", "phi_key_matches_oracle", "factorization", "containment",
        "injective", "counts_match", "coset_well_defined", "coset_injective")}

    psi_table = {}     # class id -> Psi image row on the ball
    psi_code = {}

    def class_psi(cls_id, row):
        u = complete(spec, en.portrait(row), fix_line_from=i)
        ps = Psi(spec, e, u, depth, i=i)
        table = np.array([ids[ps(v)] for v in verts], dtype=np.int16)
        psi_table[cls_id] = table
        psi_code[cls_id] = idx.code_of(table)
        c = checks
        c["psi_fixes_base"].record(table[0] == 0, cls_id)
        c["psi_fixes_rear"].record(all(table[j] == j for j in rear), cls_id)
        ray = [0] + [int(row[col]) for col in ray_cols]
        ok = all(table[ray_line[k]] == ray[k] and table[ray[k]] == ray_line[k] for k in range(depth + 1))
        c["psi_swaps_ends"].record(ok, cls_id)

    u_codes = np.empty(en.count, dtype=np.uint64)
    w_codes = np.empty(en.count, dtype=np.uint64)
    classes = np.empty(en.count, dtype=np.int32)
    rng = random.Random(f"suite|{seed}")
    sample_rows = sorted(rng.sample(range(en.count), min(samples, en.count)))
    samples_seen = []
    for start in range(0, en.count, chunk):
        stop = min(en.count, start + chunk)
        U = en.rows(start, stop).astype(np.int64)
        cls = U[:, ray_cols[-1]]
        for c in np.unique(cls):
            if int(c) not in psi_table:
                class_psi(int(c), U[int(np.argmax(cls == c))])
        table = np.stack([psi_table.get(c, np.zeros(len(verts), np.int16)) for c in range(len(verts))]).astype(np.int64)
        PS = table[cls]
        INV = np.argsort(U, axis=1)
        W = np.take_along_axis(INV, PS, axis=1)
        # Phi(u), moved to B(x_i, R), is the inverse of w; Psi after it must give u back.
        PHI = np.argsort(W, axis=1)
        ok = ~np.any(np.take_along_axis(PS, PHI, axis=1) != U, axis=1)
        _record_rows(checks["factorization"], ok, start, en)
        ok = np.all(W[:, ray_line] == contain_fix[None, :], axis=1)
        col_move = ids[x(i - 1)]
        ok &= W[:, col_move] != contain_move
        _record_rows(checks["containment"], ok, start, en)
        u_codes[start:stop] = idx.codes(U)
        w_codes[start:stop] = idx.codes(W)
        classes[start:stop] = cls
        for n in sample_rows:
            if start <= n < stop:
                samples_seen.append((n, U[n - start].copy(), W[n - start].copy(), int(cls[n - start])))

    # oracle cross-checks on sampled rows
    a_inv = {v: Vertex(v.anchor - 2, v.branch) for v in verts}
    for n, row, wrow, c in samples_seen:
        u = complete(spec, en.portrait(row), fix_line_from=i)
        ps = Psi(spec, e, u, depth, i=i)
        direct = np.array([ids[ps(v)] for v in verts], dtype=np.int16)
        checks["psi_matches_oracle"].record(np.array_equal(direct, psi_table[c]), n)
        key = inverse_phi_key(spec, e, u, ps, depth)
        want = dict(zip(ball(x(i - 2), depth, shape), key))
        batch = {a_inv[verts[j]]: e.preimage(verts[int(wrow[j])]) for j in range(len(verts))}
        checks["phi_key_matches_oracle"].record(want == batch, n)

    # Psi depends only on the ray class, and distinct classes give distinct Psi
    codes = list(psi_code.values())
    checks["psi_classes"].record(len(set(codes)) == len(codes), f"{len(set(codes))} of {len(codes)}")
    # locality: u agreeing on B(x_i, r) forces Psi(u) to agree there
    cls_index = np.array(sorted(psi_code), dtype=np.int64)
    cls_codes = np.array([psi_code[c] for c in sorted(psi_code)], dtype=np.uint64)
    psi_rows = cls_codes[np.searchsorted(cls_index, classes)]
    for r in range(depth + 1):
        wu = idx.level_weight[r]
        bad = _groups_consistent(u_codes % wu, psi_rows % wu)
        checks["psi_locality"].cases += 1
        checks["psi_locality"].failures += bad
        if bad and checks["psi_locality"].witness is None:
            checks["psi_locality"].witness = f"radius {r}"
    # coset-level bijectivity at the full radius
    uniq = np.unique(w_codes).size
    checks["injective"].record(uniq == en.count, f"{uniq} distinct of {en.count}")
    target = DriftEnumerator(spec, i - 2, depth).count
    checks["counts_match"].record(target == en.count, f"{en.count} vs {target}")
    # the coset identity at smaller radii: well defined and injective on cosets
    for r in range(1, depth):
        wr = idx.level_weight[r]
        ur, kr = u_codes % wr, w_codes % wr
        bad = _groups_consistent(ur, kr)
        checks["coset_well_defined"].record(bad == 0, f"radius {r}")
        checks["coset_injective"].record(np.unique(ur).size == np.unique(kr).size
                                         == np.unique(ur * wr + kr).size, f"radius {r}")
    return SuiteReport(str(shape), i, depth, seed, en.count, len(psi_table), list(checks.values()))
