"""Permutations of edge colors and finite permutation groups.

A permutation of {1..d} is a tuple p with p[c-1] the image of color c.
The total order on permutations is lexicographic on that one-line tuple,
which puts the identity first.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import PreconditionViolated

ORDERS_VERSION = "lex-oneline/address-string v1"


def identity(d: int) -> tuple:
    return tuple(range(1, d + 1))


def compose(p: tuple, q: tuple) -> tuple:
    """p after q."""
    return tuple(p[c - 1] for c in q)


def inverse(p: tuple) -> tuple:
    out = [0] * len(p)
    for c, img in enumerate(p, start=1):
        out[img - 1] = c
    return tuple(out)


@lru_cache(maxsize=None)
def all_perms(d: int) -> tuple:
    return tuple(itertools.permutations(range(1, d + 1)))


@lru_cache(maxsize=None)
def fixing(d: int, fixed: tuple) -> tuple:
    """All permutations of degree d fixing every color in `fixed`."""
    return tuple(p for p in all_perms(d) if all(p[c - 1] == c for c in fixed))


def lexmin_with(d: int, constraints: dict):
    """Smallest permutation in one-line order with p[c] = constraints[c].

    Returns None when the constraints are not injective.
    """
    used = set(constraints.values())
    if len(used) != len(constraints):
        return None
    free = iter(sorted(set(range(1, d + 1)) - used))
    return tuple(constraints[c] if c in constraints else next(free) for c in range(1, d + 1))


@dataclass(frozen=True)
class PermutationGroup:
    degree: int
    elements: tuple = field(repr=False)

    @classmethod
    def generated(cls, degree: int, generators) -> "PermutationGroup":
        e = identity(degree)
        seen = {e}
        frontier = [e]
        gens = [tuple(g) for g in generators]
        for g in gens:
            if sorted(g) != list(range(1, degree + 1)):
                raise PreconditionViolated(f"{g} is not a permutation of degree {degree}")
        while frontier:
            nxt = []
            for p in frontier:
                for g in gens:
                    r = compose(g, p)
                    if r not in seen:
                        seen.add(r)
                        nxt.append(r)
            frontier = nxt
        return cls(degree, tuple(sorted(seen)))

    @classmethod
    def symmetric(cls, degree: int) -> "PermutationGroup":
        return cls(degree, all_perms(degree))

    def __contains__(self, p) -> bool:
        return tuple(p) in self._set

    @property
    def _set(self):
        s = self.__dict__.get("_cache")
        if s is None:
            s = frozenset(self.elements)
            object.__setattr__(self, "_cache", s)
        return s

    def __len__(self):
        return len(self.elements)

    def is_group(self) -> bool:
        s = self._set
        if identity(self.degree) not in s:
            return False
        return all(compose(p, q) in s for p in s for q in s) and all(inverse(p) in s for p in s)

    def orbit(self, c: int) -> set:
        return {p[c - 1] for p in self.elements}

    def is_transitive(self) -> bool:
        return len(self.orbit(1)) == self.degree

    def stabilizer(self, c: int) -> list:
        return [p for p in self.elements if p[c - 1] == c]

    def generated_by_point_stabilizers(self) -> bool:
        gens = set()
        for c in range(1, self.degree + 1):
            gens.update(self.stabilizer(c))
        return len(PermutationGroup.generated(self.degree, gens)) == len(self)

    def is_k_transitive(self, k: int) -> bool:
        if k > self.degree:
            return False
        tuples = {tuple(p[c - 1] for c in range(1, k + 1)) for p in self.elements}
        count = 1
        for j in range(k):
            count *= self.degree - j
        return len(tuples) == count

    def flip_capability(self):
        """True, False or None (unknown) for the flip condition at the local level.

        Accept when 3-transitive.  Otherwise search directly: for every color a
        and every pair b, c distinct from a there must be an element fixing a
        and swapping b and c, and the group must be 2-transitive.  Above degree 8
        the search is skipped and the answer is unknown.
        """
        if self.is_k_transitive(3):
            return True
        if self.degree > 8:
            return None
        if not self.is_k_transitive(2):
            return False
        for a in range(1, self.degree + 1):
            for b, c in itertools.combinations([t for t in range(1, self.degree + 1) if t != a], 2):
                if not any(p[a - 1] == a and p[b - 1] == c and p[c - 1] == b for p in self.elements):
                    return False
        return True
