from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from arboreal.tree import (HalfTreeRef, TreeShape, Vertex, ball, busemann, distance, in_half_tree,
                           meet, neighbor, neighbors, path, sphere, valency, x, xi_prefix)

SHAPES = [TreeShape(3, 3), TreeShape(3, 4)]


def bfs_distances(src, shape, radius):
    """Independent oracle: breadth-first search over the neighbor relation."""
    seen = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if seen[v] == radius:
            continue
        for w in neighbors(v, shape):
            if w not in seen:
                seen[w] = seen[v] + 1
                queue.append(w)
    return seen


def test_neighbor_counts_follow_parity():
    shape = TreeShape(3, 4)
    nb = neighbors(x(0), shape)
    assert len(nb) == 3 and x(-1) in nb and x(1) in nb
    assert len(neighbors(x(1), shape)) == 4
    # one step off the line at an even anchor lands on an odd vertex
    child = neighbor(x(0), 3, shape)
    assert child.parity == 1 and len(neighbors(child, shape)) == 4


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_neighbors_distinct_and_adjacent(shape):
    for v in ball(x(0), 4, shape):
        nb = neighbors(v, shape)
        assert len(set(nb)) == len(nb) == valency(v, shape)
        assert all(distance(v, w) == 1 for w in nb)
        assert all(v in neighbors(w, shape) for w in nb)


def test_distance_examples():
    assert distance(x(0), x(0)) == 0
    assert distance(x(-2), x(3)) == 5


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_distance_matches_bfs_on_radius_five(shape):
    pts = ball(x(0), 5, shape)
    for src in pts[::7]:
        oracle = bfs_distances(src, shape, 10)
        for w in pts:
            assert distance(src, w) == oracle[w]


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_geodesics_unique_and_consistent(shape):
    pts = ball(x(1), 3, shape)
    for v in pts:
        for w in pts:
            p = path(v, w)
            assert p[0] == v and p[-1] == w and len(p) == distance(v, w) + 1
            assert all(distance(a, b) == 1 for a, b in zip(p, p[1:]))
            assert len(set(p)) == len(p)


def test_busemann_examples():
    shape = TreeShape(3, 3)
    assert busemann(x(0)) == 0
    assert busemann(x(3)) == -3
    two_off = neighbor(neighbor(x(1), 3, shape), 2, shape)
    assert distance(two_off, x(1)) == 2 and busemann(two_off) == 1


def test_half_tree_examples():
    h = HalfTreeRef(x(0), x(1))
    assert h.contains(x(5))
    assert not h.contains(x(-1))


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_half_trees_partition(shape):
    pts = ball(x(0), 5, shape)
    for v in ball(x(0), 2, shape):
        for w in neighbors(v, shape):
            for z in pts:
                assert in_half_tree(v, w, z) != in_half_tree(w, v, z)
                # geodesic oracle: z is on the w side iff the path to v passes w
                assert in_half_tree(v, w, z) == (w in path(z, v))


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_address_round_trip(shape):
    for v in ball(x(-1), 4, shape):
        assert Vertex.parse(str(v)) == v
        for c in range(1, valency(v, shape) + 1):
            w = neighbor(v, c, shape)
            back = [d for d in range(1, valency(w, shape) + 1) if neighbor(w, d, shape) == v]
            assert len(back) == 1


def test_sphere_sizes():
    shape = TreeShape(3, 4)
    assert len(sphere(x(0), 1, shape)) == 3
    assert len(sphere(x(0), 2, shape)) == 3 * 3
    assert len(sphere(x(1), 2, shape)) == 4 * 2


def test_meet_is_lowest_common_ancestor_toward_xi():
    shape = TreeShape(3, 3)
    a, b = neighbor(x(0), 3, shape), neighbor(x(2), 3, shape)
    assert meet(a, b) == x(2)


def test_xi_prefix_is_a_ray():
    xi_prefix(-3, 6).check()


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.lists(st.integers(2, 3), max_size=4), st.integers(-6, 6),
       st.lists(st.integers(2, 3), max_size=4))
def test_four_point_condition(j1, b1, j2, b2):
    v = Vertex(j1, tuple([3] + b1[1:]) if b1 else ())
    w = Vertex(j2, tuple([3] + b2[1:]) if b2 else ())
    y, z = x(0), x(1)
    sums = sorted([distance(v, w) + distance(y, z), distance(v, y) + distance(w, z),
                   distance(v, z) + distance(w, y)])
    assert sums[1] == sums[2]
