import random

import pytest
from hypothesis import given, settings, strategies as st

from arboreal import perms as P
from arboreal.automorphism import (Composite, Elliptic, GroupSpec, Hyperbolic, Identity, LocalRule,
                                   Portrait, RandomElement, Unbounded, apply,
                                   classify, compose, end_image, identity_portrait, invert,
                                   is_member, local_action, power, random_element, restrict,
                                   r_of_epsilon, standard_a, standard_w)
from arboreal.errors import EmptyDomain, OutOfDomain, PreconditionViolated
from arboreal.haar import CompactOpenSubgroup
from arboreal.perms import PermutationGroup
from arboreal.tree import TreeShape, ball, distance, x, xi_prefix

SHAPES = [TreeShape(3, 3), TreeShape(3, 4)]
S3 = PermutationGroup.symmetric(3)


# ---------------------------------------------------------------- perms

def test_permutation_basics():
    p, q = (2, 3, 1), (2, 1, 3)
    assert P.compose(p, P.inverse(p)) == P.identity(3)
    assert P.compose(p, q) == tuple(p[q[i] - 1] for i in range(3))
    assert P.all_perms(3)[0] == (1, 2, 3)
    assert len(P.all_perms(4)) == 24
    assert all(r[0] == 1 for r in P.fixing(3, (1,)))


def test_local_group_checks():
    alt3 = PermutationGroup.generated(3, [(2, 3, 1)])
    assert alt3.is_transitive() and not alt3.generated_by_point_stabilizers()
    with pytest.raises(PreconditionViolated):
        GroupSpec.universal(alt3, alt3)
    alt4 = PermutationGroup.generated(4, [(2, 3, 1, 4), (1, 3, 4, 2)])
    assert len(alt4) == 12 and alt4.generated_by_point_stabilizers()
    assert alt4.is_k_transitive(2) and not alt4.is_k_transitive(3)
    assert alt4.flip_capability() is False
    assert S3.flip_capability() is True
    assert GroupSpec.universal(S3, S3).flip is True


# ------------------------------------------------------------- portraits

@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_identity_and_a(shape):
    spec = GroupSpec.full(shape)
    idp = identity_portrait(shape, x(0), 3)
    assert all(apply(idp, v) == v for v in ball(x(0), 3, shape))
    a = standard_a(spec)
    assert apply(a.portrait(x(0), 3), x(0)) == x(2)
    assert all(a(x(i)) == x(i + 2) for i in range(-10, 11))
    inv = invert(a.portrait(x(0), 3))
    assert apply(inv, x(2)) == x(0)
    assert a.inverse()(x(0)) == x(-2)


def test_apply_out_of_domain():
    shape = TreeShape(3, 3)
    with pytest.raises(OutOfDomain):
        apply(identity_portrait(shape, x(0), 2), x(3))


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_compose_matches_vertexwise_oracle(shape):
    spec = GroupSpec.full(shape)
    for seed in range(6):
        g, h = random_element(spec, f"g{seed}", 1), random_element(spec, f"h{seed}", 1)
        pg = g.portrait(x(0), 4)
        ph = h.portrait(x(0), 4)
        pc = compose(pg, ph)
        for v in ball(x(0), pc.radius, shape):
            assert apply(pc, v) == g(h(v))
        gi = compose(pg, invert(pg))
        assert all(apply(gi, v) == v for v in ball(gi.base, gi.radius, shape))
        assert invert(invert(pg)) == pg
        assert compose(identity_portrait(shape, pg.base_image, 4), pg) == pg


def test_compose_empty_domain():
    shape = TreeShape(3, 3)
    a = standard_a(GroupSpec.full(shape))
    far = a.portrait(x(40), 1)
    with pytest.raises(EmptyDomain):
        compose(far, identity_portrait(shape, x(0), 1))


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_portrait_json_round_trip(shape):
    p = random_element(GroupSpec.full(shape), 3).portrait(x(0), 3)
    data = p.to_json()
    assert set(data) == {"base", "radius", "base_image", "locals"}
    assert set(data["locals"][0]) == {"vertex", "perm"}
    assert Portrait.from_json(data, shape) == p


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_oracles_are_coherent(shape):
    spec = GroupSpec.full(shape)
    for g in (standard_a(spec), standard_w(spec), random_element(spec, 11), Identity(shape)):
        big = g.portrait(x(1), 5)
        assert restrict(big, 3) == g.portrait(x(1), 3)
        # different centres agree on their overlap
        other = g.portrait(x(2), 4)
        for v in ball(x(1), 2, shape):
            assert apply(big, v) == apply(other, v)


def test_local_rule_is_recovered():
    shape = TreeShape(3, 3)
    rule = LocalRule(shape, x(0), x(0), lambda v: (1, 3, 2) if v.on_line else (1, 2, 3))
    assert local_action(rule.portrait(x(0), 2), x(0)) == (1, 3, 2)
    assert local_action(identity_portrait(shape, x(0), 2), x(1)) == (1, 2, 3)


def test_universal_membership():
    spec = GroupSpec.universal(S3, S3)
    assert is_member(identity_portrait(spec.shape, x(0), 3), spec)
    assert is_member(random_element(spec, 5).portrait(x(0), 3), spec)
    alt4 = PermutationGroup.generated(4, [(2, 3, 1, 4), (1, 3, 4, 2)])
    u = GroupSpec.universal(alt4, alt4)
    for seed in range(5):
        assert is_member(random_element(u, seed, 1).portrait(x(0), 3), u)
    odd = identity_portrait(u.shape, x(0), 2)
    odd.locals[x(0)] = (1, 2, 4, 3)
    assert not is_member(odd, u)
    # the haar sampler only ever produces members
    rng = random.Random(1)
    for _ in range(5):
        assert is_member(CompactOpenSubgroup.ray(0).sample(u, 3, rng), u)


# -------------------------------------------------------- classification

@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_classify(shape):
    spec = GroupSpec.full(shape)
    a = standard_a(spec)
    res = classify(a, 6)
    assert isinstance(res, Hyperbolic) and res.translation_length == 2
    assert all(v.on_line for v in res.axis_segment)
    assert isinstance(classify(Identity(shape), 3), Elliptic)
    for n in (1, 2, 3):
        assert classify(power(a, n), 8).translation_length == 2 * n
    fix3 = RandomElement(spec, 4, x(3), x(3))
    assert classify(fix3, 5).witness is not None


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_translation_lengths_even(shape):
    spec = GroupSpec.full(shape)
    for seed in range(10):
        c = classify(random_element(spec, seed), 7)
        if isinstance(c, Hyperbolic):
            assert c.translation_length % 2 == 0


def test_r_of_epsilon():
    shape = TreeShape(3, 3)
    spec = GroupSpec.full(shape)
    assert r_of_epsilon(Identity(shape), 8) is Unbounded.PLUS_WITHIN_WINDOW
    assert r_of_epsilon(standard_a(spec), 8) is Unbounded.MINUS

    # fixes [x_{-5}, x_2] and moves x_3

    class Moves(RandomElement):
        def local(self, v):
            if v == x(2):
                return (3, 2, 1)
            return super().local(v)
    e = Moves(spec, "r", x(0), x(0), fixed=lambda v: (1, 2) if v.on_line and -5 <= v.anchor < 2 else ())
    assert r_of_epsilon(e, 8) == 2


def test_end_image():
    shape = TreeShape(3, 3)
    spec = GroupSpec.full(shape)
    xi = xi_prefix(0, 4)
    assert end_image(Identity(shape), xi, 4) == xi
    img = end_image(standard_a(spec), xi, 4)
    assert img.ray[0] == x(2) and all(v.on_line for v in img.ray)
    w = standard_w(spec)
    flipped = end_image(w, xi_prefix(5, 3), 3)
    assert all(v.on_line and v.anchor < 0 for v in flipped.ray)
    with pytest.raises(OutOfDomain):
        end_image(w, xi, 9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.sampled_from(SHAPES))
def test_group_laws_on_guaranteed_balls(s1, s2, s3, shape):
    spec = GroupSpec.full(shape)
    f, g, h = (random_element(spec, s, 1) for s in (s1, s2, s3))
    left = Composite(Composite(f, g), h)
    right = Composite(f, Composite(g, h))
    for v in ball(x(0), 3, shape):
        assert left(v) == right(v)
        assert Composite(g, g.inverse())(v) == v
        assert distance(g(v), g(x(0))) == distance(v, x(0))
