import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from arboreal.automorphism import GroupSpec, Identity, apply, random_drift_element
from arboreal.errors import LevelOverflow, MalformedCylinder
from arboreal.haar import (CompactOpenSubgroup, CylinderSet, brute_haar, conjugate, difference,
                           folner_collection, folner_defect, folner_set, haar_value, intersection,
                           measure, ray_subgroup_set, refine, representative_set, rn_check, same_set,
                           symmetric_difference, tempered_ratio, union)
from arboreal.tree import TreeShape, descendants, x

SHAPES = [TreeShape(3, 3), TreeShape(3, 4)]

# Frozen output of the two brute-force index counts, k = -3..4.
BRUTE = {
    (3, 3): ["1/8", "1/4", "1/2", "1", "2", "4", "8", "16"],
    (3, 4): ["1/12", "1/6", "1/2", "1", "3", "6", "18", "36"],
    (4, 3): ["1/18", "1/6", "1/3", "1", "2", "6", "12", "36"],
}


@pytest.mark.parametrize("dims", sorted(BRUTE))
def test_haar_value_matches_frozen_brute_force(dims):
    shape = TreeShape(*dims)
    for k, want in zip(range(-3, 5), BRUTE[dims]):
        assert haar_value(k, shape) == Fraction(want)


@pytest.mark.parametrize("method", ["portraits", "orbit"])
def test_brute_routes_reproduce_frozen_values(method):
    shape = TreeShape(3, 4)
    got = [str(brute_haar(k, shape, method)) for k in range(-2, 3)]
    assert got == BRUTE[(3, 4)][1:6]


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_folner_base_set_has_measure_one_half(shape):
    assert measure(folner_set(0, shape), shape) == Fraction(1, 2)
    # F_0 plus the stabilizer of x_{-1} tile the stabilizer of x_0
    whole = union(folner_set(0, shape), ray_subgroup_set(-1), shape)
    assert same_set(whole, ray_subgroup_set(0), shape)


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_conjugation_scales_measure(shape):
    factor = Fraction((shape.d0 - 1) * (shape.d1 - 1))
    for i in (0, 1):
        s = folner_set(i, shape)
        for n in (-2, -1, 1, 2):
            assert measure(conjugate(s, n), shape) == measure(s, shape) * factor ** n


def test_refinement_preserves_measure_and_respects_budget():
    shape = TreeShape(3, 3)
    s = folner_set(1, shape)
    for k in range(4):
        r = refine(s, k, shape)
        assert measure(r, shape) == measure(s, shape)
        assert same_set(r, s, shape)
    with pytest.raises(LevelOverflow):
        refine(s, 7, shape)


def test_from_members_rejects_duplicates_and_wrong_level():
    with pytest.raises(MalformedCylinder):
        CylinderSet.from_members(x(0), [x(0), x(0)])
    with pytest.raises(MalformedCylinder):
        CylinderSet(x(0), frozenset([x(1)]))


def horosphere_members(shape):
    # the level of x_0 below x_2
    return descendants(x(2), 2, shape)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_measure_is_additive(data):
    shape = TreeShape(3, 4)
    pool = horosphere_members(shape)
    a = CylinderSet(x(0), frozenset(data.draw(st.sets(st.sampled_from(pool)))))
    b = CylinderSet(x(0), frozenset(data.draw(st.sets(st.sampled_from(pool)))))
    m = lambda s: measure(s, shape)
    assert m(union(a, b, shape)) + m(intersection(a, b, shape)) == m(a) + m(b)
    assert m(symmetric_difference(a, b, shape)) == m(difference(a, b, shape)) + m(difference(b, a, shape))
    # a set at a coarser anchor, refined to meet the other
    c = folner_set(1, shape)
    assert m(union(a, c, shape)) + m(intersection(a, c, shape)) == m(a) + m(c)


def test_representative_sets_have_eight_members():
    spec = GroupSpec.full(TreeShape(3, 3))
    c_even = representative_set(spec, -1, 2)
    c_odd = representative_set(spec, 0, 2)
    assert len(c_even) == len(c_odd) == 8
    assert len({tuple(sorted((str(v), perm) for v, perm in p.locals.items())) for p in c_even}) == 8


def test_haar_sampler_is_uniform_on_cosets():
    """Images of x_{-2} under a sampled element of H_{x_0} are uniform over four cosets."""
    shape = TreeShape(3, 3)
    spec = GroupSpec.full(shape)
    rng = random.Random(3)
    sub = CompactOpenSubgroup.ray(0)
    n = 2000
    counts = Counter(apply(sub.sample(spec, 2, rng), x(-2)) for _ in range(n))
    assert len(counts) == 4
    chi2 = sum((c - n / 4) ** 2 / (n / 4) for c in counts.values())
    assert chi2 < 16.27   # 3 degrees of freedom, 0.1% level


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_folner_defect_and_tempered_ratio(shape):
    spec = GroupSpec.full(shape)
    fam = folner_collection(spec, "shifted")[0]
    k_sub = ray_subgroup_set(-2)
    for n in (1, 2, 3):
        assert folner_defect(k_sub, fam.term(n, spec), spec) == 0
    seq = lambda n: conjugate(folner_set(0, shape), n)
    assert tempered_ratio(seq, 3, spec) == 1


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_rn_check_small(shape):
    spec = GroupSpec.full(shape)
    e = random_drift_element(spec, 1, 0)
    rep = rn_check(spec, e, 1, 1)
    assert rep.ok
    assert rep.expected == (shape.d0 - 1) * (shape.d1 - 1)


def test_rn_check_detects_a_wrong_t():
    shape = TreeShape(3, 3)
    spec = GroupSpec.full(shape)
    e = random_drift_element(spec, 1, 0)
    rep = rn_check(spec, e, 1, 1, t=Identity(shape))
    assert not rep.ok
