import pytest

from arboreal.automorphism import GroupSpec, Identity, apply, random_drift_element
from arboreal.batch import BallIndex, DriftEnumerator, psi_phi_suite
from arboreal.errors import LevelOverflow
from arboreal.haar import drift_sets
from arboreal.tree import TreeShape, x

SHAPES = [TreeShape(3, 3), TreeShape(3, 4)]


def test_ball_index_codes_are_injective_on_small_ball():
    shape = TreeShape(3, 3)
    idx = BallIndex(shape, x(0), 2)
    spec = GroupSpec.full(shape)
    en = DriftEnumerator(spec, 0, 2)
    rows = en.rows(0, en.count)
    codes = idx.codes(rows)
    assert len(set(codes.tolist())) == en.count
    assert all(idx.code_of(rows[k]) == int(codes[k]) for k in range(0, en.count, 5))


@pytest.mark.parametrize("shape", SHAPES, ids=str)
def test_enumerator_matches_portrait_enumeration(shape):
    """The vectorized rows agree with the slow portrait enumeration as sets of maps."""
    spec = GroupSpec.full(shape)
    en = DriftEnumerator(spec, 1, 2)
    fast = set()
    for row in en.rows(0, en.count):
        fast.add(tuple(en.index.verts[j] for j in row))
    slow = set()
    for p in drift_sets(spec, 1, 2):
        slow.add(tuple(apply(p, v) for v in en.index.verts))
    assert fast == slow and len(fast) == en.count


@pytest.mark.parametrize("shape,depth", [(SHAPES[0], 2), (SHAPES[0], 3), (SHAPES[1], 2)], ids=str)
@pytest.mark.parametrize("i", [1, 2])
def test_suite_passes(shape, depth, i):
    spec = GroupSpec.full(shape)
    rep = psi_phi_suite(spec, random_drift_element(spec, i, 5), i, depth)
    assert rep.ok, [c.to_json() for c in rep.checks if c.failures]
    assert rep.elements > 0 and all(c.cases > 0 for c in rep.checks)


def test_suite_detects_corrupted_t_with_witness():
    shape = TreeShape(3, 3)
    spec = GroupSpec.full(shape)
    rep = psi_phi_suite(spec, random_drift_element(spec, 1, 0), 1, 2, t=Identity(shape))
    assert not rep.ok
    bad = [c for c in rep.checks if c.failures]
    assert bad and all(c.witness is not None for c in bad)


def test_depth_budget_overflows():
    shape = TreeShape(3, 4)
    spec = GroupSpec.full(shape)
    e = random_drift_element(spec, 1, 0)
    with pytest.raises(LevelOverflow):
        psi_phi_suite(spec, e, 1, 4)
    with pytest.raises(LevelOverflow):
        psi_phi_suite(spec, e, 1, 3, max_rows=1000)


def test_suite_is_deterministic():
    spec = GroupSpec.full(TreeShape(3, 3))
    e = random_drift_element(spec, 1, 2)
    a = psi_phi_suite(spec, e, 1, 2, seed=4).to_json()
    b = psi_phi_suite(spec, e, 1, 2, seed=4).to_json()
    assert a == b
