import pytest
from numpy.random import RandomState

from FacetDB.core import (
    EMPTY, Address, Branch, BranchTable, Facet, Label, MixedFacetShape,
    Store, consistent, contradictory, mk_facet, mk_facet_branches, neg, pos,
    restrict_label, table, visible,
)
from FacetDB.oracle import project_value, views

k, l = Label(1, "k"), Label(2, "l")


def random_table(rng, labels, arity=2):
    rows = []
    for _ in range(rng.randint(0, 5)):
        guard = frozenset(Branch(label, bool(rng.rand() < 0.5))
            for label in labels if rng.rand() < 0.3)
        rows.append((guard, tuple("ab"[rng.randint(2)] for _ in range(arity))))
    return BranchTable(tuple(rows), arity)


def random_value(rng, labels, is_table, depth=2):
    if is_table: return random_table(rng, labels)
    if depth > 0 and rng.rand() < 0.5:
        label = labels[rng.randint(len(labels))]
        return mk_facet(label, random_value(rng, labels, False, depth-1),
            random_value(rng, labels, False, depth-1))
    return int(rng.randint(0, 4))


def random_branches(rng, labels):
    return frozenset(Branch(labels[rng.randint(len(labels))],
        bool(rng.rand() < 0.5)) for _ in range(rng.randint(0, 4)))


def test_mk_facet_tables():
    "Rows of two different tables are guarded by k and not-k"
    high = table((EMPTY, ("Alice", "Smith")))
    low = table((EMPTY, ("Bob", "Jones")))
    assert mk_facet(k, high, low) == table(({pos(k)}, ("Alice", "Smith")),
        ({neg(k)}, ("Bob", "Jones")))


def test_mk_facet_shares_equal_rows():
    "A row present on both sides keeps its guard"
    row = table((EMPTY, ("r",)))
    assert mk_facet(k, row, row) == row


def test_mk_facet_keeps_row_order_of_each_side():
    high = table((EMPTY, ("a",)), (EMPTY, ("b",)))
    low = table((EMPTY, ("b",)))
    assert mk_facet(k, high, low) == table(({pos(k)}, ("a",)), (EMPTY, ("b",)))


def test_mk_facet_drops_contradicted_rows():
    high = table(({neg(k)}, ("a",)), (EMPTY, ("b",)))
    low = table(({pos(k)}, ("c",)))
    assert mk_facet(k, high, low) == table(({pos(k)}, ("b",)))


def test_mk_facet_values():
    assert mk_facet(k, 1, 2) == Facet(k, 1, 2)
    assert mk_facet(k, Facet(k, 1, 3), Facet(k, 4, 2)) == Facet(k, 1, 2)
    assert mk_facet(k, Facet(l, 1, 3), 2) == Facet(k, Facet(l, 1, 3), 2)


def test_mk_facet_mixed_shapes():
    with pytest.raises(MixedFacetShape):
        mk_facet(k, 1, table(arity=1))
    with pytest.raises(MixedFacetShape):
        mk_facet(k, table(arity=1), table(arity=2))


def test_restrict_label():
    assert restrict_label(Facet(l, Facet(k, 1, 2), 3), k, False) == \
        Facet(l, 2, 3)


def test_mk_facet_branches():
    assert mk_facet_branches(EMPTY, "high", "low") == "high"
    assert mk_facet_branches({pos(k)}, 5, 0) == Facet(k, 5, 0)
    assert mk_facet_branches({pos(k), neg(l)}, 1, 2) == \
        Facet(k, Facet(l, 2, 1), 2)


def test_contradictory_branches_show_low():
    value = mk_facet_branches({pos(k), neg(k)}, 1, 2)
    for L in views([k]): assert project_value(L, value) == 2


def test_visible():
    assert visible(EMPTY, frozenset())
    assert visible({pos(k), neg(l)}, {k})
    assert not visible({pos(k), neg(l)}, {k, l})


def test_consistent():
    assert not consistent({pos(k)}, {neg(k)})
    assert consistent({pos(k)}, {pos(k), pos(l)})
    assert consistent(EMPTY, {pos(k), neg(l)})
    assert contradictory({pos(k), neg(k)})


def test_store_updates_return_new_store():
    store = Store()
    updated = store.write(Address(1), 5).set_policy(k, "policy")
    assert store.heap == {} and store.policies == {}
    assert updated.read(Address(1)) == 5
    assert updated.policy(k) == "policy"


def test_row_length_must_match_arity():
    with pytest.raises(MixedFacetShape):
        BranchTable(((EMPTY, ("a", "b")),), 1)


def test_mk_facet_projection_over_all_views(labels):
    "A view sees the high side of <k ? H : L> exactly when it contains k"
    rng = RandomState(1)
    all_views = list(views(labels))
    assert len(all_views) == 16
    for _ in range(500):
        is_table = bool(rng.rand() < 0.5)
        high = random_value(rng, labels, is_table)
        low = random_value(rng, labels, is_table)
        label = labels[rng.randint(len(labels))]
        value = mk_facet(label, high, low)
        for L in all_views:
            expected = high if label in L else low
            assert project_value(L, value) == project_value(L, expected)


def test_mk_facet_branches_projection_over_all_views(labels):
    "A view sees the high side of <B ? H : L> exactly when B is visible"
    rng = RandomState(2)
    all_views = list(views(labels))
    for _ in range(500):
        is_table = bool(rng.rand() < 0.5)
        high = random_value(rng, labels, is_table)
        low = random_value(rng, labels, is_table)
        B = random_branches(rng, labels)
        value = mk_facet_branches(B, high, low)
        for L in all_views:
            expected = high if visible(B, L) else low
            assert project_value(L, value) == project_value(L, expected)


def test_inconsistent_branches_are_invisible(labels):
    "Branches inconsistent with a visible pc are not visible"
    rng = RandomState(3)
    for _ in range(500):
        B = random_branches(rng, labels)
        pc = random_branches(rng, labels)
        for L in views(labels):
            if visible(pc, L) and not consistent(B, pc):
                assert not visible(B, L)
