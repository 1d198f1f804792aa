"""Catalog graphs and the two-chain restricted mode."""

import itertools

import pytest

from ffgmc.catalog import (
    TwoChainConfig,
    catalog_forest,
    catalog_ids,
    two_chain_forest,
    two_chain_is_ancestor,
    two_chain_states,
)
from ffgmc.enumerator import (
    Bounds,
    VERDICT_HOLDS,
    enumerate_forests,
    search,
)
from ffgmc.model import GENESIS, InputError, are_conflicting, is_ancestor


def test_catalog_ids_complete():
    assert set(catalog_ids()) == {
        "m3", "m4a", "m4b", "m5a", "m5b", "m7", "single-chain", "forest", "i1", "i2",
    }


def _shape(forest):
    return sorted((b.id, b.slot, b.parent) for b in forest if b.id != GENESIS)


def test_m3_is_genesis_with_two_conflicting_children():
    m3 = catalog_forest("m3")
    assert len(m3) == 3
    kids = [b for b in m3 if b.id != GENESIS]
    assert all(b.parent == GENESIS and b.slot == 1 for b in kids)
    assert are_conflicting(m3, kids[0].id, kids[1].id)


def test_shapes_and_depth_slots():
    expected_sizes = {
        "m3": 3, "m4a": 4, "m4b": 4, "m5a": 5, "m5b": 4, "m7": 7,
        "single-chain": 5, "forest": 11,
    }
    for entry_id, size in expected_sizes.items():
        forest = catalog_forest(entry_id)
        assert len(forest) == size, entry_id
        for block in forest:
            if block.parent is not None and block.parent != GENESIS:
                assert forest.slot_of(block.parent) + 1 == block.slot


def test_single_chain_is_a_path():
    chain = catalog_forest("single-chain")
    ids = [b.id for b in chain if b.id != GENESIS]
    for a, b in itertools.combinations(ids, 2):
        assert not are_conflicting(chain, a, b)


def test_forest_entry_has_detached_components():
    forest = catalog_forest("forest")
    assert forest.block("c1").parent is None
    assert forest.block("c2").parent == "c1"
    assert forest.block("d1").parent is None
    assert are_conflicting(forest, "c2", "a1")
    assert not is_ancestor(forest, GENESIS, "c1")


def test_i1_rejected_multi_parent():
    with pytest.raises(InputError, match="parents"):
        catalog_forest("i1")


def test_i2_rejected_cycle():
    with pytest.raises(InputError, match="cycle"):
        catalog_forest("i2")


def test_unknown_catalog_id():
    with pytest.raises(InputError, match="unknown catalog graph"):
        catalog_forest("m99")


def test_two_chain_shapes():
    m3_like = two_chain_forest(TwoChainConfig(0, 1, 1))
    assert _shape(m3_like) == [("-1", 1, GENESIS), ("1", 1, GENESIS)]
    assert are_conflicting(m3_like, "1", "-1")

    single = two_chain_forest(TwoChainConfig(0, 3, 0))
    ids = [b.id for b in single if b.id != GENESIS]
    for a, b in itertools.combinations(ids, 2):
        assert not are_conflicting(single, a, b)

    forked = two_chain_forest(TwoChainConfig(2, 2, 2))
    assert is_ancestor(forked, "2", "4")
    assert is_ancestor(forked, "2", "-4")
    assert are_conflicting(forked, "3", "-3")


@pytest.mark.parametrize(
    "config",
    [
        TwoChainConfig(0, 1, 1),
        TwoChainConfig(0, 2, 1),
        TwoChainConfig(1, 1, 1),
        TwoChainConfig(2, 2, 2),
        TwoChainConfig(3, 1, 2),
        TwoChainConfig(1, 3, 0),
    ],
)
def test_signed_body_shortcut_equals_closure(config):
    forest = two_chain_forest(config)
    bodies = [0] + config.bodies()
    for a in bodies:
        for b in bodies:
            a_id = GENESIS if a == 0 else str(a)
            b_id = GENESIS if b == 0 else str(b)
            assert two_chain_is_ancestor(config, a, b) == is_ancestor(forest, a_id, b_id), (a, b)


def test_two_chain_states_match_enumerator_on_m3():
    bounds = Bounds(n_blocks=2, n_validators=3, max_votes=2, max_ffg_votes=2)
    states = list(two_chain_states(TwoChainConfig(0, 1, 1), bounds))
    assert states
    forks = [
        f for f in enumerate_forests(2)
        if all(b.parent == GENESIS for b in f if b.id != GENESIS)
    ]
    generic = list(__import__("ffgmc.enumerator", fromlist=["enumerate_states"]).enumerate_states(bounds, forks[0]))
    assert len(states) == len(generic)


def test_decomposition_matches_unrestricted_two_chain_search():
    # union of the per-catalog verdicts over {m3, m4a, m4b, m5a, m5b} vs the
    # unrestricted search over every forest of up to 4 blocks (a superset of
    # the two-chain shapes) at the same vote bounds: both sides hold
    vote_bounds = dict(n_validators=4, max_votes=6, max_ffg_votes=2)
    catalog_verdicts = set()
    for entry_id in ("m3", "m4a", "m4b", "m5a", "m5b"):
        bounds = Bounds(n_blocks=0, graph_filter=entry_id, max_chkp_slot=4, **vote_bounds)
        catalog_verdicts.add(search(bounds).verdict)
    assert catalog_verdicts == {VERDICT_HOLDS}

    for n in (2, 3, 4):
        unrestricted = search(Bounds(n_blocks=n, max_chkp_slot=4, **vote_bounds))
        assert unrestricted.verdict == VERDICT_HOLDS
