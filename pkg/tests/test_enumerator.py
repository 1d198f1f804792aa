"""Forest/state enumeration, symmetry reduction and the bounded search."""

import itertools
from dataclasses import replace

import pytest

from ffgmc.enumerator import (
    Bounds,
    SearchBudgetExceeded,
    VERDICT_COUNTEREXAMPLE,
    VERDICT_HOLDS,
    VERDICT_INCONCLUSIVE,
    check_lfp_gfp,
    enumerate_forests,
    enumerate_states,
    find_example,
    forest_count,
    search,
)
from ffgmc.finality import finality_view
from ffgmc.model import (
    GENESIS,
    GENESIS_CHECKPOINT,
    Block,
    BlockForest,
    InputError,
    ProtocolState,
    SignedVote,
)
from ffgmc.mutation import Mutation, parse_mutation
from ffgmc.slashing import accountable_safety
from ffgmc.tables import build_graph_tables


def brute_force_forests(n):
    """Direct enumeration oracle: acyclic parent functions over {genesis, b1..bn}."""
    names = [f"b{i}" for i in range(1, n + 1)]
    found = set()
    for parents in itertools.product([GENESIS] + names, repeat=n):
        if any(parents[i] == names[i] for i in range(n)):
            continue
        assignment = dict(zip(names, parents))
        ok = True
        for start in names:
            seen = set()
            cur = start
            while cur != GENESIS:
                if cur in seen:
                    ok = False
                    break
                seen.add(cur)
                cur = assignment[cur]
            if not ok:
                break
        if ok:
            found.add(tuple(sorted(assignment.items())))
    return found


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 3), (3, 16), (4, 125)])
def test_forest_counts_match_formula_and_oracle(n, expected):
    forests = list(enumerate_forests(n))
    assert forest_count(n) == (n + 1) ** (n - 1) == expected
    assert len(forests) == expected
    emitted = {
        tuple(sorted((b.id, b.parent) for b in f if b.id != GENESIS)) for f in forests
    }
    assert len(emitted) == expected  # no duplicates
    assert emitted == brute_force_forests(n)


def test_forest_slots_are_depths():
    for forest in enumerate_forests(3):
        for block in forest:
            if block.id == GENESIS:
                assert block.slot == 0
            else:
                assert block.slot == forest.slot_of(block.parent) + 1


def test_state_count_example():
    # one valid FFG vote, N=4, max_votes=2: assignment multisets over {0, {f}}
    # with at most two signed votes -> 3 states (counting oracle)
    forest = BlockForest([Block("b1", 1, GENESIS)])
    bounds = Bounds(
        n_blocks=1, n_validators=4, max_votes=2, max_ffg_votes=1, max_chkp_slot=2
    )
    tables = build_graph_tables(forest, bounds.slot_rule, 2)
    votes_per_state = sorted(
        len(state.votes) for state in enumerate_states(bounds, forest)
        if not state.votes or len({sv.vote for sv in state.votes}) == 1
    )
    per_vote = len(tables.votes)
    # u=0 gives the empty state; u=1 gives one or two copies of each vote
    assert votes_per_state == sorted([0] + [1] * per_vote + [2] * per_vote)


def test_max_votes_zero_emits_only_vote_free_states():
    forest = BlockForest([Block("b1", 1, GENESIS)])
    bounds = Bounds(n_blocks=1, n_validators=4, max_votes=0)
    states = list(enumerate_states(bounds, forest))
    assert len(states) == 1 and states[0].votes == frozenset()


def _canonical_class(state, n):
    per_validator = [frozenset() for _ in range(n)]
    for sv in state.votes:
        per_validator[sv.validator] = per_validator[sv.validator] | {sv.vote}
    return tuple(sorted(per_validator, key=lambda s: sorted(s)))


def test_emitted_states_are_canonical_and_permutation_free():
    forest = BlockForest([Block("b1", 1, GENESIS)])
    bounds = Bounds(n_blocks=1, n_validators=3, max_votes=3)
    seen = set()
    for state in enumerate_states(bounds, forest):
        cls = _canonical_class(state, 3)
        assert cls not in seen  # permuting validators never yields another emitted state
        seen.add(cls)


def test_symmetry_reduction_soundness_tiny():
    # brute-force (unreduced) space vs the reduced enumeration: identical
    # class sets, counts, and per-class safety verdicts
    n, max_votes = 3, 3
    forest = BlockForest([Block("b1", 1, GENESIS)])
    bounds = Bounds(n_blocks=1, n_validators=n, max_votes=max_votes)
    tables = build_graph_tables(forest, bounds.slot_rule, bounds.max_chkp_slot)
    votes = tables.votes
    subsets = [
        frozenset(combo)
        for size in range(max_votes + 1)
        for combo in itertools.combinations(votes, size)
    ]
    brute = {}
    for assign in itertools.product(subsets, repeat=n):
        if sum(len(s) for s in assign) > max_votes:
            continue
        if len(frozenset().union(*assign)) > bounds.max_ffg_votes:
            continue
        cls = tuple(sorted(assign, key=lambda s: sorted(s)))
        if cls in brute:
            continue
        state = ProtocolState(
            forest,
            n,
            frozenset(
                SignedVote(v, i) for i, subset in enumerate(assign) for v in subset
            ),
            bounds.slot_rule,
        )
        brute[cls] = accountable_safety(state).holds
    reduced = {}
    for state in enumerate_states(bounds, forest):
        cls = _canonical_class(state, n)
        assert cls not in reduced
        reduced[cls] = accountable_safety(state).holds
    assert set(brute) == set(reduced)
    assert len(brute) == len(reduced)
    assert brute == reduced


def test_free_slot_mode_units():
    from ffgmc.enumerator import iter_units

    bounds = Bounds(n_blocks=2, n_validators=3, max_votes=2, slot_mode="free", max_slot=2)
    units = list(iter_units(bounds))
    # chains admit one strictly increasing assignment within max_slot=2, the
    # fork admits all four combinations over {1, 2}
    assert len(units) == 1 + 1 + 4
    fork_units = [
        u for u in units
        if all(b.parent == GENESIS for b in u if b.id != GENESIS)
    ]
    slots = sorted((u.slot_of("b1"), u.slot_of("b2")) for u in fork_units)
    assert slots == [(1, 1), (1, 2), (2, 1), (2, 2)]
    report = search(bounds)
    assert report.verdict == VERDICT_HOLDS
    assert report.graphs_checked == 6


def test_bounds_validation():
    with pytest.raises(InputError):
        Bounds(n_blocks=-1, n_validators=4, max_votes=3)
    with pytest.raises(InputError):
        Bounds(n_blocks=2, n_validators=0, max_votes=3)
    with pytest.raises(InputError):
        Bounds(n_blocks=2, n_validators=4, max_votes=3, max_slot=1)  # below depth
    with pytest.raises(InputError):
        Bounds(n_blocks=2, n_validators=4, max_votes=3, slot_mode="sideways")
    bounds = Bounds(n_blocks=2, n_validators=4, max_votes=5)
    assert bounds.max_ffg_votes == 5
    assert bounds.max_slot == 2
    assert bounds.max_chkp_slot == 3


def test_search_single_block_holds():
    report = search(Bounds(n_blocks=1, n_validators=4, max_votes=4))
    assert report.verdict == VERDICT_HOLDS
    assert report.states_checked == 0  # no conflicts anywhere: all pruned
    assert report.states_pruned > 0


def test_search_accounts_for_every_state():
    bounds = Bounds(n_blocks=2, n_validators=3, max_votes=3, max_ffg_votes=2)
    report = search(bounds)
    total = sum(
        1 for forest in enumerate_forests(2) for _ in enumerate_states(bounds, forest)
    )
    assert report.states_checked + report.states_pruned == total
    assert report.graphs_checked == 3


def test_search_determinism():
    bounds = Bounds(n_blocks=2, n_validators=4, max_votes=6, max_ffg_votes=2)
    a = search(bounds)
    b = search(bounds)
    assert (a.verdict, a.states_checked, a.graphs_checked, a.states_pruned) == (
        b.verdict,
        b.states_checked,
        b.graphs_checked,
        b.states_pruned,
    )


def test_search_jobs_parity():
    # the smallest quorum-half violation needs four distinct votes: one
    # justifying and one finalizing link per branch
    bounds = Bounds(n_blocks=2, n_validators=4, max_votes=8, max_ffg_votes=4)
    mutation = parse_mutation("quorum-half")
    seq = search(bounds, mutation, jobs=1)
    par = search(bounds, mutation, jobs=2)
    assert seq.verdict == par.verdict == VERDICT_COUNTEREXAMPLE
    assert seq.states_checked == par.states_checked
    assert seq.states_pruned == par.states_pruned
    assert seq.graphs_checked == par.graphs_checked
    assert seq.counterexample.state == par.counterexample.state


def test_search_budget_inconclusive():
    bounds = Bounds(n_blocks=2, n_validators=4, max_votes=6, max_ffg_votes=2)
    report = search(bounds, budget=100)
    assert report.verdict == VERDICT_INCONCLUSIVE
    assert report.states_checked == 100
    full = search(bounds)
    capped = search(bounds, budget=full.states_checked)
    assert capped.verdict == VERDICT_HOLDS  # budget exactly sufficient


def test_mutation_counterexamples_replay():
    bounds = Bounds(
        n_blocks=2, n_validators=4, max_votes=12, max_ffg_votes=4, max_chkp_slot=3
    )
    for name in ("quorum-half", "disable-e1,disable-e2"):
        mutation = parse_mutation(name)
        report = search(bounds, mutation)
        assert report.verdict == VERDICT_COUNTEREXAMPLE, name
        cex = report.counterexample
        assert not cex.safety.holds
        replayed = accountable_safety(cex.state, mutation)
        assert not replayed.holds
        assert replayed.disagreement
        # the same state is safe without the mutation
        assert accountable_safety(cex.state).holds


def test_every_primitive_mutation_is_detected():
    # documented smallest bounds per primitive mutation: quorum-half,
    # disable-e1 and drop-ancestry(nonstrict) fall at the criterion-3 sizes;
    # disable-e2 alone needs slot-separated justification rounds, so the
    # surround pair only appears once checkpoint slots reach 4
    chk3 = Bounds(n_blocks=2, n_validators=4, max_votes=12, max_ffg_votes=4, max_chkp_slot=3)
    chk3_loose = replace(chk3, slot_rule="nonstrict")
    chk4_loose = replace(chk3_loose, max_chkp_slot=4)
    cases = [
        (Mutation.QUORUM_HALF, chk3),
        (Mutation.DISABLE_E1, chk3),
        (Mutation.DISABLE_E2, chk4_loose),
        (Mutation.DROP_ANCESTRY, chk3_loose),
    ]
    for mutation, bounds in cases:
        report = search(bounds, mutation)
        assert report.verdict == VERDICT_COUNTEREXAMPLE, mutation
        assert not accountable_safety(report.counterexample.state, mutation).holds


def test_counterexample_scenarios_round_trip():
    from ffgmc.scenario import parse_scenario, scenario_to_json

    bounds = Bounds(n_blocks=2, n_validators=4, max_votes=12, max_ffg_votes=4, max_chkp_slot=3)
    report = search(bounds, Mutation.QUORUM_HALF)
    state = report.counterexample.state
    assert parse_scenario(scenario_to_json(state)) == state


def test_drop_ancestry_needs_nonstrict_at_chk3():
    strict = Bounds(
        n_blocks=2, n_validators=4, max_votes=12, max_ffg_votes=4, max_chkp_slot=3
    )
    assert search(strict, Mutation.DROP_ANCESTRY).verdict == VERDICT_HOLDS
    loose = replace(strict, slot_rule="nonstrict")
    report = search(loose, Mutation.DROP_ANCESTRY)
    assert report.verdict == VERDICT_COUNTEREXAMPLE
    assert not accountable_safety(report.counterexample.state, Mutation.DROP_ANCESTRY).holds


def test_unmutated_search_holds_small():
    report = search(Bounds(n_blocks=2, n_validators=4, max_votes=9, max_ffg_votes=3))
    assert report.verdict == VERDICT_HOLDS


def test_check_lfp_gfp_small():
    report = check_lfp_gfp(Bounds(n_blocks=1, n_validators=3, max_votes=3))
    assert report.mismatch is None
    assert report.states_checked > 0


def test_find_example_properties():
    bounds = Bounds(n_blocks=1, n_validators=4, max_votes=6)
    state = find_example(bounds, "finalized-nongenesis")
    view = finality_view(state)
    assert view.finalized - {GENESIS_CHECKPOINT}

    state = find_example(bounds, "justified-nongenesis")
    assert finality_view(state).justified - {GENESIS_CHECKPOINT}

    # quorum unreachable: 2 signed votes cannot hit ceil(2*4/3) = 3 senders
    none = find_example(
        Bounds(n_blocks=1, n_validators=4, max_votes=2), "justified-nongenesis"
    )
    assert none is None

    confl = find_example(
        Bounds(n_blocks=2, n_validators=4, max_votes=12, max_ffg_votes=4, max_chkp_slot=3),
        "conflicting-finalized",
    )
    verdict = accountable_safety(confl)
    assert verdict.disagreement
    assert 3 * len(verdict.slashable) >= 4  # safety still holds

    with pytest.raises(InputError):
        find_example(bounds, "perpetual-motion")


def test_find_example_budget():
    with pytest.raises(SearchBudgetExceeded):
        find_example(
            Bounds(n_blocks=1, n_validators=4, max_votes=6), "finalized-nongenesis", budget=10
        )
