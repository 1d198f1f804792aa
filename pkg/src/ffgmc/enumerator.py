"""Bounded exhaustive search over protocol states.

The search space for given bounds is: every labelled block forest on
`n_blocks` non-genesis blocks (each block's parent is genesis or another
block; the (n+1)^(n-1) rooted-forest count is the oracle for this space),
times the slot assignments of the chosen slot mode, times every set of valid
FFG votes assigned to validators up to validator-permutation symmetry.
Canonical form: the per-validator vote subsets form a non-decreasing sequence
under a fixed total order of subsets, so no two emitted states are validator
permutations of each other.

Work is organized in graph units (one forest plus slot assignment); a unit
whose forest has no conflicting block pair is skipped whole in safety
searches, where the property holds vacuously.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional

from .kernels import (
    MODE_CONFLICTING_FINALIZED,
    MODE_COUNTEREXAMPLE,
    MODE_FINALIZED_NONGENESIS,
    MODE_JUSTIFIED_NONGENESIS,
    MODE_LFP_NE_GFP,
    scan_states,
)
from .model import (
    GENESIS,
    Block,
    BlockForest,
    InputError,
    ProtocolState,
    SignedVote,
)
from .mutation import Mutation
from .slashing import SafetyVerdict, accountable_safety
from .tables import (
    GraphTables,
    build_graph_tables,
    min_signers_for_quorum,
    project_tables,
    state_table,
)

VERDICT_HOLDS = "holds-exhaustively"
VERDICT_COUNTEREXAMPLE = "counterexample-found"
VERDICT_INCONCLUSIVE = "inconclusive"

PROPERTY_MODES = {
    "finalized-nongenesis": MODE_FINALIZED_NONGENESIS,
    "justified-nongenesis": MODE_JUSTIFIED_NONGENESIS,
    "conflicting-finalized": MODE_CONFLICTING_FINALIZED,
}


class SearchBudgetExceeded(Exception):
    """Raised by find_example when the state budget runs out before a hit."""

    def __init__(self, states_checked: int):
        super().__init__(f"search budget exhausted after {states_checked} states")
        self.states_checked = states_checked


@dataclass(frozen=True)
class Bounds:
    """Search-space limits.

    `max_slot` caps block slots in free slot mode, `max_chkp_slot` caps
    checkpoint slots of the candidate universe, `max_ffg_votes` caps distinct
    FFG votes and `max_votes` total signed votes.  Omitted caps default to
    max_slot = n_blocks, max_chkp_slot = n_blocks + 1, max_ffg_votes =
    max_votes.  `n_checkpoints` only shapes emitted SMT instances.
    """

    n_blocks: int
    n_validators: int
    max_votes: int
    max_ffg_votes: Optional[int] = None
    max_slot: Optional[int] = None
    max_chkp_slot: Optional[int] = None
    slot_rule: str = "strict"
    slot_mode: str = "depth"
    graph_filter: Optional[str] = None
    n_checkpoints: Optional[int] = None

    def __post_init__(self):
        if self.max_ffg_votes is None:
            object.__setattr__(self, "max_ffg_votes", self.max_votes)
        if self.max_slot is None:
            object.__setattr__(self, "max_slot", self.n_blocks)
        if self.max_chkp_slot is None and self.graph_filter is None:
            object.__setattr__(self, "max_chkp_slot", self.n_blocks + 1)
        for name in ("n_blocks", "n_validators", "max_votes", "max_ffg_votes", "max_slot"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be non-negative")
        if self.n_validators < 1:
            raise InputError("n_validators must be positive")
        if self.slot_rule not in ("strict", "nonstrict"):
            raise InputError(f"unknown slot rule {self.slot_rule!r}")
        if self.slot_mode not in ("depth", "free"):
            raise InputError(f"unknown slot mode {self.slot_mode!r}")
        if self.slot_mode == "depth" and self.max_slot < self.n_blocks:
            raise InputError("max_slot below the deepest chain in depth slot mode")


@dataclass(frozen=True)
class Counterexample:
    state: ProtocolState
    safety: SafetyVerdict
    graph_index: int


@dataclass(frozen=True)
class SearchReport:
    verdict: str
    counterexample: Optional[Counterexample]
    states_checked: int
    graphs_checked: int
    states_pruned: int
    wall_time: float
    budget: Optional[int] = None


def forest_count(n: int) -> int:
    """Labelled rooted forests on n vertices: (n+1)^(n-1)."""
    if n < 0:
        raise InputError("forest size must be non-negative")
    if n == 0:
        return 1
    return (n + 1) ** (n - 1)


def enumerate_forests(n: int) -> Iterator[BlockForest]:
    """All labelled forests on blocks b1..bn, slots set to depth.

    Every block's parent is genesis or another block (a parentless root is
    identified with a genesis child); assignments are emitted in
    lexicographic parent-vector order, acyclic ones only.
    """
    if n < 0:
        raise InputError("forest size must be non-negative")
    names = [f"b{i}" for i in range(1, n + 1)]
    for parents in itertools.product(range(n + 1), repeat=n):
        # parents[i] = 0 means genesis, j >= 1 means block b_j
        if any(parents[i] == i + 1 for i in range(n)):
            continue
        depths = _depths_or_none(parents, n)
        if depths is None:
            continue
        yield BlockForest(
            Block(names[i], depths[i], GENESIS if parents[i] == 0 else names[parents[i] - 1])
            for i in range(n)
        )


def _depths_or_none(parents: tuple[int, ...], n: int) -> Optional[list[int]]:
    depths: list[Optional[int]] = [None] * n
    for i in range(n):
        trail = []
        cur = i
        while depths[cur] is None:
            trail.append(cur)
            nxt = parents[cur]
            if nxt == 0:
                depths[cur] = 1
                break
            nxt -= 1
            if nxt in trail:
                return None  # cycle
            cur = nxt
        for t in reversed(trail):
            if depths[t] is None:
                depths[t] = depths[parents[t] - 1] + 1
    return depths  # type: ignore[return-value]


def _slot_variants(forest: BlockForest, bounds: Bounds) -> Iterator[BlockForest]:
    if bounds.slot_mode == "depth":
        yield forest
        return
    names = [i for i in forest.ids() if i != GENESIS]
    parents = {b.id: b.parent for b in forest}
    for slots in itertools.product(range(1, bounds.max_slot + 1), repeat=len(names)):
        assigned = dict(zip(names, slots))
        assigned[GENESIS] = 0
        if all(assigned[parents[i]] < assigned[i] for i in names if parents[i] is not None):
            yield BlockForest(
                Block(i, assigned[i], parents[i]) for i in names
            )


def iter_units(bounds: Bounds) -> Iterator[BlockForest]:
    """Graph units of the search, in canonical order.

    A catalog graph is one unit with its built-in slots; the slot mode only
    affects enumerated forests.
    """
    if bounds.graph_filter is not None:
        from .catalog import catalog_forest

        yield catalog_forest(bounds.graph_filter)
        return
    for forest in enumerate_forests(bounds.n_blocks):
        yield from _slot_variants(forest, bounds)


def _chkp_bound(bounds: Bounds, forest: BlockForest) -> int:
    if bounds.max_chkp_slot is not None:
        return bounds.max_chkp_slot
    return max(b.slot for b in forest) + 1


def _distinct_vote_range(bounds: Bounds, n_votes: int) -> range:
    return range(0, min(bounds.max_ffg_votes, n_votes, bounds.max_votes) + 1)


def _unit_total_states(bounds: Bounds, tables: GraphTables, min_signers: int) -> int:
    total = 0
    for u in _distinct_vote_range(bounds, len(tables.votes)):
        total += comb(len(tables.votes), u) * state_table(
            u, bounds.n_validators, bounds.max_votes, min_signers
        )[2]
    return total


@dataclass(frozen=True)
class _UnitResult:
    checked: int
    pruned: int
    graph_pruned: bool
    hit: Optional[tuple] = None  # (u, combo, row masks)
    exhausted_budget: bool = False


def _scan_unit(
    bounds: Bounds,
    mutation: Mutation,
    forest: BlockForest,
    mode: int,
    min_signers: int,
    budget_left: Optional[int] = None,
    backend: Optional[str] = None,
) ->tuple[_UnitResult, GraphTables]:
    tables = build_graph_tables(forest, bounds.slot_rule, _chkp_bound(bounds, forest))
    vacuity_modes = (MODE_COUNTEREXAMPLE, MODE_CONFLICTING_FINALIZED)
    if mode in vacuity_modes and not tables.has_conflict:
        total = _unit_total_states(bounds, tables, min_signers)
        return _UnitResult(checked=0, pruned=total, graph_pruned=True), tables
    quorum_half = Mutation.QUORUM_HALF in mutation
    checked = 0
    pruned = 0
    for u in _distinct_vote_range(bounds, len(tables.votes)):
        states, rows_pruned, _ = state_table(
            u, bounds.n_validators, bounds.max_votes, min_signers
        )
        for combo in itertools.combinations(range(len(tables.votes)), u):
            pruned += rows_pruned
            block = states
            if budget_left is not None and checked + block.shape[0] > budget_left:
                block = block[: budget_left - checked]
            if block.shape[0] == 0 and states.shape[0] != 0:
                return _UnitResult(checked, pruned, False, exhausted_budget=True), tables
            projected = project_tables(tables, combo, mutation)
            hit, scanned = scan_states(
                block, projected, bounds.n_validators, mode, quorum_half, backend
            )
            checked += scanned
            if hit >= 0:
                masks = tuple(int(x) for x in states[hit])
                return _UnitResult(checked, pruned, False, hit=(u, combo, masks)), tables
            if budget_left is not None and checked >= budget_left and block.shape[0] < states.shape[0]:
                return _UnitResult(checked, pruned, False, exhausted_budget=True), tables
    return _UnitResult(checked, pruned, False), tables


def materialize_state(
    bounds: Bounds, tables: GraphTables, combo: tuple[int, ...], masks: tuple[int, ...]
) -> ProtocolState:
    """Rebuild the ProtocolState for one canonical assignment row."""
    votes = []
    for validator, mask in enumerate(masks):
        for pos, vote_idx in enumerate(combo):
            if (mask >> pos) & 1:
                votes.append(SignedVote(tables.votes[vote_idx], validator))
    return ProtocolState(
        tables.forest, bounds.n_validators, frozenset(votes), bounds.slot_rule
    )


def enumerate_states(bounds: Bounds, forest: BlockForest) -> Iterator[ProtocolState]:
    """All states over `forest` within bounds, in canonical scan order."""
    for slotted in _slot_variants(forest, bounds):
        tables = build_graph_tables(slotted, bounds.slot_rule, _chkp_bound(bounds, slotted))
        for u in _distinct_vote_range(bounds, len(tables.votes)):
            states, _, _ = state_table(u, bounds.n_validators, bounds.max_votes, 0)
            for combo in itertools.combinations(range(len(tables.votes)), u):
                for row in states:
                    yield materialize_state(
                        bounds, tables, combo, tuple(int(x) for x in row)
                    )


def _unit_task(args):
    bounds, mutation_value, forest, mode, min_signers = args
    result, tables = _scan_unit(bounds, Mutation(mutation_value), forest, mode, min_signers)
    return result, tables if result.hit else None


def _run_units(
    bounds: Bounds,
    mutation: Mutation,
    mode: int,
    min_signers: int,
    budget: Optional[int],
    jobs: int,
):
    """Iterate units; fold counters in canonical order, stopping at the first hit.

    Returns (hit tables or None, hit info or None, checked, pruned, graphs,
    exhausted flag).  With jobs > 1 a budget forces sequential execution so
    mid-unit budget cuts stay reproducible.
    """
    units = list(iter_units(bounds))
    checked = pruned = graphs = 0
    if jobs > 1 and budget is None:
        tasks = [(bounds, mutation.value, f, mode, min_signers) for f in units]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result, tables in pool.map(_unit_task, tasks):
                graphs += 1
                checked += result.checked
                pruned += result.pruned
                if result.hit is not None:
                    return tables, result.hit, checked, pruned, graphs, False
        return None, None, checked, pruned, graphs, False
    for forest in units:
        budget_left = None if budget is None else budget - checked
        result, tables = _scan_unit(
            bounds, mutation, forest, mode, min_signers, budget_left
        )
        graphs += 1
        checked += result.checked
        pruned += result.pruned
        if result.hit is not None:
            return tables, result.hit, checked, pruned, graphs, False
        if result.exhausted_budget:
            return None, None, checked, pruned, graphs, True
    return None, None, checked, pruned, graphs, False


def search(
    bounds: Bounds,
    mutation: Mutation = Mutation.NONE,
    budget: Optional[int] = None,
    jobs: int = 1,
) -> SearchReport:
    """Exhaust the bounded space or stop at the first (canonical) counterexample."""
    start = time.perf_counter()
    min_signers = min_signers_for_quorum(bounds.n_validators) if mutation == Mutation.NONE else 0
    tables, hit, checked, pruned, graphs, exhausted = _run_units(
        bounds, mutation, MODE_COUNTEREXAMPLE, min_signers, budget, jobs
    )
    wall = time.perf_counter() - start
    if hit is not None:
        u, combo, masks = hit
        state = materialize_state(bounds, tables, combo, masks)
        safety = accountable_safety(state, mutation)
        if safety.holds:
            raise RuntimeError(
                "kernel counterexample does not replay: kernel and reference disagree"
            )
        return SearchReport(
            verdict=VERDICT_COUNTEREXAMPLE,
            counterexample=Counterexample(state, safety, graphs - 1),
            states_checked=checked,
            graphs_checked=graphs,
            states_pruned=pruned,
            wall_time=wall,
            budget=budget,
        )
    verdict = VERDICT_INCONCLUSIVE if exhausted else VERDICT_HOLDS
    return SearchReport(
        verdict=verdict,
        counterexample=None,
        states_checked=checked,
        graphs_checked=graphs,
        states_pruned=pruned,
        wall_time=wall,
        budget=budget,
    )


def find_example(
    bounds: Bounds, property_name: str, budget: Optional[int] = None
) -> Optional[ProtocolState]:
    """First state (canonical order) satisfying the property, or None.

    All three findable properties need a justification quorum of distinct
    senders, so the quorum-of-signers floor applies here as in unmutated
    search runs.
    """
    try:
        mode = PROPERTY_MODES[property_name]
    except KeyError:
        raise InputError(
            f"unknown property {property_name!r}; choose from {', '.join(PROPERTY_MODES)}"
        ) from None
    min_signers = min_signers_for_quorum(bounds.n_validators)
    tables, hit, checked, _, _, exhausted = _run_units(
        bounds, Mutation.NONE, mode, min_signers, budget, jobs=1
    )
    if exhausted:
        raise SearchBudgetExceeded(checked)
    if hit is None:
        return None
    u, combo, masks = hit
    return materialize_state(bounds, tables, combo, masks)


@dataclass(frozen=True)
class FixpointReport:
    states_checked: int
    mismatch: Optional[ProtocolState]


def check_lfp_gfp(bounds: Bounds, mutation: Mutation = Mutation.NONE) -> FixpointReport:
    """Compare least and greatest justification fixpoints over every state."""
    tables, hit, checked, _, _, _ = _run_units(
        bounds, mutation, MODE_LFP_NE_GFP, min_signers=0, budget=None, jobs=1
    )
    if hit is None:
        return FixpointReport(states_checked=checked, mismatch=None)
    u, combo, masks = hit
    return FixpointReport(
        states_checked=checked,
        mismatch=materialize_state(bounds, tables, combo, masks),
    )
