"""Justified and finalized checkpoints of a protocol state.

Justification is the least fixpoint of one monotone operator; a downward
(greatest-fixpoint) computation of the same operator is kept solely for
cross-validation.  Vote validity forces source.c < target.c, which makes the
justification dependency well-founded, so the two fixpoints coincide; that is
checked by tests rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .model import (
    GENESIS_CHECKPOINT,
    Checkpoint,
    ProtocolState,
    _cp_sort_key,
    checkpoints_of,
    is_ancestor,
    is_valid_ffg_vote,
)
from .mutation import Mutation, quorum_met


@dataclass(frozen=True)
class FinalityView:
    justified: frozenset[Checkpoint]
    finalized: frozenset[Checkpoint]
    finalized_blocks: frozenset[str]
    # Diagnostic: which validators justify each justified checkpoint.
    justifying_validators: dict[Checkpoint, frozenset[int]]


def justifying_validators(
    state: ProtocolState,
    universe: Iterable[Checkpoint],
    justified_so_far: frozenset[Checkpoint] | set[Checkpoint],
    c: Checkpoint,
    mutation: Mutation = Mutation.NONE,
) -> frozenset[int]:
    """Validators with a valid vote that supports justifying checkpoint `c`.

    A vote by validator v supports c when its source is already justified,
    its blocks sandwich c's block (source ->* c ->* target), and its target
    sits exactly at c's checkpoint slot.  `universe` is the candidate set the
    fixpoint ranges over; membership of `c` is the caller's concern.
    """
    del universe
    forest = state.forest
    check_ancestry = Mutation.DROP_ANCESTRY not in mutation
    out: set[int] = set()
    for sv in state.votes:
        if sv.validator in out:
            continue
        vote = sv.vote
        if vote.source not in justified_so_far:
            continue
        if vote.target.c != c.c:
            continue
        if not is_valid_ffg_vote(state, vote):
            continue
        if check_ancestry and not (
            is_ancestor(forest, vote.source.block, c.block)
            and is_ancestor(forest, c.block, vote.target.block)
        ):
            continue
        out.add(sv.validator)
    return frozenset(out)


def _fixpoint(
    state: ProtocolState,
    universe: Iterable[Checkpoint],
    start: set[Checkpoint],
    mutation: Mutation,
) -> frozenset[Checkpoint]:
    ordered = sorted(set(universe), key=_cp_sort_key)
    current = set(start)
    while True:
        nxt = {GENESIS_CHECKPOINT}
        for c in ordered:
            count = len(justifying_validators(state, ordered, current, c, mutation))
            if quorum_met(count, state.n_validators, mutation):
                nxt.add(c)
        if nxt == current:
            return frozenset(current)
        current = nxt


def justified_checkpoints(
    state: ProtocolState,
    universe: Iterable[Checkpoint],
    mutation: Mutation = Mutation.NONE,
) -> frozenset[Checkpoint]:
    """Least fixpoint: genesis plus checkpoints with a quorum of justifying votes."""
    return _fixpoint(state, universe, {GENESIS_CHECKPOINT}, mutation)


def justified_checkpoints_gfp(
    state: ProtocolState,
    universe: Iterable[Checkpoint],
    mutation: Mutation = Mutation.NONE,
) -> frozenset[Checkpoint]:
    """Greatest fixpoint of the same operator, iterated down from the universe."""
    return _fixpoint(state, universe, set(universe) | {GENESIS_CHECKPOINT}, mutation)


def is_finalized(
    state: ProtocolState,
    universe: Iterable[Checkpoint],
    justified: frozenset[Checkpoint] | set[Checkpoint],
    c: Checkpoint,
    mutation: Mutation = Mutation.NONE,
) -> bool:
    """Genesis, or a justified checkpoint that sources a supermajority link to slot c+1."""
    del universe
    if c == GENESIS_CHECKPOINT:
        return True
    if c not in justified:
        return False
    senders = {
        sv.validator
        for sv in state.votes
        if sv.vote.source == c
        and sv.vote.target.c == c.c + 1
        and is_valid_ffg_vote(state, sv.vote)
    }
    return quorum_met(len(senders), state.n_validators, mutation)


def default_universe(state: ProtocolState) -> list[Checkpoint]:
    """Candidate checkpoints up to one slot past the highest vote target."""
    max_target = max((sv.vote.target.c for sv in state.votes), default=0)
    return checkpoints_of(state, max_target + 1)


def finality_view(
    state: ProtocolState,
    universe: Optional[Iterable[Checkpoint]] = None,
    mutation: Mutation = Mutation.NONE,
) -> FinalityView:
    ordered = sorted(set(universe), key=_cp_sort_key) if universe is not None else default_universe(state)
    justified = justified_checkpoints(state, ordered, mutation)
    finalized = frozenset(
        c for c in set(ordered) | {GENESIS_CHECKPOINT}
        if is_finalized(state, ordered, justified, c, mutation)
    )
    support = {
        c: justifying_validators(state, ordered, justified, c, mutation)
        for c in sorted(justified, key=_cp_sort_key)
    }
    return FinalityView(
        justified=justified,
        finalized=finalized,
        finalized_blocks=frozenset(c.block for c in finalized),
        justifying_validators=support,
    )
