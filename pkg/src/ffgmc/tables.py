"""Array tables backing the enumeration kernels.

Bit conventions: checkpoints of one graph are indexed 0..K-1 in (c, p, block)
order with the genesis checkpoint at index 0, and a checkpoint set is an int64
bitmask (K <= 63).  The valid-vote universe of the graph is indexed 0..M-1;
within one scan the distinct-vote combination U picks u <= 16 of those votes,
and a validator's vote subset is an int over those u positions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import (
    GENESIS_CHECKPOINT,
    BlockForest,
    Checkpoint,
    FfgVote,
    InputError,
    ProtocolState,
    _cp_sort_key,
    checkpoint_lt,
    is_ancestor,
    is_valid_checkpoint,
)
from .mutation import Mutation

MAX_CHECKPOINT_BITS = 63
MAX_VOTE_BITS = 16


@dataclass(frozen=True)
class GraphTables:
    """Checkpoint/vote structure of one (forest, slot assignment) pair."""

    forest: BlockForest
    checkpoints: tuple[Checkpoint, ...]          # K entries, genesis first
    votes: tuple[FfgVote, ...]                   # M valid votes, (src, tgt) index order
    vote_src: np.ndarray                         # (M,) checkpoint index of each source
    cp_conflict: np.ndarray                      # (K,) int64 conflict bitmasks
    sandwich: np.ndarray                         # (K, M) bool, full justification clause
    sandwich_noanc: np.ndarray                   # (K, M) bool, ancestry clause dropped
    by_src: np.ndarray                           # (K, M) bool, votes grouped by source
    fin: np.ndarray                              # (K, M) bool, finalizing votes per source
    pair_e1: np.ndarray                          # (M, M) bool
    pair_e2: np.ndarray                          # (M, M) bool, both orientations
    has_conflict: bool                           # any conflicting block pair in the forest


def build_graph_tables(
    forest: BlockForest, slot_rule: str, max_chkp_slot: int
) -> GraphTables:
    probe = ProtocolState(forest, 1, frozenset(), slot_rule)
    cps: list[Checkpoint] = []
    for block in forest:
        for c in range(max_chkp_slot + 1):
            cp = Checkpoint(block.id, c, block.slot)
            if is_valid_checkpoint(probe, cp):
                cps.append(cp)
    cps.sort(key=_cp_sort_key)
    k = len(cps)
    if k > MAX_CHECKPOINT_BITS:
        raise InputError(
            f"checkpoint universe of size {k} exceeds the kernel limit "
            f"{MAX_CHECKPOINT_BITS}; lower max_chkp_slot or n_blocks"
        )
    assert cps[0] == GENESIS_CHECKPOINT

    anc = {
        (a, d): is_ancestor(forest, a, d)
        for a in forest.blocks
        for d in forest.blocks
    }
    votes = [
        FfgVote(s, t)
        for s in cps
        for t in cps
        if s.c < t.c and anc[s.block, t.block]
    ]
    m = len(votes)

    vote_src = np.array([cps.index(v.source) for v in votes], dtype=np.int64)
    cp_conflict = np.zeros(k, dtype=np.int64)
    for i, a in enumerate(cps):
        for j, b in enumerate(cps):
            if not anc[a.block, b.block] and not anc[b.block, a.block]:
                cp_conflict[i] |= 1 << j

    sandwich = np.zeros((k, m), dtype=bool)
    sandwich_noanc = np.zeros((k, m), dtype=bool)
    by_src = np.zeros((k, m), dtype=bool)
    fin = np.zeros((k, m), dtype=bool)
    for j, v in enumerate(votes):
        src_idx = int(vote_src[j])
        by_src[src_idx, j] = True
        for i, cp in enumerate(cps):
            if v.target.c == cp.c:
                sandwich_noanc[i, j] = True
                if anc[v.source.block, cp.block] and anc[cp.block, v.target.block]:
                    sandwich[i, j] = True
        if v.target.c == v.source.c + 1:
            fin[src_idx, j] = True

    pair_e1 = np.zeros((m, m), dtype=bool)
    pair_e2 = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(m):
            if a == b:
                continue
            va, vb = votes[a], votes[b]
            if va.target.c == vb.target.c:
                pair_e1[a, b] = True
            elif checkpoint_lt(vb.source, va.source) and va.target.c < vb.target.c:
                pair_e2[a, b] = True
            elif checkpoint_lt(va.source, vb.source) and vb.target.c < va.target.c:
                pair_e2[a, b] = True

    has_conflict = bool((cp_conflict != 0).any())
    return GraphTables(
        forest=forest,
        checkpoints=tuple(cps),
        votes=tuple(votes),
        vote_src=vote_src,
        cp_conflict=cp_conflict,
        sandwich=sandwich,
        sandwich_noanc=sandwich_noanc,
        by_src=by_src,
        fin=fin,
        pair_e1=pair_e1,
        pair_e2=pair_e2,
        has_conflict=has_conflict,
    )


@dataclass(frozen=True)
class ProjectedTables:
    """GraphTables restricted to one combination U of distinct votes, bit-packed."""

    gc_idx: int
    sandwich: np.ndarray       # (K,) int64 vote masks
    by_src: np.ndarray         # (K,) int64
    fin: np.ndarray            # (K,) int64
    cp_conflict: np.ndarray    # (K,) int64 checkpoint masks
    subset_slash: np.ndarray   # (2**u,) bool


def project_tables(
    tables: GraphTables, combo: Sequence[int], mutation: Mutation = Mutation.NONE
) -> ProjectedTables:
    u = len(combo)
    if u > MAX_VOTE_BITS:
        raise InputError(
            f"{u} distinct votes exceed the kernel limit {MAX_VOTE_BITS}; "
            "lower max_ffg_votes"
        )
    weights = (1 << np.arange(u, dtype=np.int64)) if u else np.zeros(0, dtype=np.int64)
    cols = list(combo)
    sandwich_src = (
        tables.sandwich_noanc if Mutation.DROP_ANCESTRY in mutation else tables.sandwich
    )
    pack = lambda mat: mat[:, cols].astype(np.int64) @ weights
    pair = np.zeros((u, u), dtype=bool)
    if Mutation.DISABLE_E1 not in mutation:
        pair |= tables.pair_e1[np.ix_(cols, cols)]
    if Mutation.DISABLE_E2 not in mutation:
        pair |= tables.pair_e2[np.ix_(cols, cols)]
    bits = (np.arange(2**u)[:, None] >> np.arange(u)[None, :]) & 1
    subset_slash = np.einsum("ti,tj,ij->t", bits, bits, pair.astype(np.int64)) > 0
    return ProjectedTables(
        gc_idx=0,
        sandwich=pack(sandwich_src),
        by_src=pack(tables.by_src),
        fin=pack(tables.fin),
        cp_conflict=tables.cp_conflict,
        subset_slash=subset_slash,
    )


@lru_cache(maxsize=None)
def state_table(
    u: int, n_validators: int, max_votes: int, min_signers: int
) -> tuple[np.ndarray, int, int]:
    """Canonical vote-assignment rows for `u` distinct votes.

    Rows are non-decreasing tuples of per-validator subset masks (one row per
    validator-permutation class), with union exactly the full u-bit set and at
    most `max_votes` signed votes in total.  Returns (rows meeting the
    min_signers floor, count of rows pruned by that floor, total row count).
    """
    n_subsets = 2**u
    est = 1
    for i in range(n_validators):
        est = est * (n_subsets + i) // (i + 1)
    if est > 20_000_000:
        raise InputError(
            f"state table for u={u}, N={n_validators} would have ~{est} rows; "
            "lower max_ffg_votes or n_validators"
        )
    rows = np.fromiter(
        itertools.chain.from_iterable(
            itertools.combinations_with_replacement(range(n_subsets), n_validators)
        ),
        dtype=np.int64,
    ).reshape(-1, n_validators)
    union = np.bitwise_or.reduce(rows, axis=1)
    pop = np.zeros(rows.shape[0], dtype=np.int64)
    for bit in range(u):
        pop += ((rows >> bit) & 1).sum(axis=1)
    keep = (union == n_subsets - 1) & (pop <= max_votes)
    rows = rows[keep]
    signers = (rows != 0).sum(axis=1)
    active = rows[signers >= min_signers]
    total = int(rows.shape[0])
    return active, total - int(active.shape[0]), total


def min_signers_for_quorum(n_validators: int) -> int:
    """Fewest distinct senders any supermajority needs: ceil(2N/3)."""
    return -(-2 * n_validators // 3)
