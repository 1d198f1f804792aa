"""State-scan kernels: the hot inner loop of the bounded search.

One call scans a block of canonical vote-assignment rows (`states`, one row of
per-validator vote masks) against the bit-packed tables of a single
(graph, distinct-vote combination) pair, and returns the first row satisfying
the scan mode plus the number of rows scanned.

Two interchangeable backends implement the same contract:

* a numba ``@njit`` kernel (row-at-a-time integer loops), used when numba
  imports and ``FFGMC_KERNEL`` is ``auto`` or ``numba``;
* a vectorized pure-numpy path (batched over rows), selected by
  ``FFGMC_KERNEL=numpy`` or when numba is unavailable.

Both report counters as if rows were scanned sequentially and the scan stopped
at the first hit, so reports are byte-identical across backends.
"""

from __future__ import annotations

import os

import numpy as np

from .tables import ProjectedTables

MODE_COUNTEREXAMPLE = 0        # disagreement with under-threshold slashing
MODE_FINALIZED_NONGENESIS = 1
MODE_JUSTIFIED_NONGENESIS = 2
MODE_CONFLICTING_FINALIZED = 3
MODE_LFP_NE_GFP = 4

_NUMPY_BATCH = 1 << 15

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via FFGMC_KERNEL=numpy
    numba = None
    HAVE_NUMBA = False


def backend_name(override: str | None = None) -> str:
    choice = override or os.environ.get("FFGMC_KERNEL", "auto")
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown kernel backend {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("FFGMC_KERNEL=numba but numba is not importable")
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    return choice


def scan_states(
    states: np.ndarray,
    tables: ProjectedTables,
    n_validators: int,
    mode: int,
    quorum_half: bool,
    backend: str | None = None,
) -> tuple[int, int]:
    """Scan rows in order; return (first hit row or -1, rows scanned)."""
    if states.shape[0] == 0:
        return -1, 0
    just_a, just_b = (2, n_validators) if quorum_half else (3, 2 * n_validators)
    args = (
        np.ascontiguousarray(states, dtype=np.int64),
        int(tables.gc_idx),
        tables.sandwich,
        tables.by_src,
        tables.fin,
        tables.cp_conflict,
        tables.subset_slash,
        just_a,
        just_b,
        n_validators,
        mode,
    )
    if backend_name(backend) == "numba":
        hit, scanned = _scan_numba(*args)
    else:
        hit, scanned = _scan_numpy(*args)
    return int(hit), int(scanned)


def _full_mask(k: int) -> int:
    return (1 << k) - 1


# ---------------------------------------------------------------------------
# numpy backend

def _justified_numpy(states, gc_idx, sandwich, by_src, just_a, just_b, start):
    s, n = states.shape
    k = sandwich.shape[0]
    kr = np.arange(k, dtype=np.int64)
    genesis_bit = np.int64(1 << gc_idx)
    j = np.full(s, start, dtype=np.int64)
    pending = np.arange(s)
    while pending.size:
        jp = j[pending]
        member = ((jp[:, None] >> kr[None, :]) & 1).astype(bool)        # (s, K)
        eligible = np.bitwise_or.reduce(
            np.where(member, by_src[None, :], np.int64(0)), axis=1
        )                                                               # (s,)
        support = sandwich[None, :] & eligible[:, None]                 # (s, K)
        counts = ((states[pending, :, None] & support[:, None, :]) != 0).sum(axis=1)
        quorum = just_a * counts >= just_b                              # (s, K)
        jn = genesis_bit | np.bitwise_or.reduce(
            np.where(quorum, np.int64(1) << kr[None, :], np.int64(0)), axis=1
        )
        j[pending] = jn
        pending = pending[jn != jp]
    return j


def _scan_numpy(
    states, gc_idx, sandwich, by_src, fin, cp_conflict, subset_slash,
    just_a, just_b, n_validators, mode,
):
    total = states.shape[0]
    k = sandwich.shape[0]
    kr = np.arange(k, dtype=np.int64)
    genesis_bit = np.int64(1 << gc_idx)
    for lo in range(0, total, _NUMPY_BATCH):
        batch = states[lo : lo + _NUMPY_BATCH]
        j = _justified_numpy(batch, gc_idx, sandwich, by_src, just_a, just_b, genesis_bit)
        if mode == MODE_LFP_NE_GFP:
            gfp = _justified_numpy(
                batch, gc_idx, sandwich, by_src, just_a, just_b, np.int64(_full_mask(k))
            )
            hits = j != gfp
        elif mode == MODE_JUSTIFIED_NONGENESIS:
            hits = j != genesis_bit
        else:
            justified = ((j[:, None] >> kr[None, :]) & 1).astype(bool)
            fcounts = ((batch[:, :, None] & fin[None, None, :]) != 0).sum(axis=1)
            final = justified & (just_a * fcounts >= just_b)
            fmask = genesis_bit | np.bitwise_or.reduce(
                np.where(final, np.int64(1) << kr[None, :], np.int64(0)), axis=1
            )
            fbits = ((fmask[:, None] >> kr[None, :]) & 1).astype(bool)
            clash = np.bitwise_or.reduce(
                np.where(fbits, cp_conflict[None, :], np.int64(0)), axis=1
            )
            disagree = (clash & fmask) != 0
            if mode == MODE_FINALIZED_NONGENESIS:
                hits = fmask != genesis_bit
            elif mode == MODE_CONFLICTING_FINALIZED:
                hits = disagree
            else:
                slashable = subset_slash[batch].sum(axis=1)
                hits = disagree & (3 * slashable < n_validators)
        where = np.nonzero(hits)[0]
        if where.size:
            return lo + int(where[0]), lo + int(where[0]) + 1
    return -1, total


# ---------------------------------------------------------------------------
# numba backend

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _justified_one(masks, gc_idx, sandwich, by_src, just_a, just_b, start):
        k = sandwich.shape[0]
        n = masks.shape[0]
        j = start
        while True:
            eligible = np.int64(0)
            for idx in range(k):
                if (j >> idx) & 1:
                    eligible |= by_src[idx]
            jn = np.int64(1) << gc_idx
            for idx in range(k):
                support = sandwich[idx] & eligible
                if support != 0:
                    count = 0
                    for v in range(n):
                        if masks[v] & support:
                            count += 1
                    if just_a * count >= just_b:
                        jn |= np.int64(1) << idx
            if jn == j:
                return j
            j = jn

    @numba.njit(cache=True, nogil=True)
    def _scan_numba(
        states, gc_idx, sandwich, by_src, fin, cp_conflict, subset_slash,
        just_a, just_b, n_validators, mode,
    ):
        total = states.shape[0]
        n = states.shape[1]
        k = sandwich.shape[0]
        genesis_bit = np.int64(1) << gc_idx
        full = (np.int64(1) << k) - 1
        for row in range(total):
            masks = states[row]
            j = _justified_one(masks, gc_idx, sandwich, by_src, just_a, just_b, genesis_bit)
            if mode == MODE_LFP_NE_GFP:
                gfp = _justified_one(masks, gc_idx, sandwich, by_src, just_a, just_b, full)
                if j != gfp:
                    return row, row + 1
                continue
            if mode == MODE_JUSTIFIED_NONGENESIS:
                if j != genesis_bit:
                    return row, row + 1
                continue
            fmask = genesis_bit
            for idx in range(k):
                if (j >> idx) & 1 and fin[idx] != 0:
                    count = 0
                    for v in range(n):
                        if masks[v] & fin[idx]:
                            count += 1
                    if just_a * count >= just_b:
                        fmask |= np.int64(1) << idx
            if mode == MODE_FINALIZED_NONGENESIS:
                if fmask != genesis_bit:
                    return row, row + 1
                continue
            disagree = False
            for idx in range(k):
                if (fmask >> idx) & 1 and (cp_conflict[idx] & fmask) != 0:
                    disagree = True
                    break
            if mode == MODE_CONFLICTING_FINALIZED:
                if disagree:
                    return row, row + 1
                continue
            if not disagree:
                continue
            slashable = 0
            for v in range(n):
                if subset_slash[masks[v]]:
                    slashable += 1
            if 3 * slashable < n_validators:
                return row, row + 1
        return -1, total

else:  # pragma: no cover
    _scan_numba = None
