"""Built-in block graphs and the restricted two-chain search mode.

The fixed graphs are the small fork/chain/forest instances used as per-graph
search units, with slots equal to the drawn level.  Two of the entries (i1,
i2) are intentionally broken inputs and must be rejected by forest
validation: i1 gives one block two parents, i2 closes a parent cycle.

The two-chain mode encodes a pair of chains that share a prefix and then
fork; block ids carry signed body integers (the second branch negates them
past the fork point), so the ancestor test reduces to integer comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .enumerator import Bounds, enumerate_states
from .model import GENESIS, Block, BlockForest, InputError, ProtocolState


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    # (block id, level, parent id) rows; level doubles as the slot
    rows: tuple[tuple[str, int, Optional[str]], ...]


def _chain(prefix: str, length: int, base: str = GENESIS, base_level: int = 0):
    rows = []
    parent = base
    for i in range(1, length + 1):
        name = f"{prefix}{base_level + i}"
        rows.append((name, base_level + i, parent))
        parent = name
    return rows


CATALOG: dict[str, CatalogEntry] = {}


def _register(entry_id: str, description: str, rows) -> None:
    CATALOG[entry_id] = CatalogEntry(entry_id, description, tuple(rows))


_register("m3", "short fork: two conflicting children of genesis", _chain("a", 1) + _chain("b", 1))
_register("m4a", "fork with the upper branch extended to length two", _chain("a", 2) + _chain("b", 1))
_register("m4b", "fork with the lower branch extended to length two", _chain("a", 1) + _chain("b", 2))
_register("m5a", "two branches of length two from genesis", _chain("a", 2) + _chain("b", 2))
_register(
    "m5b",
    "one shared block, then a fork into two leaves",
    [("s1", 1, GENESIS), ("a2", 2, "s1"), ("b2", 2, "s1")],
)
_register("m7", "two branches of length three from genesis", _chain("a", 3) + _chain("b", 3))
_register("single-chain", "a single chain of four blocks after genesis", _chain("a", 4))
_register(
    "forest",
    "two branches plus a detached block and a detached two-chain",
    _chain("a", 4)
    + _chain("b", 3)
    + [("d1", 1, None), ("c1", 1, None), ("c2", 2, "c1")],
)
_register(
    "i1",
    "not a forest: one block with two parents",
    [("n1", 1, GENESIS), ("n2", 2, "n1"), ("n3", 3, "n2"), ("n3", 3, "n1")],
)
_register(
    "i2",
    "not a forest: a parent cycle",
    [("n1", 1, GENESIS), ("n2", 2, "n1"), ("n3", 3, "n2"), ("n1", 1, "n3")],
)


def catalog_ids() -> list[str]:
    return list(CATALOG)


def catalog_forest(entry_id: str) -> BlockForest:
    """Build a catalog graph, rejecting the intentionally broken entries."""
    try:
        entry = CATALOG[entry_id]
    except KeyError:
        raise InputError(
            f"unknown catalog graph {entry_id!r}; choose from {', '.join(CATALOG)}"
        ) from None
    return forest_from_rows(entry.rows)


def forest_from_rows(rows) -> BlockForest:
    """Validate raw (id, slot, parent) rows: cycles first, then multi-parent."""
    edges = [(child, parent) for child, _, parent in rows if parent is not None]
    parents_of: dict[str, list[str]] = {}
    for child, parent in edges:
        parents_of.setdefault(child, []).append(parent)
    _reject_cycles(parents_of)
    for child, parents in parents_of.items():
        if len(parents) > 1:
            raise InputError(
                f"block {child!r} has {len(parents)} parents; a forest allows one"
            )
    return BlockForest(Block(child, slot, parent) for child, slot, parent in rows)


def _reject_cycles(parents_of: dict[str, list[str]]) -> None:
    # DFS over the child -> parent edge relation
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in parents_of}

    def visit(node: str, path: list[str]) -> None:
        color[node] = GREY
        for parent in parents_of.get(node, ()):
            if parent not in color:
                continue
            if color[parent] == GREY:
                cycle = path[path.index(parent):] if parent in path else [parent]
                raise InputError(
                    "cycle detected among blocks: " + " -> ".join(cycle + [parent])
                )
            if color[parent] == WHITE:
                visit(parent, path + [parent])
        color[node] = BLACK

    for node in list(color):
        if color[node] == WHITE:
            visit(node, [node])


@dataclass(frozen=True)
class TwoChainConfig:
    """A forked pair of chains: shared prefix up to `fork_point`, then two branches.

    Block bodies are the integers 1..fork_point on the shared prefix,
    fork_point+1.. on the first branch, and the same values negated on the
    second branch; genesis is body 0.
    """

    fork_point: int
    length_a: int
    length_b: int

    def __post_init__(self):
        if self.fork_point < 0 or self.length_a < 0 or self.length_b < 0:
            raise InputError("two-chain lengths must be non-negative")

    def bodies(self) -> list[int]:
        shared = list(range(1, self.fork_point + 1))
        branch_a = list(range(self.fork_point + 1, self.fork_point + self.length_a + 1))
        branch_b = [-v for v in range(self.fork_point + 1, self.fork_point + self.length_b + 1)]
        return shared + branch_a + branch_b


def two_chain_forest(config: TwoChainConfig) -> BlockForest:
    def block_id(body: int) -> str:
        return GENESIS if body == 0 else str(body)

    def parent_body(body: int) -> int:
        mag = abs(body)
        if mag == config.fork_point + 1:
            return config.fork_point  # both branches hang off the shared prefix
        return (mag - 1) if body > 0 else -(mag - 1)

    return BlockForest(
        Block(block_id(b), abs(b), block_id(parent_body(b))) for b in config.bodies()
    )


def two_chain_is_ancestor(config: TwoChainConfig, a_body: int, b_body: int) -> bool:
    """Ancestor test by signed body comparison, no graph walk.

    a is an ancestor of b iff |a| <= |b| and either a sits on the shared
    prefix or both blocks sit on the same branch (same sign past the fork).
    """
    if abs(a_body) > abs(b_body):
        return False
    if abs(a_body) <= config.fork_point:
        return True
    return (a_body > 0) == (b_body > 0)


def two_chain_states(config: TwoChainConfig, bounds: Bounds) -> Iterator[ProtocolState]:
    """The bounded state enumeration restricted to the two-chain forest."""
    yield from enumerate_states(bounds, two_chain_forest(config))
