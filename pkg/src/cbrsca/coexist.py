"""Super-node formation: cliques of mutually carrier-sensing nodes packed by FFD."""
from __future__ import annotations

from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .graph import Vertex
from .scenario import ChannelBlock, ConflictClass, GAAScenario, conflict_matrix

ZERO_ACTIVITY_FLOOR = 1e-9
_FIT_TOL = 1e-12


def bron_kerbosch(adj: Mapping[Hashable, Iterable[Hashable]]) -> list[tuple]:
    """All maximal cliques of an undirected graph, Tomita pivoting.

    ``adj`` maps each vertex to its neighbours. Cliques come back as sorted
    tuples, themselves sorted.
    """
    nbrs = {v: set(ns) - {v} for v, ns in adj.items()}
    out: list[tuple] = []
    if not nbrs:
        return out

    def expand(r: list, p: set, x: set) -> None:
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: (len(p & nbrs[u]), _sort_key(u)))
        for v in sorted(p - nbrs[pivot], key=_sort_key):
            expand(r + [v], p & nbrs[v], x & nbrs[v])
            p = p - {v}
            x = x | {v}

    expand([], set(nbrs), set())
    return sorted(out, key=lambda c: [_sort_key(v) for v in c])


def _sort_key(v):
    return (0, v) if isinstance(v, (int, np.integer)) else (1, str(v))


def assign_cliques(cliques: Sequence[Sequence], seed) -> dict:
    """Map every node to one of the cliques containing it, uniformly at random."""
    rng = np.random.default_rng(seed)
    containing: dict = {}
    for k, q in enumerate(cliques):
        for v in q:
            containing.setdefault(v, []).append(k)
    return {v: ks[int(rng.integers(len(ks)))] if len(ks) > 1 else ks[0]
            for v, ks in sorted(containing.items(), key=lambda kv: _sort_key(kv[0]))}


def mapped_activity(alpha: float, block_len: int) -> float:
    if alpha < 0 or block_len < 1:
        raise ValueError("need alpha >= 0 and block_len >= 1")
    return min(max(alpha, ZERO_ACTIVITY_FLOOR) / block_len, 1.0)


def ffd_pack(items: Sequence[tuple], capacity: float) -> list[list[tuple]]:
    """First fit decreasing over ``(key, size)`` items.

    Items are sorted by size descending, ties by key ascending, then each
    goes to the lowest-indexed bin with room.
    """
    if items and capacity < max(s for _, s in items):
        raise ValueError(f"capacity {capacity} is smaller than the largest item")
    order = sorted(items, key=lambda it: (-it[1], _sort_key(it[0])))
    bins: list[list[tuple]] = []
    loads: list[float] = []
    for key, size in order:
        for k, load in enumerate(loads):
            if load + size <= capacity + _FIT_TOL:
                bins[k].append((key, size))
                loads[k] += size
                break
        else:
            bins.append([(key, size)])
            loads.append(size)
    return bins


def cs_graph(s: GAAScenario, block: ChannelBlock,
             conflicts: np.ndarray | None = None) -> dict:
    """Nodes able to take ``block``, linked when both directions are type-II."""
    if conflicts is None:
        conflicts = conflict_matrix(s)
    t2 = ConflictClass.TYPE_II.value
    eligible = [k for k, nd in enumerate(s.nodes)
                if block.length in nd.demand_set and block.within(nd.availability)]
    adj = {s.nodes[k].id: set() for k in eligible}
    for x, a in enumerate(eligible):
        for b in eligible[x + 1:]:
            if conflicts[a, b] == t2 and conflicts[b, a] == t2:
                adj[s.nodes[a].id].add(s.nodes[b].id)
                adj[s.nodes[b].id].add(s.nodes[a].id)
    return adj


def block_seed(seed, block: ChannelBlock) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), block.lo, block.length])


def form_super_nodes(s: GAAScenario, block: ChannelBlock, alpha_bar: float, seed=0,
                     conflicts: np.ndarray | None = None) -> list[Vertex]:
    """Super-NC pairs on ``block``; returned vertices carry id -1 until placed in a graph."""
    if alpha_bar <= 0:
        raise ValueError("activity limit must be positive")
    adj = cs_graph(s, block, conflicts)
    if not any(adj.values()):
        return []
    cliques = bron_kerbosch(adj)
    choice = assign_cliques(cliques, block_seed(seed, block))
    out = []
    for k in range(len(cliques)):
        members = [v for v, q in choice.items() if q == k]
        if len(members) < 2:
            continue
        items = [(v, mapped_activity(s.node(v).activity, block.length)) for v in members]
        for b in ffd_pack(items, alpha_bar):
            if len(b) > 1:
                out.append(Vertex(-1, tuple(sorted(v for v, _ in b)), block))
    return out


def all_super_nodes(s: GAAScenario, blocks: Iterable[ChannelBlock], alpha_bar: float,
                    seed=0, conflicts: np.ndarray | None = None) -> list[Vertex]:
    """Run formation for every block, merged in canonical (length, lo) order."""
    if alpha_bar <= 0:
        return []
    if conflicts is None:
        conflicts = conflict_matrix(s)
    out = []
    for b in sorted(set(blocks), key=lambda b: (b.length, b.lo)):
        out.extend(form_super_nodes(s, b, alpha_bar, seed, conflicts))
    return out
