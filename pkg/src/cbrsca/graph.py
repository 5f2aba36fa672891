"""NC-pair enumeration and conflict-graph construction.

Four variants are built here: the PA graph, the binary GAA graph, its
coexistence-aware augmentation with super-NC pairs, and the clustered
non-binary GAA graph carrying directed penalties.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .scenario import (
    ChannelBlock,
    ChannelSet,
    GAAScenario,
    PAScenario,
    conflict_matrix,
)


@dataclass(frozen=True)
class Vertex:
    """An NC pair (one member) or super-NC pair (several members)."""

    id: int
    members: tuple
    block: ChannelBlock
    reward: float = 1.0

    @property
    def owner(self) -> int:
        return self.members[0]

    @property
    def size(self) -> int:
        return len(self.members)


def enumerate_pa_assignments(avail: ChannelSet | Iterable[int], n: int) -> list[ChannelBlock]:
    if n < 1:
        raise ValueError("block length must be >= 1")
    chans = set(avail)
    if not chans:
        return []
    top = max(chans)
    return [ChannelBlock(lo, n) for lo in range(1, top - n + 2)
            if all(c in chans for c in range(lo, lo + n))]


def enumerate_gaa_assignments(avail: ChannelSet | Iterable[int],
                              demand: Iterable[int]) -> list[ChannelBlock]:
    chans = set(avail)
    out = []
    for length in sorted(set(demand)):
        out.extend(enumerate_pa_assignments(chans, length))
    return out


def _sym_adjacency(n: int, u, v) -> sp.csr_array:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    keep = u != v
    u, v = u[keep], v[keep]
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    a = sp.coo_array((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.data[:] = 1
    a.sort_indices()
    return a


class ConflictGraph:
    """Vertex-weighted undirected conflict graph in CSR form.

    ``penalties[u, v]`` is the penalty on ``v`` caused by ``u``; when present
    the graph is clustered and ``adj`` is the union of both directions.
    """

    def __init__(self, vertices: Sequence[Vertex], adj: sp.csr_array,
                 clusters: Sequence[Sequence[int]] | None = None,
                 penalties: sp.csr_array | None = None):
        self.vertices = list(vertices)
        self.adj = adj
        self.clusters = None if clusters is None else [tuple(c) for c in clusters]
        self.penalties = penalties
        for k, v in enumerate(self.vertices):
            if v.id != k:
                raise ValueError("vertex ids must equal their position")

    @classmethod
    def from_edges(cls, vertices, u, v, **kw) -> "ConflictGraph":
        return cls(vertices, _sym_adjacency(len(vertices), u, v), **kw)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return int(self.adj.nnz // 2)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adj.indptr).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[v]:self.adj.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        coo = self.adj.tocoo()
        keep = coo.row < coo.col
        return coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64)

    def rewards(self) -> np.ndarray:
        return np.array([v.reward for v in self.vertices], dtype=float)

    def with_rewards(self, rewards) -> "ConflictGraph":
        verts = [replace(v, reward=float(r)) for v, r in zip(self.vertices, rewards)]
        return ConflictGraph(verts, self.adj, self.clusters, self.penalties)

    def cluster_index(self) -> np.ndarray:
        out = np.full(self.n, -1, dtype=np.int64)
        for k, c in enumerate(self.clusters or ()):
            out[list(c)] = k
        return out

    def owners(self) -> list:
        return sorted({m for v in self.vertices for m in v.members})

    def to_dict(self) -> dict:
        u, v = self.edges()
        d = {
            "vertices": [
                {"id": x.id, "members": list(x.members), "block": [x.block.lo, x.block.length],
                 "reward": x.reward}
                for x in self.vertices
            ],
            "edges": [[int(a), int(b)] for a, b in zip(u, v)],
            "clusters": None if self.clusters is None else [list(c) for c in self.clusters],
            "penalties": None,
        }
        if self.penalties is not None:
            coo = self.penalties.tocoo()
            order = np.lexsort((coo.col, coo.row))
            d["penalties"] = [[int(coo.row[k]), int(coo.col[k]), float(coo.data[k])] for k in order]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConflictGraph":
        verts = [Vertex(x["id"], tuple(x["members"]), ChannelBlock(*x["block"]), x["reward"])
                 for x in d["vertices"]]
        e = np.array(d["edges"], dtype=np.int64).reshape(-1, 2)
        pen = None
        if d.get("penalties") is not None:
            p = np.array(d["penalties"], dtype=float).reshape(-1, 3)
            pen = sp.coo_array((p[:, 2], (p[:, 0].astype(np.int64), p[:, 1].astype(np.int64))),
                               shape=(len(verts), len(verts))).tocsr()
        return cls.from_edges(verts, e[:, 0], e[:, 1], clusters=d.get("clusters"), penalties=pen)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _block_arrays(vertices: Sequence[Vertex]) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([v.block.lo for v in vertices], dtype=np.int64)
    hi = np.array([v.block.hi for v in vertices], dtype=np.int64)
    return lo, hi


def _cross_overlaps(a_ids, b_ids, lo, hi):
    """Index pairs (a, b) from two id groups whose blocks intersect."""
    a = np.asarray(a_ids)
    b = np.asarray(b_ids)
    hit = (lo[a][:, None] <= hi[b][None, :]) & (lo[b][None, :] <= hi[a][:, None])
    ia, ib = np.nonzero(hit)
    return a[ia], b[ib]


def _complete_pairs(ids):
    ids = np.asarray(ids)
    iu, ju = np.triu_indices(len(ids), k=1)
    return ids[iu], ids[ju]


def _group_vertices(owner_ids, blocks_per_owner):
    vertices: list[Vertex] = []
    groups: dict = {}
    for oid, blocks in zip(owner_ids, blocks_per_owner):
        start = len(vertices)
        for b in blocks:
            vertices.append(Vertex(len(vertices), (oid,), b))
        groups[oid] = list(range(start, len(vertices)))
    return vertices, groups


def build_pa_graph(s: PAScenario) -> ConflictGraph:
    """One vertex per (service area, valid block), unit rewards."""
    areas = sorted(s.service_areas, key=lambda a: a.id)
    vertices, groups = _group_vertices(
        [a.id for a in areas],
        [enumerate_pa_assignments(a.availability, a.n_pals) for a in areas])
    lo, hi = _block_arrays(vertices)
    us, vs = [], []
    for a in areas:
        u, v = _complete_pairs(groups[a.id])
        us.append(u)
        vs.append(v)
    for x in range(len(areas)):
        for y in range(x + 1, len(areas)):
            if areas[x].tract_ids & areas[y].tract_ids:
                u, v = _cross_overlaps(groups[areas[x].id], groups[areas[y].id], lo, hi)
                us.append(u)
                vs.append(v)
    return ConflictGraph.from_edges(vertices, _cat(us), _cat(vs),
                                    clusters=[groups[a.id] for a in areas])


def build_pa_job_graph(s: PAScenario) -> tuple[ConflictGraph, dict]:
    """Area-level graph for multicoloring: one vertex per area, edges on shared tracts.

    Returns the graph and the demanded length of each vertex.
    """
    areas = sorted(s.service_areas, key=lambda a: a.id)
    vertices = [Vertex(k, (a.id,), ChannelBlock(1, a.n_pals)) for k, a in enumerate(areas)]
    us, vs = [], []
    for x in range(len(areas)):
        for y in range(x + 1, len(areas)):
            if areas[x].tract_ids & areas[y].tract_ids:
                us.append(x)
                vs.append(y)
    g = ConflictGraph.from_edges(vertices, us, vs)
    return g, {k: a.n_pals for k, a in enumerate(areas)}


def _cat(parts) -> np.ndarray:
    parts = [np.asarray(p, dtype=np.int64) for p in parts]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def gaa_vertices(s: GAAScenario) -> tuple[list[Vertex], dict]:
    nodes = sorted(s.nodes, key=lambda nd: nd.id)
    return _group_vertices([nd.id for nd in nodes],
                           [enumerate_gaa_assignments(nd.availability, nd.demand_set)
                            for nd in nodes])


def build_gaa_binary_graph(s: GAAScenario, conflicts: np.ndarray | None = None) -> ConflictGraph:
    """Binary GAA graph; nodes conflict if either direction is not NONE."""
    vertices, groups = gaa_vertices(s)
    if conflicts is None:
        conflicts = conflict_matrix(s)
    pos_of = {nd.id: k for k, nd in enumerate(s.nodes)}
    lo, hi = _block_arrays(vertices)
    us, vs = [], []
    for ids in groups.values():
        u, v = _complete_pairs(ids)
        us.append(u)
        vs.append(v)
    sym = (conflicts != 0) | (conflicts.T != 0)
    node_ids = sorted(groups)
    for x_i, a in enumerate(node_ids):
        for b in node_ids[x_i + 1:]:
            if sym[pos_of[a], pos_of[b]] and groups[a] and groups[b]:
                u, v = _cross_overlaps(groups[a], groups[b], lo, hi)
                us.append(u)
                vs.append(v)
    return ConflictGraph.from_edges(vertices, _cat(us), _cat(vs),
                                    clusters=[groups[a] for a in node_ids])


def augment_coexistence(g: ConflictGraph, supers: Sequence[Vertex]) -> ConflictGraph:
    """Add super-NC pairs that inherit their children's conflicts.

    A super vertex conflicts with every neighbour of its children and with
    every vertex sharing a member; edges among its own children are dropped.
    Two supers conflict if their children do or their members overlap. The
    result is unclustered since supers span several nodes.
    """
    if not supers:
        return g
    single = {(v.members, v.block): v.id for v in g.vertices if v.size == 1}
    base = g.n
    vertices = list(g.vertices)
    children = []
    for s in supers:
        try:
            kids = [single[((m,), s.block)] for m in s.members]
        except KeyError:
            raise ValueError(f"super pair {s.members} on {s.block} lacks a child vertex") from None
        children.append(kids)
        vertices.append(Vertex(len(vertices), tuple(s.members), s.block, s.reward))

    by_member: dict = {}
    for v in g.vertices:
        for m in v.members:
            by_member.setdefault(m, []).append(v.id)

    n = len(vertices)
    u0, v0 = g.edges()
    drop = [min(a, b) * n + max(a, b)
            for kids in children for i, a in enumerate(kids) for b in kids[i + 1:]]
    if drop:
        keep = ~np.isin(u0 * n + v0, np.array(drop, dtype=np.int64))
        u0, v0 = u0[keep], v0[keep]

    us, vs = [u0], [v0]
    inherited = []
    for k, (s, kids) in enumerate(zip(supers, children)):
        nb = set()
        for c in kids:
            nb.update(g.neighbors(c).tolist())
        inherited.append(frozenset(nb))
        for m in s.members:
            nb.update(by_member.get(m, ()))
        us.append(np.full(len(nb), base + k, dtype=np.int64))
        vs.append(np.array(sorted(nb), dtype=np.int64))
    for a in range(len(supers)):
        kids_a = set(children[a])
        mem_a = set(supers[a].members)
        for b in range(a + 1, len(supers)):
            if inherited[b] & kids_a or mem_a & set(supers[b].members):
                us.append(np.array([base + a]))
                vs.append(np.array([base + b]))
    return ConflictGraph.from_edges(vertices, _cat(us), _cat(vs))


PenaltyModel = Callable[[Sequence[Vertex], np.ndarray, np.ndarray, GAAScenario], np.ndarray]


def build_nonbinary_graph(s: GAAScenario, penalty_model: PenaltyModel | str = "interference",
                          conflicts: np.ndarray | None = None) -> ConflictGraph:
    """Clustered GAA graph with directed penalties and no intra-cluster edges.

    ``penalty_model(vertices, u, v, scenario)`` returns the penalty on each
    ``v[k]`` caused by ``u[k]``; strings select a model from
    :mod:`cbrsca.objective`.
    """
    if isinstance(penalty_model, str):
        from . import objective
        penalty_model = objective.PENALTY_MODELS[penalty_model]
    vertices, groups = gaa_vertices(s)
    if conflicts is None:
        conflicts = conflict_matrix(s)
    pos_of = {nd.id: k for k, nd in enumerate(s.nodes)}
    lo, hi = _block_arrays(vertices)
    us, vs = [], []
    node_ids = sorted(groups)
    for a in node_ids:
        for b in node_ids:
            # entry [victim, aggressor]: b's vertices penalise a's
            if a != b and conflicts[pos_of[a], pos_of[b]] and groups[a] and groups[b]:
                u, v = _cross_overlaps(groups[b], groups[a], lo, hi)
                us.append(u)
                vs.append(v)
    u = _cat(us)
    v = _cat(vs)
    vals = np.asarray(penalty_model(vertices, u, v, s), dtype=float) if len(u) else np.zeros(0)
    if np.any(vals < 0):
        raise ValueError("penalties must be non-negative")
    n = len(vertices)
    pen = sp.coo_array((vals, (u, v)), shape=(n, n)).tocsr()
    pen.sort_indices()
    return ConflictGraph(vertices, _sym_adjacency(n, u, v),
                         clusters=[groups[a] for a in node_ids], penalties=pen)
