"""Channel-assignment solvers, baselines and the exhaustive oracle."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .graph import ConflictGraph
from .objective import utility
from .scenario import ChannelBlock


@dataclass
class Solution:
    selected: tuple
    objective: float
    per_node: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "selected": [int(v) for v in self.selected],
            "objective": self.objective,
            "per_node": {str(k): [b.lo, b.length] for k, b in sorted(self.per_node.items())},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        return cls(tuple(d["selected"]), d["objective"],
                   {int(k): ChannelBlock(*b) for k, b in d["per_node"].items()},
                   dict(d.get("meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _per_node(g: ConflictGraph, selected: Iterable[int]) -> dict:
    out = {}
    for v in selected:
        vert = g.vertices[v]
        for m in vert.members:
            if m in out:
                raise ValueError(f"node {m} assigned twice")
            out[m] = vert.block
    return out


def _solution(g, selected, objective, t0, **meta) -> Solution:
    sel = tuple(sorted(int(v) for v in selected))
    meta["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    return Solution(sel, float(objective), _per_node(g, sel), meta)


# ------------------------------------------------------------------- GMWIS

def _greedy_mis(g: ConflictGraph, weights: np.ndarray, alive: np.ndarray,
                use_degree: bool = True) -> list[int]:
    n = g.n
    alive = alive.copy()
    deg = np.zeros(n, dtype=np.int64)
    if use_degree and n:
        idx = np.flatnonzero(alive)
        sub = g.adj[idx][:, idx]
        deg[idx] = np.diff(sub.indptr)
    picked = []
    indptr, indices = g.adj.indptr, g.adj.indices
    while alive.any():
        score = weights / (deg + 1.0) if use_degree else weights.astype(float)
        score = np.where(alive, score, -np.inf)
        v = int(np.argmax(score))
        picked.append(v)
        gone = indices[indptr[v]:indptr[v + 1]]
        gone = np.concatenate([[v], gone[alive[gone]]])
        alive[gone] = False
        if use_degree:
            nb = np.concatenate([indices[indptr[x]:indptr[x + 1]] for x in gone])
            nb = nb[alive[nb]]
            if len(nb):
                deg -= np.bincount(nb, minlength=n)
    return picked


def gmwis(g: ConflictGraph, weights=None) -> Solution:
    """Greedy MWIS: repeatedly take argmax w(v)/(deg(v)+1) in the residual graph.

    Ties go to the lowest vertex id. ``weights`` defaults to the vertex rewards.
    """
    t0 = time.perf_counter()
    w = g.rewards() if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    picked = _greedy_mis(g, w, np.ones(g.n, dtype=bool))
    return _solution(g, picked, w[picked].sum() if picked else 0.0, t0, solver="gmwis")


def gmwis_lower_bound(g: ConflictGraph, weights=None) -> float:
    w = g.rewards() if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w / (g.degrees() + 1.0)))


def mra(g: ConflictGraph, rewards=None) -> Solution:
    """Max-revenue greedy: take the largest-reward vertex compatible with the picks so far."""
    t0 = time.perf_counter()
    r = g.rewards() if rewards is None else np.asarray(rewards, dtype=float)
    picked = _greedy_mis(g, r, np.ones(g.n, dtype=bool), use_degree=False)
    return _solution(g, picked, r[picked].sum() if picked else 0.0, t0, solver="mra")


def npsmc(g: ConflictGraph, demands: Mapping[int, int], n_colors: int) -> Solution:
    """Non-preemptive sum multicoloring on a job graph.

    Jobs of different lengths are made adjacent, then each round colors a
    maximal independent set (unit-weight GMWIS on the residual graph) with
    the next block of contiguous colors, until a round no longer fits.
    """
    if n_colors < 1:
        raise ValueError("need at least one color")
    t0 = time.perf_counter()
    n = g.n
    x = np.array([demands[v] for v in range(n)], dtype=np.int64)
    u0, v0 = g.edges()
    iu, ju = np.triu_indices(n, k=1)
    diff = x[iu] != x[ju]
    gp = ConflictGraph.from_edges(g.vertices, np.concatenate([u0, iu[diff]]),
                                  np.concatenate([v0, ju[diff]]))
    alive = np.ones(n, dtype=bool)
    ones = np.ones(n)
    cursor = 1
    colored: dict = {}
    rounds = 0
    while alive.any():
        group = _greedy_mis(gp, ones, alive)
        length = int(x[group[0]])
        if cursor + length - 1 > n_colors:
            break
        for v in group:
            colored[v] = ChannelBlock(cursor, length)
        alive[group] = False
        cursor += length
        rounds += 1
    sol = _solution(g, colored, len(colored), t0, solver="npsmc", rounds=rounds)
    sol.per_node = {g.vertices[v].owner: b for v, b in colored.items()}
    sol.meta["blocks"] = {int(v): [b.lo, b.length] for v, b in sorted(colored.items())}
    return sol


# --------------------------------------------------------- local search / UM

@dataclass(frozen=True)
class PartitionMatroid:
    """At most one element from each cluster."""

    clusters: tuple

    def __post_init__(self):
        cl = tuple(tuple(sorted(c)) for c in self.clusters if len(c))
        seen = [v for c in cl for v in c]
        if len(seen) != len(set(seen)):
            raise ValueError("clusters must be disjoint")
        object.__setattr__(self, "clusters", cl)

    @classmethod
    def of_graph(cls, g: ConflictGraph) -> "PartitionMatroid":
        if g.clusters is None:
            return cls(tuple((v,) for v in range(g.n)))
        return cls(tuple(g.clusters))

    @property
    def ground(self) -> tuple:
        return tuple(sorted(v for c in self.clusters for v in c))

    def cluster_map(self) -> dict:
        return {v: k for k, c in enumerate(self.clusters) for v in c}

    def is_independent(self, s: Iterable[int]) -> bool:
        cm = self.cluster_map()
        seen = set()
        for v in s:
            if v not in cm or cm[v] in seen:
                return False
            seen.add(cm[v])
        return True

    def restrict(self, removed: Iterable[int]) -> "PartitionMatroid":
        removed = set(removed)
        return PartitionMatroid(tuple(tuple(v for v in c if v not in removed)
                                      for c in self.clusters))


class UtilityFunction:
    """Callable utility U(I) over a clustered graph; LS uses its vectorised gains."""

    def __init__(self, g: ConflictGraph, lam: float):
        self.g = g
        self.lam = float(lam)
        self.rewards = g.rewards()
        if g.penalties is not None:
            p = g.penalties.tocsr()
            self.sym = (p + p.T).tocsr()
            self.sym.setdiag(0)
            self.sym.eliminate_zeros()
        else:
            import scipy.sparse as sp
            self.sym = sp.csr_array((g.n, g.n))

    def __call__(self, s: Iterable[int]) -> float:
        return utility(s, self.g, self.lam)


def _threshold_ok(delta: float, cur: float, eps: float, n: int, strict: bool) -> bool:
    """Acceptance test f(new) >= (1 + eps/N^2) f(cur), written in terms of delta.

    With eps == 0 or f(cur) <= 0 the factor gives no margin, so a strict
    test (with a relative float guard) is used and the search cannot cycle.
    """
    if eps == 0 or cur <= 0:
        return delta > 1e-12 * max(1.0, abs(cur))
    slack = eps / (n * n) * cur
    return delta > slack if strict else delta >= slack


def ls(matroid: PartitionMatroid, f: Callable, eps: float = 0.0,
       stats: dict | None = None) -> frozenset:
    """Approximate local search under a partition matroid.

    Greedy additions first, then delete and add/swap moves until none
    improves f by the factor (1 + eps/N^2). Candidates are scanned in
    ascending vertex order and the first improving move is taken; for
    add/swap the order is by added vertex, then removed vertex with
    "remove nothing" first.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if isinstance(f, UtilityFunction):
        return _ls_utility(matroid, f, eps, stats)
    return _ls_generic(matroid, f, eps, stats)


def _ls_generic(matroid, f, eps, stats):
    ground = matroid.ground
    n = len(ground)
    cm = matroid.cluster_map()
    moves = 0
    trace = []
    sel: set = set()
    cur = f(frozenset())
    if n == 0:
        if stats is not None:
            stats.update(moves=0, trace=[])
        return frozenset()

    def feasible_add(s, a):
        return all(cm[x] != cm[a] for x in s)

    v = max(ground, key=lambda u: (f(frozenset([u])), -u))
    while v is not None and _threshold_ok(f(frozenset(sel | {v})) - cur, cur, eps, n, True):
        sel.add(v)
        cur = f(frozenset(sel))
        moves += 1
        trace.append(cur)
        cands = [u for u in ground if u not in sel and feasible_add(sel, u)]
        v = max(cands, key=lambda u: (f(frozenset(sel | {u})) - cur, -u)) if cands else None

    while True:
        for d in sorted(sel):
            val = f(frozenset(sel - {d}))
            if _threshold_ok(val - cur, cur, eps, n, False):
                sel.discard(d)
                cur = val
                moves += 1
                trace.append(cur)
                break
        else:
            move = None
            for a in ground:
                if a in sel:
                    continue
                for d in [None] + sorted(sel):
                    rest = sel - {d} if d is not None else sel
                    if not feasible_add(rest, a):
                        continue
                    val = f(frozenset(rest | {a}))
                    if _threshold_ok(val - cur, cur, eps, n, False):
                        move = (a, d, val)
                        break
                if move:
                    break
            if move is None:
                break
            a, d, val = move
            if d is not None:
                sel.discard(d)
            sel.add(a)
            cur = val
            moves += 1
            trace.append(cur)
    if stats is not None:
        stats["moves"] = moves
        stats["trace"] = trace
    return frozenset(sel)


def _ls_utility(matroid: PartitionMatroid, f: UtilityFunction, eps, stats):
    g = f.g
    nv = g.n
    R = f.rewards
    lam = f.lam
    S = f.sym
    ground = np.zeros(nv, dtype=bool)
    ground_ids = np.array(matroid.ground, dtype=np.int64)
    ground[ground_ids] = True
    n = len(ground_ids)
    cl = np.full(nv, -1, dtype=np.int64)
    for k, c in enumerate(matroid.clusters):
        cl[list(c)] = k
    occ = np.full(len(matroid.clusters), -1, dtype=np.int64)
    in_sel = np.zeros(nv, dtype=bool)
    pen = np.zeros(nv)
    cur = 0.0
    moves = 0
    trace = []
    if n == 0:
        if stats is not None:
            stats.update(moves=0, trace=[])
        return frozenset()

    def row(v):
        out = np.zeros(nv)
        lo, hi = S.indptr[v], S.indptr[v + 1]
        out[S.indices[lo:hi]] = S.data[lo:hi]
        return out

    def add(v):
        in_sel[v] = True
        occ[cl[v]] = v
        pen[:] += row(v)

    def remove(v):
        in_sel[v] = False
        occ[cl[v]] = -1
        pen[:] -= row(v)

    # greedy phase
    gain = np.where(ground, R, -np.inf)
    v = int(np.argmax(gain))
    delta = float(gain[v])
    while _threshold_ok(delta, cur, eps, n, True):
        add(v)
        cur += delta
        moves += 1
        trace.append(cur)
        gain = R - lam * pen
        ok = ground & ~in_sel & (occ[np.maximum(cl, 0)] == -1)
        if not ok.any():
            break
        gain = np.where(ok, gain, -np.inf)
        v = int(np.argmax(gain))
        delta = float(gain[v])

    while True:
        sel = np.flatnonzero(in_sel)
        add_gain = R - lam * pen
        del_gain = -R[sel] + lam * pen[sel]
        # delete
        hit = np.flatnonzero(_vec_ok(del_gain, cur, eps, n))
        if len(hit):
            remove(int(sel[hit[0]]))
            cur += float(del_gain[hit[0]])
            moves += 1
            trace.append(cur)
            continue
        # add / swap
        cand = ground & ~in_sel
        owner = np.where(cand, occ[np.maximum(cl, 0)], -1)
        free = cand & (owner == -1)
        taken = cand & (owner >= 0)
        best = None
        ok_add = free & _vec_ok(np.where(free, add_gain, 0.0), cur, eps, n)
        # swap within an occupied cluster
        ok_own = np.zeros(nv, dtype=bool)
        own_delta = np.zeros(nv)
        if taken.any():
            ids = np.flatnonzero(taken)
            d_of = owner[ids]
            sd = np.asarray(S[d_of, ids]).ravel()
            own_delta[ids] = add_gain[ids] - R[d_of] + lam * pen[d_of] + lam * sd
            ok_own[ids] = _vec_ok(own_delta[ids], cur, eps, n)
        # swap any selected vertex out for a free-cluster vertex
        swap_ok = None
        if len(sel) and free.any():
            fids = np.flatnonzero(free)
            rows = S[sel][:, fids].toarray()
            sw = add_gain[fids][None, :] + del_gain[:, None] + lam * rows
            swap_ok = np.zeros((len(sel), nv), dtype=bool)
            swap_ok[:, fids] = _vec_ok(sw, cur, eps, n)
        any_ok = ok_add | ok_own
        if swap_ok is not None:
            any_ok = any_ok | swap_ok.any(axis=0)
        if any_ok.any():
            a = int(np.argmax(any_ok))
            if ok_add[a]:
                best = (a, None, float(add_gain[a]))
            elif ok_own[a]:
                best = (a, int(owner[a]), float(own_delta[a]))
            else:
                k = int(np.argmax(swap_ok[:, a]))
                d = int(sel[k])
                best = (a, d, float(add_gain[a] + del_gain[k] + lam * S[d, a]))
        if best is None:
            break
        a, d, delta = best
        if d is not None:
            remove(d)
        add(a)
        cur += delta
        moves += 1
        trace.append(cur)
    if stats is not None:
        stats["moves"] = moves
        stats["trace"] = trace
    return frozenset(int(v) for v in np.flatnonzero(in_sel))


def _vec_ok(delta: np.ndarray, cur: float, eps: float, n: int) -> np.ndarray:
    if eps == 0 or cur <= 0:
        return delta > 1e-12 * max(1.0, abs(cur))
    return delta >= eps / (n * n) * cur


def um(matroid: PartitionMatroid, f: Callable, eps: float = 0.0) -> Solution:
    """Run LS on the matroid, again on the matroid minus the first answer, keep the better."""
    t0 = time.perf_counter()
    st1: dict = {}
    st2: dict = {}
    i1 = ls(matroid, f, eps, st1)
    i2 = ls(matroid.restrict(i1), f, eps, st2)
    u1, u2 = f(i1), f(i2)
    best = i1 if u1 >= u2 else i2
    meta = {"solver": "um", "moves": st1["moves"] + st2["moves"],
            "moves_ls1": st1["moves"], "moves_ls2": st2["moves"]}
    sel = tuple(sorted(best))
    g = getattr(f, "g", None)
    per_node = _per_node(g, sel) if g is not None else {}
    meta["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    return Solution(sel, float(max(u1, u2)), per_node, meta)


def max_utility(g: ConflictGraph, lam: float, eps: float = 0.0) -> Solution:
    return um(PartitionMatroid.of_graph(g), UtilityFunction(g, lam), eps)


# --------------------------------------------------------- random baseline

def random_select(g: ConflictGraph, lam: float, trials: int = 10000, seed=0,
                  chunk: int = 2000) -> Solution:
    """Best of ``trials`` draws taking one uniform vertex from every cluster."""
    if trials < 1:
        raise ValueError("need at least one trial")
    t0 = time.perf_counter()
    clusters = [np.array(c, dtype=np.int64) for c in (g.clusters or []) if len(c)]
    k = len(clusters)
    if k == 0:
        return _solution(g, [], 0.0, t0, solver="random", trials=trials)
    sizes = np.array([len(c) for c in clusters], dtype=np.int64)
    width = int(sizes.max())
    R = g.rewards()
    rpad = np.zeros((k, width))
    cl_of = np.empty(g.n, dtype=np.int64)
    loc_of = np.empty(g.n, dtype=np.int64)
    for ci, c in enumerate(clusters):
        rpad[ci, :len(c)] = R[c]
        cl_of[c] = ci
        loc_of[c] = np.arange(len(c))
    blocks = []
    if g.penalties is not None and lam:
        coo = g.penalties.tocoo()
        cu, cv = cl_of[coo.row], cl_of[coo.col]
        key = cu * k + cv
        order = np.argsort(key, kind="stable")
        key_s = key[order]
        bounds = np.flatnonzero(np.diff(key_s)) + 1
        for grp in np.split(order, bounds):
            if not len(grp):
                continue
            a, b = int(cu[grp[0]]), int(cv[grp[0]])
            m = np.zeros((sizes[a], sizes[b]))
            np.add.at(m, (loc_of[coo.row[grp]], loc_of[coo.col[grp]]), coo.data[grp])
            blocks.append((a, b, m))
    rng = np.random.default_rng(seed)
    best_u = -np.inf
    best_loc = None
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        loc = rng.integers(0, sizes, size=(t, k))
        u = rpad[np.arange(k)[None, :], loc].sum(axis=1)
        for a, b, m in blocks:
            u -= lam * m[loc[:, a], loc[:, b]]
        j = int(np.argmax(u))
        if u[j] > best_u:
            best_u = float(u[j])
            best_loc = loc[j].copy()
        done += t
    picked = [int(clusters[ci][best_loc[ci]]) for ci in range(k)]
    return _solution(g, picked, utility(picked, g, lam), t0, solver="random", trials=trials)


# ------------------------------------------------------------------ oracle

BRUTE_FORCE_LIMIT = 2_000_000


def brute_force_opt(g: ConflictGraph, lam: float) -> Solution:
    """Exact max-utility by enumerating every cluster-feasible set.

    ``meta['u_min']`` holds the minimum utility over the same family.
    """
    t0 = time.perf_counter()
    clusters = [tuple(c) for c in PartitionMatroid.of_graph(g).clusters]
    space = math.prod(len(c) + 1 for c in clusters)
    if space > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for enumeration ({space} feasible sets)")
    R = g.rewards()
    if g.penalties is not None:
        P = g.penalties.toarray()
        sym = P + P.T
        np.fill_diagonal(sym, 0.0)
    else:
        sym = np.zeros((g.n, g.n))
    best = [-np.inf, ()]
    worst = [np.inf]

    def dfs(k, chosen, val):
        if k == len(clusters):
            if val > best[0] + 1e-12:
                best[0], best[1] = val, tuple(chosen)
            worst[0] = min(worst[0], val)
            return
        dfs(k + 1, chosen, val)
        for v in clusters[k]:
            inc = R[v] - lam * sum(sym[u, v] for u in chosen)
            chosen.append(v)
            dfs(k + 1, chosen, val + inc)
            chosen.pop()

    dfs(0, [], 0.0)
    return _solution(g, best[1], utility(best[1], g, lam), t0, solver="brute_force",
                     u_min=float(worst[0]), n_sets=space)


def verify(g: ConflictGraph, selected: Iterable[int], mode: str = "independent",
           blocks: Mapping[int, ChannelBlock] | None = None) -> bool:
    """Re-check a solution's constraint from scratch.

    Modes: ``independent`` (no edge inside the set), ``cluster_feasible`` (at
    most one vertex per cluster) and ``multicolor`` (adjacent selected vertices
    hold disjoint ``blocks[v]``).
    """
    sel = [int(v) for v in selected]
    if len(sel) != len(set(sel)) or any(v < 0 or v >= g.n for v in sel):
        return False
    if mode == "independent":
        return all(not g.has_edge(a, b) for i, a in enumerate(sel) for b in sel[i + 1:])
    if mode == "cluster_feasible":
        cm = PartitionMatroid.of_graph(g).cluster_map()
        seen = set()
        for v in sel:
            if cm[v] in seen:
                return False
            seen.add(cm[v])
        return True
    if mode == "multicolor":
        if blocks is None or set(blocks) != set(sel):
            return False
        return all(not blocks[a].intersects(blocks[b])
                   for i, a in enumerate(sel) for b in sel[i + 1:] if g.has_edge(a, b))
    raise ValueError(f"unknown mode {mode!r}")


def solution_blocks(sol: Solution) -> dict:
    """Vertex-level blocks recorded by :func:`npsmc`."""
    return {int(v): ChannelBlock(*b) for v, b in sol.meta.get("blocks", {}).items()}
