"""Independent brute-force oracles and random instance makers shared by the tests."""
import itertools
import math

import numpy as np
import scipy.sparse as sp

from cbrsca.graph import ConflictGraph, Vertex
from cbrsca.scenario import ChannelBlock


def random_adj(rng, n, p):
    adj = {v: set() for v in range(n)}
    for a, b in itertools.combinations(range(n), 2):
        if rng.random() < p:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def brute_maximal_cliques(adj):
    nodes = sorted(adj)
    cliques = []
    for r in range(1, len(nodes) + 1):
        for c in itertools.combinations(nodes, r):
            if all(b in adj[a] for a, b in itertools.combinations(c, 2)):
                cliques.append(set(c))
    maximal = [c for c in cliques if not any(c < d for d in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


def opt_bins(sizes, cap):
    """Fewest bins by trying k = 1, 2, ... with backtracking."""
    sizes = sorted(sizes, reverse=True)
    for k in range(1, len(sizes) + 1):
        loads = [0.0] * k

        def place(i):
            if i == len(sizes):
                return True
            seen = set()
            for b in range(k):
                if loads[b] in seen:
                    continue
                seen.add(loads[b])
                if loads[b] + sizes[i] <= cap + 1e-12:
                    loads[b] += sizes[i]
                    if place(i + 1):
                        return True
                    loads[b] -= sizes[i]
            return False

        if place(0):
            return k
    return len(sizes)


def graph_from_adj(adj, weights=None):
    n = len(adj)
    verts = [Vertex(k, (k,), ChannelBlock(1, 1), 1.0 if weights is None else float(weights[k]))
             for k in range(n)]
    u = [a for a in adj for b in adj[a] if a < b]
    v = [b for a in adj for b in adj[a] if a < b]
    return ConflictGraph.from_edges(verts, u, v)


def brute_mwis(g, w):
    best = 0.0
    for r in range(1, g.n + 1):
        for c in itertools.combinations(range(g.n), r):
            if all(not g.has_edge(a, b) for a, b in itertools.combinations(c, 2)):
                best = max(best, float(sum(w[x] for x in c)))
    return best


def random_clustered(rng, sizes, density=0.5, rmax=4.0, pmax=1.0, integer_rewards=False):
    """Clustered graph with random rewards and directed penalties between clusters."""
    verts, clusters = [], []
    for ci, k in enumerate(sizes):
        ids = []
        for j in range(k):
            r = float(rng.integers(1, int(rmax) + 1)) if integer_rewards else rng.uniform(0, rmax)
            verts.append(Vertex(len(verts), (ci,), ChannelBlock(j + 1, 1), r))
            ids.append(len(verts) - 1)
        clusters.append(ids)
    n = len(verts)
    cl = np.concatenate([[c] * k for c, k in enumerate(sizes)]).astype(int) if n else np.zeros(0)
    rows, cols, vals = [], [], []
    for a in range(n):
        for b in range(n):
            if cl[a] != cl[b] and rng.random() < density:
                rows.append(a)
                cols.append(b)
                vals.append(rng.uniform(0, pmax))
    pen = sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()
    return ConflictGraph.from_edges(verts, rows, cols, clusters=clusters, penalties=pen)


def utility_by_hand(sel, g, lam):
    sel = list(sel)
    P = g.penalties.toarray() if g.penalties is not None else np.zeros((g.n, g.n))
    r = sum(g.vertices[x].reward for x in sel)
    pen = sum(P[a, b] for a in sel for b in sel if a != b)
    return r - lam * pen


def feasible_sets(g):
    choices = [[None] + list(c) for c in g.clusters if c]
    for pick in itertools.product(*choices):
        yield [x for x in pick if x is not None]


def ffd_bound(opt):
    return math.ceil(11 / 9 * opt + 6 / 9)


def mwis_bitmask(n, adj, w):
    """Exact MWIS by branching on the lowest remaining vertex, memoised on the bitmask."""
    nb = [0] * n
    for a in range(n):
        for b in adj[a]:
            nb[a] |= 1 << b
    memo = {0: 0.0}

    def best(mask):
        if mask in memo:
            return memo[mask]
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        val = max(best(rest), w[v] + best(rest & ~nb[v]))
        memo[mask] = val
        return val

    return best((1 << n) - 1)
