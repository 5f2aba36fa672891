"""Rewards, penalties, capacity model and the utility function."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import ConflictGraph, Vertex, enumerate_gaa_assignments
from .radio import dbm_to_watts, received_power_dbm, service_radius
from .scenario import GAAScenario, conflict_matrix

REWARD_KINDS = ("linear", "log", "capacity", "unit")
PENALTY_KINDS = ("interference", "capacity")


@dataclass(frozen=True)
class Weights:
    lam: float = 0.0
    reward_kind: str = "linear"
    penalty_kind: str = "interference"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.reward_kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {self.reward_kind!r}")
        if self.penalty_kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.penalty_kind!r}")


@dataclass(frozen=True)
class CapacityParams:
    noise_density: float = 4.0e-21  # W/Hz, thermal floor
    w0: float = 1e7
    quad_angles: int = 24
    quad_radii: int = 12

    def __post_init__(self):
        if self.noise_density <= 0 or self.w0 <= 0:
            raise ValueError("noise density and bandwidth must be positive")
        if self.quad_angles < 1 or self.quad_radii < 1:
            raise ValueError("quadrature needs at least one cell per axis")


# ----------------------------------------------------------------- rewards

def reward_linear(v: Vertex) -> float:
    return float(v.size * v.block.length)


def reward_log(v: Vertex) -> float:
    return v.size * (1.0 + math.log(v.block.length))


def reward_unit(v: Vertex) -> float:
    return 1.0


def weight_max_reward(v: Vertex, lam: float, reward=None) -> float:
    """Vertex weight for max-reward: R(v) + lam * |S(v)|; R defaults to the stored reward."""
    r = v.reward if reward is None else reward(v)
    return r + lam * v.size


def assign_rewards(g: ConflictGraph, kind: str, scenario: GAAScenario | None = None,
                   cap: "CapacityParams" = None) -> ConflictGraph:
    if kind == "linear":
        r = [reward_linear(v) for v in g.vertices]
    elif kind == "log":
        r = [reward_log(v) for v in g.vertices]
    elif kind == "unit":
        r = [1.0] * g.n
    elif kind == "capacity":
        if scenario is None:
            raise ValueError("capacity rewards need the scenario")
        cap = cap or CapacityParams()
        per_node = {nd.id: channel_capacity(nd, cap) for nd in scenario.nodes}
        r = [sum(per_node[m] for m in v.members) * v.block.length / 1e6 for v in g.vertices]
    else:
        raise ValueError(f"unknown reward kind {kind!r}")
    return g.with_rewards(r)


# --------------------------------------------------------------- penalties

def _node_positions(s: GAAScenario) -> tuple[dict, np.ndarray]:
    index = {nd.id: k for k, nd in enumerate(s.nodes)}
    return index, s.positions()


def _rx_watts(s: GAAScenario, victims: np.ndarray, aggressors: np.ndarray,
              at_contour: bool = False) -> np.ndarray:
    """Power (W) from each aggressor node received at each victim node's site.

    With ``at_contour`` the power is taken at the point of the victim's service
    contour nearest the aggressor instead of at the victim itself.
    """
    pos = s.positions()
    d = np.hypot(*(pos[victims] - pos[aggressors]).T) if len(victims) else np.zeros(0)
    if at_contour and len(victims):
        r_i = np.array([service_radius(s.nodes[k].params) for k in victims])
        d = np.abs(d - r_i)
    out = np.empty(len(victims))
    params = np.array([s.nodes[k].params for k in aggressors], dtype=object)
    for p in set(params.tolist()):
        sel = params == p
        out[sel] = dbm_to_watts(received_power_dbm(d[sel], p))
    return out


def _overlaps(vertices: Sequence[Vertex], u: np.ndarray, v: np.ndarray) -> np.ndarray:
    lo = np.array([x.block.lo for x in vertices])
    hi = np.array([x.block.hi for x in vertices])
    return np.maximum(0, np.minimum(hi[u], hi[v]) - np.maximum(lo[u], lo[v]) + 1)


def raw_interference(vertices: Sequence[Vertex], u, v, s: GAAScenario,
                     at_contour: bool = False) -> np.ndarray:
    """Received power from u's owner at v's owner times the channel overlap, in W."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    index, _ = _node_positions(s)
    agg = np.array([index[vertices[k].owner] for k in u], dtype=np.int64)
    vic = np.array([index[vertices[k].owner] for k in v], dtype=np.int64)
    return _rx_watts(s, vic, agg, at_contour) * _overlaps(vertices, u, v)


def interference_scale(s: GAAScenario, conflicts: np.ndarray | None = None) -> float:
    """Largest raw interference over every directed penalty edge the scenario admits."""
    if conflicts is None:
        conflicts = conflict_matrix(s)
    vic, agg = np.nonzero(conflicts)
    if len(vic) == 0:
        return 0.0
    blocks = [enumerate_gaa_assignments(nd.availability, nd.demand_set) for nd in s.nodes]
    best_overlap = np.array([
        max((a.overlap(b) for a in blocks[i] for b in blocks[j]), default=0)
        for i, j in zip(vic, agg)])
    return float(np.max(_rx_watts(s, vic, agg) * best_overlap))


def interference_penalties(vertices: Sequence[Vertex], u, v, s: GAAScenario,
                           at_contour: bool = False) -> np.ndarray:
    """Raw interference normalised by its maximum over the given edges, in (0, 1]."""
    raw = raw_interference(vertices, u, v, s, at_contour)
    if len(raw) == 0:
        return raw
    return raw / raw.max()


def penalty_interference(u: Vertex, v: Vertex, s: GAAScenario, scale: float | None = None) -> float:
    """Normalised interference penalty on ``v`` from ``u``.

    ``scale`` defaults to :func:`interference_scale` of the scenario.
    """
    if u.owner == v.owner or not u.block.intersects(v.block):
        return 0.0
    raw = float(raw_interference([u, v], [0], [1], s)[0])
    if scale is None:
        scale = interference_scale(s)
    return raw / scale if scale > 0 else 0.0


# ---------------------------------------------------------------- capacity

def polar_grid(radius: float, n_angles: int, n_radii: int):
    """Cell centres and area weights of an equal-width polar grid over a disk.

    Each annulus is represented at its area centroid radius; weights sum to 1.
    """
    edges = np.linspace(0.0, radius, n_radii + 1)
    a, b = edges[:-1], edges[1:]
    rc = (2.0 / 3.0) * (b ** 3 - a ** 3) / (b ** 2 - a ** 2)
    w_r = (b ** 2 - a ** 2) / radius ** 2
    th = 2.0 * math.pi * (np.arange(n_angles) + 0.5) / n_angles
    r_grid, t_grid = np.meshgrid(rc, th, indexing="ij")
    w = np.repeat(w_r / n_angles, n_angles)
    return (r_grid * np.cos(t_grid)).ravel(), (r_grid * np.sin(t_grid)).ravel(), w


def _signal_at(node, dx, dy) -> np.ndarray:
    return dbm_to_watts(received_power_dbm(np.hypot(dx, dy), node.params))


def channel_capacity(node, cap: CapacityParams = CapacityParams(), interferer=None) -> float:
    """Area-averaged Shannon rate (bit/s) in one channel over the node's service disk."""
    dx, dy, w = polar_grid(service_radius(node.params), cap.quad_angles, cap.quad_radii)
    sig = _signal_at(node, dx, dy)
    denom = cap.noise_density * cap.w0
    if interferer is not None:
        ox = node.pos.x_km - interferer.pos.x_km
        oy = node.pos.y_km - interferer.pos.y_km
        denom = denom + _signal_at(interferer, dx + ox, dy + oy)
    return float(cap.w0 * np.sum(w * np.log2(1.0 + sig / denom)))


def capacity_reward(v: Vertex, s: GAAScenario, cap: CapacityParams = CapacityParams()) -> float:
    """Interference-free capacity of a singleton vertex in Mbit/s."""
    if v.size != 1:
        raise ValueError("capacity reward is defined for single-node vertices")
    return v.block.length * channel_capacity(s.node(v.owner), cap) / 1e6


def capacity_loss_per_channel(victim, aggressor, cap: CapacityParams = CapacityParams()) -> float:
    return (channel_capacity(victim, cap) - channel_capacity(victim, cap, aggressor)) / 1e6


def capacity_penalty(u: Vertex, v: Vertex, s: GAAScenario,
                     cap: CapacityParams = CapacityParams()) -> float:
    """Capacity lost (Mbit/s) at ``v``'s node when ``u`` shares channels with it."""
    k = u.block.overlap(v.block)
    if k == 0 or u.owner == v.owner:
        return 0.0
    return k * capacity_loss_per_channel(s.node(v.owner), s.node(u.owner), cap)


def capacity_penalties(vertices: Sequence[Vertex], u, v, s: GAAScenario,
                       cap: CapacityParams = CapacityParams()) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    cache: dict = {}
    loss = np.empty(len(u))
    for k, (a, b) in enumerate(zip(u, v)):
        key = (vertices[b].owner, vertices[a].owner)
        if key not in cache:
            cache[key] = capacity_loss_per_channel(s.node(key[0]), s.node(key[1]), cap)
        loss[k] = cache[key]
    return loss * _overlaps(vertices, u, v)


PENALTY_MODELS = {"interference": interference_penalties, "capacity": capacity_penalties}


# ----------------------------------------------------------------- utility

def utility(selected: Iterable[int], g: ConflictGraph, lam: float) -> float:
    """Total reward minus ``lam`` times all directed penalties among ``selected``."""
    idx = np.array(sorted(set(selected)), dtype=np.int64)
    if len(idx) == 0:
        return 0.0
    total = float(g.rewards()[idx].sum())
    if g.penalties is not None and lam:
        sub = g.penalties[idx][:, idx]
        total -= lam * float(sub.sum() - sub.diagonal().sum())
    return total
