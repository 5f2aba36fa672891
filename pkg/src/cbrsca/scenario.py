"""PA and GAA scenario model, generators, ingestion and availability."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .radio import (
    Point,
    RadioParams,
    contour_radius,
    interference_radius,
    planar_distance,
    project_latlon,
    service_radius,
)

PA_CHANNELS = 10
GAA_CHANNELS = 15
MAX_PALS_PER_TRACT = 7
MAX_PALS_PER_AREA = 4
MAX_DEMAND = 4


@dataclass(frozen=True)
class ChannelSet:
    """Subset of the channel ground set {1..omega}."""

    channels: frozenset
    omega: int = GAA_CHANNELS

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(int(c) for c in self.channels))
        if any(c < 1 or c > self.omega for c in self.channels):
            raise ValueError(f"channels must lie in 1..{self.omega}")

    @classmethod
    def full(cls, omega: int) -> "ChannelSet":
        return cls(frozenset(range(1, omega + 1)), omega)

    def __contains__(self, c) -> bool:
        return c in self.channels

    def __iter__(self):
        return iter(sorted(self.channels))

    def __len__(self) -> int:
        return len(self.channels)

    def __sub__(self, other: "ChannelSet") -> "ChannelSet":
        return ChannelSet(self.channels - other.channels, self.omega)

    def to_list(self) -> list[int]:
        return sorted(self.channels)


@dataclass(frozen=True, order=True)
class ChannelBlock:
    """Contiguous channels lo..lo+length-1."""

    lo: int
    length: int

    def __post_init__(self):
        if self.lo < 1 or self.length < 1:
            raise ValueError("block needs lo >= 1 and length >= 1")

    @property
    def hi(self) -> int:
        return self.lo + self.length - 1

    @property
    def channels(self) -> range:
        return range(self.lo, self.hi + 1)

    def overlap(self, other: "ChannelBlock") -> int:
        return max(0, min(self.hi, other.hi) - max(self.lo, other.lo) + 1)

    def intersects(self, other: "ChannelBlock") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def within(self, avail: ChannelSet) -> bool:
        return all(c in avail for c in self.channels)

    def __str__(self):
        return "{" + ",".join(map(str, self.channels)) + "}"


class ConflictClass(enum.Enum):
    NONE = 0
    TYPE_I = 1
    TYPE_II = 2


# ---------------------------------------------------------------- PA tier

@dataclass(frozen=True)
class ServiceArea:
    id: int
    licensee_id: int
    tract_ids: frozenset
    n_pals: int
    availability: ChannelSet = field(default_factory=lambda: ChannelSet.full(PA_CHANNELS))

    def __post_init__(self):
        object.__setattr__(self, "tract_ids", frozenset(int(t) for t in self.tract_ids))
        if not self.tract_ids:
            raise ValueError("service area needs at least one tract")
        if not 1 <= self.n_pals <= MAX_PALS_PER_AREA:
            raise ValueError("n_pals must be in 1..4")


@dataclass(frozen=True)
class PAScenario:
    grid_width: int
    service_areas: tuple
    channels: ChannelSet = field(default_factory=lambda: ChannelSet.full(PA_CHANNELS))

    def __post_init__(self):
        object.__setattr__(self, "service_areas", tuple(self.service_areas))
        load = tract_loads(self.service_areas)
        if load and max(load.values()) > MAX_PALS_PER_TRACT:
            raise ValueError("more than seven PALs assigned in a license area")

    @property
    def n(self) -> int:
        return len(self.service_areas)

    def to_dict(self) -> dict:
        return {
            "tier": "pa",
            "grid_width": self.grid_width,
            "channels": {"omega": self.channels.omega, "mask": self.channels.to_list()},
            "service_areas": [
                {
                    "id": a.id,
                    "licensee_id": a.licensee_id,
                    "tract_ids": sorted(a.tract_ids),
                    "n_pals": a.n_pals,
                    "availability": a.availability.to_list(),
                }
                for a in self.service_areas
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PAScenario":
        omega = d["channels"]["omega"]
        return cls(
            grid_width=d["grid_width"],
            channels=ChannelSet(d["channels"]["mask"], omega),
            service_areas=tuple(
                ServiceArea(
                    id=a["id"],
                    licensee_id=a["licensee_id"],
                    tract_ids=frozenset(a["tract_ids"]),
                    n_pals=a["n_pals"],
                    availability=ChannelSet(a["availability"], omega),
                )
                for a in d["service_areas"]
            ),
        )


def tract_loads(areas: Iterable[ServiceArea]) -> dict[int, int]:
    load: dict[int, int] = {}
    for a in areas:
        for t in a.tract_ids:
            load[t] = load.get(t, 0) + a.n_pals
    return load


def is_four_connected(tracts: Iterable[int], m: int) -> bool:
    tracts = set(tracts)
    if not tracts:
        return False
    start = next(iter(tracts))
    seen = {start}
    stack = [start]
    while stack:
        t = stack.pop()
        x, y = t % m, t // m
        for nx_, ny_ in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx_ < m and 0 <= ny_ < m:
                nb = ny_ * m + nx_
                if nb in tracts and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    return len(seen) == len(tracts)


def tracts_in_circle(cx: float, cy: float, r: float, m: int) -> frozenset:
    """Unit-square tracts of an m x m grid whose interior meets the open disk."""
    out = []
    for y in range(max(0, int(math.floor(cy - r))), min(m, int(math.ceil(cy + r)))):
        for x in range(max(0, int(math.floor(cx - r))), min(m, int(math.ceil(cx + r)))):
            dx = cx - min(max(cx, x), x + 1)
            dy = cy - min(max(cy, y), y + 1)
            if dx * dx + dy * dy < r * r:
                out.append(y * m + x)
    return frozenset(out)


def compute_pal_availability(area: ServiceArea | None = None,
                             dpa_mask: ChannelSet | None = None) -> ChannelSet:
    """PAL channels usable by ``area``: the PA ground set minus DPA-blocked ones."""
    full = ChannelSet.full(PA_CHANNELS)
    if dpa_mask is None:
        return full
    return full - ChannelSet(dpa_mask.channels, PA_CHANNELS)


def generate_pa_scenario(m: int, r_s: float, seed, max_failures: int = 1000,
                         dpa_mask: ChannelSet | None = None) -> PAScenario:
    """Pack random circular service areas onto an m x m tract grid.

    Each trial draws a circle centre uniformly in [0, m]^2 and a PAL count
    uniformly in 1..4; a trial is rejected if any covered tract would exceed
    seven PALs. Generation stops after ``max_failures`` consecutive rejections.
    """
    if m < 1 or r_s <= 0:
        raise ValueError("need m >= 1 and r_s > 0")
    rng = np.random.default_rng(seed)
    avail = compute_pal_availability(dpa_mask=dpa_mask)
    load = np.zeros(m * m, dtype=int)
    areas: list[ServiceArea] = []
    failures = 0
    while failures < max_failures and load.min() < MAX_PALS_PER_TRACT:
        cx, cy = rng.uniform(0.0, m, size=2)
        n_pals = int(rng.integers(1, MAX_PALS_PER_AREA + 1))
        tracts = tracts_in_circle(cx, cy, r_s, m)
        idx = np.fromiter(tracts, dtype=int, count=len(tracts))
        if (len(idx) == 0 or np.any(load[idx] + n_pals > MAX_PALS_PER_TRACT)
                or not is_four_connected(tracts, m)):
            failures += 1
            continue
        failures = 0
        load[idx] += n_pals
        k = len(areas)
        areas.append(ServiceArea(id=k, licensee_id=k, tract_ids=tracts,
                                 n_pals=n_pals, availability=avail))
    return PAScenario(grid_width=m, service_areas=tuple(areas))


# --------------------------------------------------------------- GAA tier

@dataclass(frozen=True)
class GAANode:
    id: int
    pos: Point
    params: RadioParams = RadioParams()
    availability: ChannelSet = field(default_factory=lambda: ChannelSet.full(GAA_CHANNELS))
    demand_set: frozenset = frozenset(range(1, MAX_DEMAND + 1))
    activity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "demand_set", frozenset(int(d) for d in self.demand_set))
        if any(d < 1 or d > MAX_DEMAND for d in self.demand_set):
            raise ValueError("demand lengths must be in 1..4")
        if self.activity < 0:
            raise ValueError("activity must be non-negative")


@dataclass(frozen=True)
class PANode:
    pos: Point
    block: ChannelBlock
    ppa_radius_km: float
    params: RadioParams = RadioParams()


@dataclass(frozen=True)
class Region:
    center: Point = Point(0.0, 0.0)
    radius_km: float = 1.0

    def contains(self, p: Point) -> bool:
        return planar_distance(self.center, p) <= self.radius_km


@dataclass(frozen=True)
class GAAScenario:
    nodes: tuple
    pa_nodes: tuple = ()
    region: Region = Region()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "pa_nodes", tuple(self.pa_nodes))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node id")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> GAANode:
        return self._index[node_id]

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {n.id: n for n in self.nodes}
            object.__setattr__(self, "_idx", idx)
        return idx

    def positions(self) -> np.ndarray:
        return np.array([[n.pos.x_km, n.pos.y_km] for n in self.nodes], dtype=float).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {
            "tier": "gaa",
            "seed": self.seed,
            "region": {"center": [self.region.center.x_km, self.region.center.y_km],
                       "radius_km": self.region.radius_km},
            "nodes": [
                {
                    "id": n.id,
                    "pos": [n.pos.x_km, n.pos.y_km],
                    "params": n.params.to_dict(),
                    "availability": n.availability.to_list(),
                    "demand_set": sorted(n.demand_set),
                    "activity": n.activity,
                }
                for n in self.nodes
            ],
            "pa_nodes": [
                {
                    "pos": [p.pos.x_km, p.pos.y_km],
                    "block": [p.block.lo, p.block.length],
                    "ppa_radius_km": p.ppa_radius_km,
                    "params": p.params.to_dict(),
                }
                for p in self.pa_nodes
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GAAScenario":
        return cls(
            seed=d.get("seed", 0),
            region=Region(Point(*d["region"]["center"]), d["region"]["radius_km"]),
            nodes=tuple(
                GAANode(
                    id=n["id"],
                    pos=Point(*n["pos"]),
                    params=RadioParams(**n["params"]),
                    availability=ChannelSet(n["availability"], GAA_CHANNELS),
                    demand_set=frozenset(n["demand_set"]),
                    activity=n["activity"],
                )
                for n in d["nodes"]
            ),
            pa_nodes=tuple(
                PANode(Point(*p["pos"]), ChannelBlock(*p["block"]), p["ppa_radius_km"],
                       RadioParams(**p["params"]))
                for p in d["pa_nodes"]
            ),
        )


def compute_gaa_availability(node: GAANode, scenario: GAAScenario | Sequence[PANode]) -> ChannelSet:
    """Channels a GAA node may use without its -80 dBm contour touching a PPA.

    A PA-assigned channel is blocked when the node sits strictly closer than
    ``ppa_radius + r_int`` to a PA node holding it.
    """
    pa_nodes = scenario.pa_nodes if isinstance(scenario, GAAScenario) else scenario
    r_int = interference_radius(node.params)
    blocked = set()
    for pa in pa_nodes:
        if planar_distance(node.pos, pa.pos) < pa.ppa_radius_km + r_int:
            blocked.update(pa.block.channels)
    return ChannelSet(frozenset(range(1, GAA_CHANNELS + 1)) - blocked, GAA_CHANNELS)


def conflict_radii(victim: RadioParams, aggressor: RadioParams) -> tuple[float, float, float]:
    """(victim service radius, aggressor interference radius, CS radius)."""
    r_i = service_radius(victim)
    r_jint = interference_radius(aggressor)
    r_ics = contour_radius(aggressor.tx_power_dbm, victim.cs_threshold_dbm, aggressor)
    return r_i, r_jint, r_ics


def classify_distance(d: float, victim: RadioParams, aggressor: RadioParams) -> ConflictClass:
    r_i, r_jint, r_ics = conflict_radii(victim, aggressor)
    if d >= r_i + r_jint:
        return ConflictClass.NONE
    if d >= r_ics:
        return ConflictClass.TYPE_I
    return ConflictClass.TYPE_II


def classify_conflict(i: GAANode, j: GAANode) -> ConflictClass:
    """Impact of node ``j`` on node ``i``."""
    if i.id == j.id:
        raise ValueError("classification needs two distinct nodes")
    return classify_distance(planar_distance(i.pos, j.pos), i.params, j.params)


def conflict_matrix(scenario: GAAScenario) -> np.ndarray:
    """Directed conflict classes as ints; entry [i, j] is j's impact on i."""
    n = scenario.n
    pos = scenario.positions()
    d = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1))
    params = [nd.params for nd in scenario.nodes]
    if len(set(params)) <= 1:
        # shared parameters: one set of radii for every pair
        out = np.zeros((n, n), dtype=np.int8)
        if n:
            r_i, r_jint, r_ics = conflict_radii(params[0], params[0])
            out[d < r_i + r_jint] = ConflictClass.TYPE_I.value
            out[d < r_ics] = ConflictClass.TYPE_II.value
    else:
        out = np.array([[classify_distance(d[a, b], params[a], params[b]).value
                         for b in range(n)] for a in range(n)], dtype=np.int8)
    np.fill_diagonal(out, 0)
    return out


def _uniform_in_disk(rng, n: int, center: Point, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    t = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([center.x_km + r * np.cos(t), center.y_km + r * np.sin(t)])


DEFAULT_PA_BLOCKS = (ChannelBlock(1, 4), ChannelBlock(5, 3))


def place_pa_nodes(rng, region: Region, per_licensee: int = 10,
                   blocks: Sequence[ChannelBlock] = DEFAULT_PA_BLOCKS,
                   params: RadioParams = RadioParams()) -> tuple:
    ppa = service_radius(params)
    out = []
    for block in blocks:
        for x, y in _uniform_in_disk(rng, per_licensee, region.center, region.radius_km):
            out.append(PANode(Point(float(x), float(y)), block, ppa, params))
    return tuple(out)


def build_gaa_scenario(positions: np.ndarray, region: Region, seed,
                       params: RadioParams = RadioParams(),
                       pa_per_licensee: int = 10,
                       demand_set: Iterable[int] = range(1, MAX_DEMAND + 1),
                       activity_range: tuple = (0.0, 4.0),
                       ids: Sequence[int] | None = None) -> GAAScenario:
    """Attach PA nodes, activities and availability to fixed GAA positions."""
    rng = np.random.default_rng(seed)
    pa_nodes = place_pa_nodes(rng, region, pa_per_licensee, params=params)
    activity = rng.uniform(activity_range[0], activity_range[1], len(positions))
    ids = list(range(len(positions))) if ids is None else list(ids)
    demand = frozenset(demand_set)
    nodes = []
    for k, (x, y) in enumerate(positions):
        node = GAANode(id=int(ids[k]), pos=Point(float(x), float(y)), params=params,
                       demand_set=demand, activity=float(activity[k]))
        avail = compute_gaa_availability(node, pa_nodes)
        nodes.append(GAANode(node.id, node.pos, params, avail, demand, node.activity))
    seed_val = int(seed) if np.ndim(seed) == 0 else 0
    return GAAScenario(tuple(nodes), pa_nodes, region, seed_val)


def generate_gaa_scenario(radius_km: float, seed, n_nodes: int | None = None,
                          density_per_km2: float = 75.0, **kw) -> GAAScenario:
    """Synthetic GAA deployment: uniform nodes in a disk of ``radius_km``.

    The node count is ``n_nodes`` if given, else Poisson with mean
    ``density_per_km2 * area``.
    """
    rng = np.random.default_rng(seed)
    region = Region(Point(0.0, 0.0), radius_km)
    if n_nodes is None:
        n_nodes = int(rng.poisson(density_per_km2 * math.pi * radius_km ** 2))
    pos = _uniform_in_disk(rng, n_nodes, region.center, radius_km)
    child = int(rng.integers(0, 2 ** 63 - 1))
    sc = build_gaa_scenario(pos, region, child, **kw)
    return GAAScenario(sc.nodes, sc.pa_nodes, sc.region, int(seed) if np.ndim(seed) == 0 else 0)


class NodeFileError(ValueError):
    pass


def read_node_csv(path) -> list[tuple[int, float, float]]:
    """Parse an ``id,lat,lon`` file; errors name the offending line."""
    rows = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        if [h.strip().lower() for h in header] != ["id", "lat", "lon"]:
            raise NodeFileError(f"line 1: expected header 'id,lat,lon', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise NodeFileError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                nid, lat, lon = int(row[0]), float(row[1]), float(row[2])
            except ValueError as exc:
                raise NodeFileError(f"line {lineno}: {exc}") from None
            if not (math.isfinite(lat) and math.isfinite(lon)) or abs(lat) > 90 or abs(lon) > 180:
                raise NodeFileError(f"line {lineno}: coordinates out of range")
            if nid in seen:
                raise NodeFileError(f"line {lineno}: duplicate id {nid}")
            seen.add(nid)
            rows.append((nid, lat, lon))
    return rows


def load_gaa_nodes(csv_path, center_latlon: tuple[float, float], radius_km: float,
                   seed=0, params: RadioParams = RadioParams(),
                   demand_set: Iterable[int] = range(1, MAX_DEMAND + 1),
                   activity_range: tuple = (0.0, 4.0)) -> list[GAANode]:
    """Read hotspot locations and keep those within ``radius_km`` of the centre.

    Points are projected about the region centre, which becomes the origin.
    Activities are drawn from ``activity_range`` with ``seed``; availability is
    left full (see :func:`build_gaa_scenario` for PA-aware availability).
    """
    rows = read_node_csv(csv_path)
    lat0, lon0 = center_latlon
    rng = np.random.default_rng(seed)
    demand = frozenset(demand_set)
    out = []
    if not rows:
        return out
    x, y = project_latlon([r[1] for r in rows], [r[2] for r in rows], lat0, lon0)
    for (nid, _, _), xi, yi in zip(rows, x, y):
        if math.hypot(xi, yi) <= radius_km:
            out.append(GAANode(id=nid, pos=Point(float(xi), float(yi)), params=params,
                               demand_set=demand,
                               activity=float(rng.uniform(*activity_range))))
    return out


def scenario_from_csv(csv_path, center_latlon, radius_km: float, seed=0, **kw) -> GAAScenario:
    nodes = load_gaa_nodes(csv_path, center_latlon, radius_km, seed=seed)
    pos = np.array([[n.pos.x_km, n.pos.y_km] for n in nodes], dtype=float).reshape(-1, 2)
    return build_gaa_scenario(pos, Region(Point(0.0, 0.0), radius_km), seed,
                              ids=[n.id for n in nodes], **kw)


def scenario_to_json(sc) -> str:
    return json.dumps(sc.to_dict(), sort_keys=True, indent=1)


def scenario_from_json(text: str):
    d = json.loads(text)
    if d.get("tier") == "pa":
        return PAScenario.from_dict(d)
    return GAAScenario.from_dict(d)
