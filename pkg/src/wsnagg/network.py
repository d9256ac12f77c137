"""Physical layer: node placement, clustering, cluster-agent election,
routes, and first-order radio energy accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels, seeding
from .config import EnergyModelParams, SimConfig
from .errors import DeadClusterError, EmptyNetworkError, EnergyDomainError, InvalidClusterCountError

MEMBER = "member"
AGENT = "cluster-agent"
BASE_STATION = "base-station"

KMEANS_MAX_ITER = 100


@dataclass
class NodeState:
    id: int
    x: float
    y: float
    energy: float
    role: str = MEMBER
    alive: bool = True
    cluster: Optional[int] = None
    seq: int = 0
    nk_list: list = field(default_factory=list)
    valid: bool = True

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Cluster:
    cluster_id: int
    members: tuple[int, ...]
    agent: Optional[int] = None
    attribute: str = ""


@dataclass
class Topology:
    nodes: list[NodeState]
    bs: NodeState
    radio_range: float
    area: tuple[float, float]
    # (N+1) x (N+1); the last row/column is the base station
    dist: np.ndarray = field(repr=False)

    @property
    def bs_index(self) -> int:
        return len(self.nodes)

    @property
    def adjacency(self) -> np.ndarray:
        adj = self.dist <= self.radio_range
        np.fill_diagonal(adj, False)
        return adj

    @property
    def edges(self) -> set[tuple[int, int]]:
        """Undirected links as (low, high) index pairs; the BS has index N."""
        i, j = np.nonzero(np.triu(self.adjacency))
        return set(zip(i.tolist(), j.tolist()))

    def alive_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.alive]

    def dist_to_bs(self, node_id: int) -> float:
        return float(self.dist[node_id, self.bs_index])

    def total_energy(self) -> float:
        return math.fsum(n.energy for n in self.nodes)


def distance(p1: Sequence[float], p2: Sequence[float]) -> float:
    return math.sqrt(sum((a - b) * (a - b) for a, b in zip(p1, p2)))


def _positions(nodes: Sequence[NodeState]) -> np.ndarray:
    return np.array([[n.x, n.y] for n in nodes], dtype=np.float64).reshape(-1, 2)


def build_network(cfg: SimConfig, seed: Optional[int] = None) -> Topology:
    if cfg.node_count < 1:
        raise EmptyNetworkError("network needs at least one sensor node")
    seed = cfg.seed if seed is None else seed
    rng = seeding.stream(seed, seeding.TOPOLOGY)
    w, h = cfg.area_width, cfg.area_height
    xy = rng.uniform(0.0, 1.0, size=(cfg.node_count, 2)) * np.array([w, h])
    nodes = [NodeState(i, float(x), float(y), cfg.initial_energy) for i, (x, y) in enumerate(xy)]
    bx, by = cfg.bs_position
    bs = NodeState(cfg.node_count, float(bx), float(by), math.inf, role=BASE_STATION)
    dist = kernels.pairwise_distances(_positions(nodes + [bs]))
    return Topology(nodes, bs, cfg.radio_range, (w, h), dist)


def _farthest_point_init(d: np.ndarray, k: int) -> list[int]:
    chosen = [0]
    nearest = d[0].copy()
    for _ in range(1, k):
        # argmax keeps the first maximum, i.e. the lowest id
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, d[nxt])
    return chosen


def cluster_nodes(topo: Topology, k: int, seed: Optional[int] = None) -> list[Cluster]:
    """Partition alive sensors into ``k`` clusters by position.

    Deterministic k-means: farthest-point seeding starting at the lowest id,
    at most ``KMEANS_MAX_ITER`` Lloyd iterations, stopping once assignments
    are stable.  ``seed`` is accepted for interface symmetry and unused.
    """
    ids = topo.alive_ids()
    if not 1 <= k <= len(ids):
        raise InvalidClusterCountError(f"k={k} outside [1, {len(ids)}] alive sensors")
    xy = _positions([topo.nodes[i] for i in ids])
    d = topo.dist[np.ix_(ids, ids)]
    centers = xy[_farthest_point_init(d, k)].copy()
    labels = None
    for _ in range(KMEANS_MAX_ITER):
        new = kernels.nearest_center(xy, centers)
        _fill_empty(new, xy, centers, k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = xy[labels == c].mean(axis=0)
    groups = [tuple(ids[i] for i in np.flatnonzero(labels == c)) for c in range(k)]
    groups.sort(key=lambda g: g[0])
    clusters = [Cluster(cid, g, attribute=f"c{cid}") for cid, g in enumerate(groups)]
    for c in clusters:
        for m in c.members:
            topo.nodes[m].cluster = c.cluster_id
    return clusters


def _fill_empty(labels: np.ndarray, xy: np.ndarray, centers: np.ndarray, k: int) -> None:
    # only reachable with coincident positions; move the worst-fit point over
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        resid = np.sum((xy - centers[labels]) ** 2, axis=1)
        resid[counts[labels] <= 1] = -1.0
        i = int(np.argmax(resid))
        counts[labels[i]] -= 1
        labels[i] = c
        counts[c] = 1
        centers[c] = xy[i]


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def agent_scores(cluster: Cluster, topo: Topology, weights=(1 / 3, 1 / 3, 1 / 3)) -> dict[int, float]:
    alive = [m for m in cluster.members if topo.nodes[m].alive]
    if not alive:
        return {}
    energy = np.array([topo.nodes[m].energy for m in alive])
    to_bs = np.array([topo.dist_to_bs(m) for m in alive])
    sub = topo.dist[np.ix_(alive, alive)]
    neighbors = ((sub <= topo.radio_range).sum(axis=1) - 1).astype(np.float64)
    # closer is better; a constant column contributes 0 like the others
    closeness = 1.0 - _minmax(to_bs) if to_bs.max() > to_bs.min() else np.zeros_like(to_bs)
    w1, w2, w3 = weights
    score = w1 * _minmax(energy) + w2 * closeness + w3 * _minmax(neighbors)
    return dict(zip(alive, score.tolist()))


def select_cluster_agent(cluster: Cluster, topo: Topology, weights=(1 / 3, 1 / 3, 1 / 3)) -> int:
    scores = agent_scores(cluster, topo, weights)
    if not scores:
        raise DeadClusterError(f"cluster {cluster.cluster_id} has no alive member")
    best = max(scores.values())
    return min(m for m, s in scores.items() if s == best)


def tx_energy(params: EnergyModelParams, length: float, v: float) -> float:
    if length < 0 or v < 0:
        raise EnergyDomainError("packet length and distance must be non-negative")
    if v < params.v0:
        return params.em * length + params.eps_fs * v * v * length
    return params.em * length + params.eps_amp * v**4 * length


def rx_energy(params: EnergyModelParams, length: float) -> float:
    if length < 0:
        raise EnergyDomainError("packet length must be non-negative")
    return params.em * length


def aggregation_energy(params: EnergyModelParams, length: float, signals: int) -> float:
    if length < 0 or signals < 0:
        raise EnergyDomainError("length and signal count must be non-negative")
    return params.eda * length * signals


def deduct_energy(node: NodeState, amount: float) -> float:
    """Draw ``amount`` joules from ``node``; returns what was actually drawn.

    The draw is clamped at the residual; a node drained to zero dies.
    """
    if amount < 0:
        raise EnergyDomainError("cannot deduct a negative amount")
    if node.role == BASE_STATION or not node.alive:
        return 0.0
    drawn = min(amount, node.energy)
    node.energy -= drawn
    if node.energy <= 0.0:
        node.energy = 0.0
        node.alive = False
    return drawn


def generate_routes(topo: Topology, clusters: Sequence[Cluster]) -> dict[int, list[int]]:
    bs = topo.bs.id
    routes = {}
    for c in clusters:
        for m in c.members:
            routes[m] = [m, bs] if m == c.agent else [m, c.agent, bs]
    return routes


def dump_topology(topo: Topology) -> str:
    lines = ["# id x y energy role cluster"]
    for n in topo.nodes + [topo.bs]:
        cluster = "-" if n.cluster is None else str(n.cluster)
        energy = "inf" if math.isinf(n.energy) else f"{n.energy:.9g}"
        lines.append(f"{n.id} {n.x:.6f} {n.y:.6f} {energy} {n.role} {cluster}")
    return "\n".join(lines) + "\n"
