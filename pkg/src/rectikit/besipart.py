"""Besicovitch partitions, R-disjoint families and the cluster/bridge extraction loop.

The extraction works on a *ball graph*: cover balls ``(centre, r_hat)`` and
bridging balls.  A bridging ball belongs to a partition ``(p1, p2, omega)``;
its centre would be the midpoint of ``p1 p2``, which a finite space need not
contain, so it is represented by its two anchors.  Distances from the virtual
midpoint ``m`` are replaced by the triangle-inequality lower bound
``d(q, m) >= min_t d(q, t) - omega / 2`` (``t`` an anchor); this only ever adds
edges to the graph, so each round merges the base cluster with at least one
other cluster and the loop terminates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .covering import UniformCover, greedy_separated_cover
from .errors import DomainError, PreconditionError
from .metric import FiniteMetricSpace, MeasuredSpace, as_index


@dataclass(frozen=True)
class BesicovitchPartition:
    E1: tuple
    E2: tuple
    omega: float
    p1: int
    p2: int

    def check(self, space: FiniteMetricSpace, target) -> bool:
        E1, E2 = set(self.E1), set(self.E2)
        if not E1 or not E2 or E1 & E2 or (E1 | E2) != set(as_index(target).tolist()):
            return False
        if self.p1 not in E1 or self.p2 not in E2:
            return False
        gap = space.D[np.ix_(list(self.E1), list(self.E2))].min()
        return bool(0 < self.omega == gap == space.D[self.p1, self.p2])

    def as_dict(self) -> dict:
        return {"E1": list(self.E1), "E2": list(self.E2), "omega": self.omega, "p1": self.p1, "p2": self.p2}


@dataclass
class PartitionFamily:
    partitions: list
    R: float
    trace: list = field(default_factory=list)
    diagnostic: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "R": self.R,
                "partitions": [p.as_dict() for p in self.partitions],
                "trace": self.trace,
                "diagnostic": self.diagnostic,
            }
        )


def min_gap_pair(space: FiniteMetricSpace, E1, E2) -> tuple[int, int, float]:
    """Closest pair between two disjoint sets, ties broken lexicographically."""
    E1 = as_index(E1, space.n)
    E2 = as_index(E2, space.n)
    if not E1.size or not E2.size:
        raise DomainError("both sets must be nonempty")
    if np.intersect1d(E1, E2).size:
        raise DomainError("sets must be disjoint")
    sub = space.D[np.ix_(E1, E2)]
    i, j = np.unravel_index(int(np.argmin(sub)), sub.shape)  # first minimum in row-major order
    return int(E1[i]), int(E2[j]), float(sub[i, j])


def check_R_disjoint(space: FiniteMetricSpace, P: BesicovitchPartition, Q: BesicovitchPartition, R: float) -> bool:
    """Closed balls ``B(p_i, R omega)`` and ``B(q_j, R omega')`` pairwise disjoint."""
    lim = R * P.omega + R * Q.omega
    return all(space.D[p, q] > lim for p in (P.p1, P.p2) for q in (Q.p1, Q.p2))


# -- ball graph ---------------------------------------------------------------


@dataclass(frozen=True)
class _Bridge:
    p1: int
    p2: int
    omega: float
    radius: float


def _anchor_dist(D: np.ndarray, br: _Bridge, q) -> np.ndarray:
    """Lower bound on the distance from the bridge's virtual midpoint to ``q``."""
    return np.maximum(0.0, np.minimum(D[br.p1, q], D[br.p2, q]) - br.omega / 2)


def _bridge_gap(D: np.ndarray, s: _Bridge, t: _Bridge) -> float:
    pts_s, pts_t = [s.p1, s.p2], [t.p1, t.p2]
    return max(0.0, float(D[np.ix_(pts_s, pts_t)].min()) - s.omega / 2 - t.omega / 2)


def _ball_graph(D: np.ndarray, centers: np.ndarray, r: float, bridges: list, fatten: float) -> np.ndarray:
    nb = centers.size
    k = nb + len(bridges)
    adj = np.zeros((k, k), dtype=bool)
    adj[:nb, :nb] = D[np.ix_(centers, centers)] <= 2 * r + 2 * fatten
    for i, br in enumerate(bridges):
        row = _anchor_dist(D, br, centers) <= br.radius + r + 2 * fatten
        adj[nb + i, :nb] = row
        adj[:nb, nb + i] = row
        for j in range(i + 1):
            other = bridges[j]
            hit = j == i or _bridge_gap(D, br, other) <= br.radius + other.radius + 2 * fatten
            adj[nb + i, nb + j] = adj[nb + j, nb + i] = hit
    return adj


def _components(adj: np.ndarray) -> np.ndarray:
    _, labels = connected_components(csr_matrix(adj), directed=False)
    # relabel by first occurrence so labels are deterministic
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels]


def _node_covers(D: np.ndarray, centers: np.ndarray, r: float, bridges: list, pts: np.ndarray) -> np.ndarray:
    """Boolean (nodes x pts) membership matrix of points in balls."""
    rows = [D[np.ix_(centers, pts)] <= r]
    for br in bridges:
        rows.append((_anchor_dist(D, br, pts) <= br.radius)[None, :])
    return np.vstack(rows)


def cluster_components(M: MeasuredSpace, cover: UniformCover, fatten: float, seeds, bridges=()) -> tuple[list, list]:
    """Clusters of the (fattened) ball graph and, per cluster, whether it is a base cluster.

    Node ids are cover-ball positions, followed by bridge positions.  Two
    cover balls are joined when their centres are within ``2 r + 2 fatten``;
    a cluster is a base cluster when one of its balls contains a seed.
    """
    D = M.D
    centers = np.asarray(cover.centers, dtype=np.intp)
    bridges = list(bridges)
    seeds = as_index(seeds, M.n)
    labels = _components(_ball_graph(D, centers, cover.r, bridges, fatten))
    holds = _node_covers(D, centers, cover.r, bridges, seeds).any(axis=1) if seeds.size else np.zeros(labels.size, bool)
    comps, base = [], []
    for c in range(labels.max() + 1):
        members = np.flatnonzero(labels == c)
        comps.append([int(v) for v in members])
        base.append(bool(holds[members].any()))
    return comps, base


def default_seeds(M: MeasuredSpace, delta: float, R: float) -> np.ndarray:
    """Greedy net of the support at scale ``delta / (3 (2R + 1))``."""
    return np.asarray(greedy_separated_cover(M, 2 * delta / (3 * (2 * R + 1))).centers, dtype=np.intp)


def extract_partitions(M: MeasuredSpace, seeds, delta: float, R: float, r_hat: float) -> PartitionFamily:
    """Grow base clusters by bridging balls, recording one partition per bridge.

    Each round splits the support into the points covered by base clusters
    (``E1``) and the rest (``E2``), records the closest pair between them, and
    adds a bridging ball of radius ``(2R + 1) omega / 2``.  The loop stops once
    every point is covered by a base cluster.  Bridging balls are then sorted
    by decreasing radius and thinned greedily to a pairwise-disjoint subfamily;
    the partitions whose bridge survives form the result.  ``delta`` and
    ``r_hat`` are absolute lengths and ``r_hat <= delta / (3 (2R + 1))`` is
    required.
    """
    if R < 1:
        raise DomainError("R must be at least 1")
    if delta <= 0 or r_hat <= 0:
        raise DomainError("delta and r_hat must be positive")
    bound = delta / (3 * (2 * R + 1))
    if r_hat > bound * (1 + 1e-12):
        raise PreconditionError(f"r_hat={r_hat} exceeds delta/(3(2R+1)) = {bound}")
    seeds = default_seeds(M, delta, R) if seeds is None else as_index(seeds, M.n)
    if not seeds.size:
        raise DomainError("seed list is empty")
    if np.any(M.w[seeds] <= 0):
        raise DomainError("seeds must lie in the support")
    D = M.D
    supp = M.support
    cover = greedy_separated_cover(M, r_hat)
    centers = np.asarray(cover.centers, dtype=np.intp)
    fatten = r_hat / 4
    bridges: list[_Bridge] = []
    raw: list[BesicovitchPartition] = []
    trace: list[dict] = []
    cap = centers.size
    diagnostic = ""
    for rnd in range(cap + 1):
        comps, base = cluster_components(M, cover, fatten, seeds, bridges)
        base_nodes = [v for c, b in zip(comps, base) if b for v in c]
        covers = _node_covers(D, centers, r_hat, bridges, supp)
        in_base = covers[base_nodes].any(axis=0)
        F1, F2 = supp[in_base], supp[~in_base]
        if not F2.size:
            if rnd == 0:
                diagnostic = "cover already connected to the seeds: no partitions"
            break
        if rnd == cap:
            raise RuntimeError(f"extraction did not terminate within {cap} rounds")
        p1, p2, omega = min_gap_pair(M.space, F1, F2)
        if omega <= 0:
            raise DomainError(f"points {p1} and {p2} are at distance zero")
        radius = (2 * R + 1) * omega / 2
        bridges.append(_Bridge(p1, p2, omega, radius))
        raw.append(BesicovitchPartition(tuple(map(int, F1)), tuple(map(int, F2)), omega, p1, p2))
        trace.append(
            {
                "round": rnd,
                "components": comps,
                "base": base,
                "pair": [p1, p2],
                "omega": omega,
                "bridge_radius": radius,
                "bridge_model": "anchor lower bound: min_t d(q, p_t) - omega/2",
            }
        )
    order = sorted(range(len(bridges)), key=lambda k: (-bridges[k].radius, k))
    kept: list[int] = []
    for k in order:
        if all(_bridge_gap(D, bridges[k], bridges[j]) > bridges[k].radius + bridges[j].radius for j in kept):
            kept.append(k)
    trace.append({"thinning_order": order, "kept": sorted(kept)})
    return PartitionFamily([raw[k] for k in sorted(kept)], R, trace, diagnostic)


@dataclass(frozen=True)
class FamilyReport:
    P1: bool
    P2: bool
    sum_omega: float
    ratio: float
    threshold: float


def verify_family(fam: PartitionFamily, M: MeasuredSpace, delta: float, R: float, eps: float = 0.5) -> FamilyReport:
    """P1 (pairwise R-disjoint) and P2 (every omega below delta) exactly; the
    cumulative-size ratio ``sum omega * 3(2R+1) / mass`` is reported against ``1 - eps``."""
    parts = fam.partitions
    P1 = all(
        check_R_disjoint(M.space, parts[i], parts[j], R) for i in range(len(parts)) for j in range(i + 1, len(parts))
    )
    P2 = all(p.omega < delta for p in parts)
    s = math.fsum(p.omega for p in parts)
    ratio = s * 3 * (2 * R + 1) / M.total_mass
    return FamilyReport(P1, P2, s, ratio, 1 - eps)
