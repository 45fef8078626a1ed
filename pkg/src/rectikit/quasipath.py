"""Quasi-path connectivity: certificates, class membership and path transfer.

A delta-quasi-path from ``a`` to ``b`` is a chain of points with every hop at
most ``delta * d(a, b)``; locality asks that the chain stays inside
``ball(a, R * d(a, b))``.  :func:`quasi_path` always returns a certificate:
either such a chain, or a separating decomposition of the search ball whose
two blocks are further apart than ``delta * d(a, b)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .metric import FiniteMetricSpace, MeasuredSpace, as_index
from .distances import pointed_hausdorff


@dataclass(frozen=True)
class QuasiPath:
    nodes: tuple
    a: int
    b: int
    delta: float
    R: float

    def check(self, space: FiniteMetricSpace) -> bool:
        D = space.D
        d = D[self.a, self.b]
        nodes = np.asarray(self.nodes, dtype=np.intp)
        if nodes[0] != self.a or nodes[-1] != self.b:
            return False
        if np.any(D[nodes[:-1], nodes[1:]] > self.delta * d):
            return False
        return bool(np.all(D[self.a, nodes] <= self.R * d))

    def as_dict(self) -> dict:
        return {"nodes": [int(v) for v in self.nodes], "a": self.a, "b": self.b, "delta": self.delta, "R": self.R}


@dataclass(frozen=True)
class SeparatingDecomposition:
    A: tuple
    B: tuple
    gap: float
    a: int
    b: int
    delta: float
    R: float

    def check(self, M: MeasuredSpace) -> bool:
        D = M.D
        d = D[self.a, self.b]
        region = set(M.support_ball(self.a, self.R * d).tolist())
        A, B = set(self.A), set(self.B)
        if A & B or (A | B) != region or self.a not in A or self.b not in B:
            return False
        gap = D[np.ix_(list(self.A), list(self.B))].min()
        return bool(gap == self.gap and gap > self.delta * d)

    def as_dict(self) -> dict:
        return {
            "A": [int(v) for v in self.A],
            "B": [int(v) for v in self.B],
            "gap": self.gap,
            "a": self.a,
            "b": self.b,
            "delta": self.delta,
            "R": self.R,
        }


@dataclass(frozen=True)
class QuasiPathCertificate:
    path: QuasiPath | None = None
    split: SeparatingDecomposition | None = None

    def __post_init__(self):
        if (self.path is None) == (self.split is None):
            raise ValueError("a certificate holds exactly one of path / split")

    @property
    def connected(self) -> bool:
        return self.path is not None

    def to_json(self) -> str:
        if self.path is not None:
            return json.dumps({"variant": "path", **self.path.as_dict()})
        return json.dumps({"variant": "split", **self.split.as_dict()})


def _bfs(adj: np.ndarray, src: int) -> np.ndarray:
    """Level-synchronous BFS; each node's parent is the lowest-index node of the previous level."""
    parent = np.full(adj.shape[0], -1, dtype=np.intp)
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[src] = True
    parent[src] = src
    frontier = np.array([src], dtype=np.intp)
    while frontier.size:
        hits = adj[frontier] & ~seen  # frontier is sorted ascending
        new = np.flatnonzero(hits.any(axis=0))
        if not new.size:
            break
        parent[new] = frontier[hits[:, new].argmax(axis=0)]
        seen[new] = True
        frontier = new
    return parent


def quasi_path(M: MeasuredSpace, a: int, b: int, delta: float, R: float) -> QuasiPathCertificate:
    """Shortest-hop delta-quasi-path from ``a`` to ``b`` inside ``ball(a, R d(a,b))``, or a split."""
    if a == b:
        raise DomainError("quasi-paths need distinct endpoints")
    if M.w[a] <= 0 or M.w[b] <= 0:
        raise DomainError("both endpoints must lie in the support")
    if delta <= 0 or R <= 0:
        raise DomainError("delta and R must be positive")
    D = M.D
    d = D[a, b]
    if d <= 0:
        raise DomainError("endpoints at distance zero")
    nodes = M.support_ball(a, R * d)
    if b not in nodes:
        raise DomainError(f"R={R} < 1 puts b outside ball(a, R d(a,b)); no certificate exists")
    thr = delta * d
    adj = D[np.ix_(nodes, nodes)] <= thr
    ia = int(np.searchsorted(nodes, a))
    ib = int(np.searchsorted(nodes, b))
    parent = _bfs(adj, ia)
    if parent[ib] >= 0:
        chain = [ib]
        while chain[-1] != ia:
            chain.append(int(parent[chain[-1]]))
        path = tuple(int(nodes[k]) for k in reversed(chain))
        return QuasiPathCertificate(path=QuasiPath(path, a, b, delta, R))
    reach = parent >= 0
    A = nodes[reach]
    B = nodes[~reach]
    gap = float(D[np.ix_(A, B)].min())
    return QuasiPathCertificate(split=SeparatingDecomposition(tuple(map(int, A)), tuple(map(int, B)), gap, a, b, delta, R))


def bottleneck_levels(D: np.ndarray, x: int, nodes: np.ndarray, delta: float, R: float) -> np.ndarray:
    """For each node ``y``, the least ``t`` such that ``y`` is joined to ``x`` by hops ``<= delta t``
    through nodes of ``ball(x, R t)``.

    The graphs grow with ``t``, so ``x`` and ``y`` are delta-quasi-path
    connected in ``ball(x, R d(x,y))`` iff the level of ``y`` is at most ``d(x,y)``
    (up to rounding at exact ties).  Minimax Dijkstra on the dense graph.
    """
    sub = D[np.ix_(nodes, nodes)]
    act = np.maximum(sub / delta, np.maximum.outer(D[x, nodes], D[x, nodes]) / R)
    ix = int(np.searchsorted(nodes, x))
    level = np.full(nodes.size, np.inf)
    level[ix] = 0.0
    done = np.zeros(nodes.size, dtype=bool)
    for _ in range(nodes.size):
        cand = np.where(done, np.inf, level)
        v = int(cand.argmin())
        if not np.isfinite(cand[v]):
            break
        done[v] = True
        level = np.minimum(level, np.maximum(level[v], act[v]))
    return level


@dataclass(frozen=True)
class MembershipResult:
    ok: bool
    witness: tuple | None = None
    certificate: QuasiPathCertificate | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_Qp(M: MeasuredSpace, x: int, delta: float, R: float, targets=None) -> MembershipResult:
    """Does every target ``y`` admit a delta-quasi-path from ``x`` inside ``ball(x, R d(x,y))``?

    ``targets`` defaults to the whole support.  The first failing ``y`` (by
    index) is returned with its separating decomposition.
    """
    if M.w[x] <= 0:
        raise DomainError(f"basepoint {x} is not in the support")
    supp = M.support
    ys = supp if targets is None else as_index(targets, M.n)
    ys = ys[ys != x]
    if not ys.size:
        return MembershipResult(True)
    D = M.D
    level = np.full(M.n, np.inf)
    level[supp] = bottleneck_levels(D, x, supp, delta, R)
    dxy = D[x, ys]
    # clear passes skip the exact search; anything near a tie is settled by BFS
    doubtful = ys[~(level[ys] < dxy * (1 - 1e-9))]
    for y in doubtful:
        cert = quasi_path(M, x, int(y), delta, R)
        if not cert.connected:
            return MembershipResult(False, (x, int(y)), cert)
    return MembershipResult(True)


def is_Q(M: MeasuredSpace, delta: float, R: float) -> MembershipResult:
    """Quasi-path connectivity for every ordered pair of support points."""
    for x in M.support:
        res = is_Qp(M, int(x), delta, R)
        if not res.ok:
            return res
    return MembershipResult(True)


def transfer_quasi_path(space: FiniteMetricSpace, path: QuasiPath, E, F, eps: float) -> QuasiPath:
    """Move a quasi-path in ``E`` onto a set ``F`` that is pointed-Hausdorff close to ``E``.

    Interior nodes are replaced by their nearest ``F`` points (ties by index);
    the result is a ``(delta + 2 eps)``-quasi-path in ``F`` plus the endpoints,
    inside ``ball(a, (R + eps) d(a, b))``.
    """
    a, b = path.a, path.b
    D = space.D
    d = D[a, b]
    E = as_index(E, space.n)
    F = as_index(F, space.n)
    if not set(path.nodes) <= set(E.tolist()):
        raise PreconditionError("path nodes must lie in E")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    eps_cap = min(1.0 / ((path.R + 1) * d * d), 1.0)
    if not eps < eps_cap:
        raise PreconditionError(f"eps={eps} violates eps < min(1/((R+1) d(a,b)^2), 1) = {eps_cap}")
    dh = pointed_hausdorff(space, a, E, F)
    if not dh < eps * d:
        raise PreconditionError(f"pointed Hausdorff distance {dh} is not below eps*d(a,b) = {eps * d}")
    new = [a]
    for v in path.nodes[1:-1]:
        k = int(F[np.argmin(D[v, F])])
        if not D[v, k] < eps * d:
            raise PreconditionError(f"node {v} has no F-point within eps*d(a,b)")
        new.append(k)
    new.append(b)
    out = QuasiPath(tuple(new), a, b, path.delta + 2 * eps, path.R + eps)
    if not out.check(space):
        raise PreconditionError("transferred path fails its step or locality bound (metric tolerance?)")
    return out


def transfer_via_mass(M: MeasuredSpace, path: QuasiPath, K, mu, eps: float, delta: float) -> QuasiPath:
    """Move a quasi-path onto a set ``K`` that misses little mass near the path.

    Requires ``mu(ball(x_n, delta d)) > eps`` at every node and
    ``mu(ball(b, (R + 1) d) minus K) < eps``; every node is replaced by its
    nearest ``K`` point within ``delta d``, giving a ``3 delta``-quasi-path.
    """
    a, b = path.a, path.b
    D = M.D
    d = D[a, b]
    K = as_index(K, M.n)
    mu = np.asarray(mu, dtype=float)
    if path.delta > delta:
        raise PreconditionError(f"path step parameter {path.delta} exceeds delta={delta}")
    if a not in K or b not in K:
        raise PreconditionError("K must contain both endpoints")
    for n_, v in enumerate(path.nodes):
        local = M.space.ball(v, delta * d)
        if not mu[local].sum() > eps:
            raise PreconditionError(f"node {n_} (point {v}) has mass {mu[local].sum()} <= eps={eps} within delta*d")
    outside = np.setdiff1d(M.space.ball(b, (path.R + 1) * d), K)
    miss = float(mu[outside].sum())
    if not miss < eps:
        raise PreconditionError(f"mass {miss} of ball(b, (R+1) d) outside K is not below eps={eps}")
    new = []
    for n_, v in enumerate(path.nodes):
        dk = D[v, K]
        j = int(np.argmin(dk))
        if not dk[j] <= delta * d:
            raise PreconditionError(f"node {n_} (point {v}) has no K-point within delta*d")
        new.append(int(K[j]))
    out = QuasiPath(tuple(new), a, b, 3 * delta, path.R + delta)
    if not out.check(M.space):
        raise PreconditionError("transferred path fails its step or locality bound (metric tolerance?)")
    return out
