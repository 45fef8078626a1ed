"""Blowup views, per-point scale profiles and the rectifiable/unrectifiable classifier.

A blowup view at ``(x, r)`` rescales distances by ``1/r`` and weights by
``1/mass(ball(x, r))``.  Profiles evaluate finitely many such views along a
geometric ladder of radii; they are samples of the blowup family, not limits.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distances import gh_exact_small
from .errors import DomainError
from .metric import FiniteMetricSpace, MeasuredSpace, PointedMeasuredSpace
from .quasipath import MembershipResult, is_Qp

RECTIFIABLE = "rectifiable-like"
UNRECTIFIABLE = "unrectifiable-like"
INDETERMINATE = "indeterminate"

RESOLUTION = 10.0  # a scale r resolves x when ball(x, r/RESOLUTION) holds another support point


@dataclass(frozen=True, eq=False)
class BlowupView:
    parent: PointedMeasuredSpace
    r: float
    K: float
    members: np.ndarray  # parent indices, ascending
    view: PointedMeasuredSpace  # rescaled space on the members

    @property
    def x(self) -> int:
        return self.parent.x

    @property
    def D(self) -> np.ndarray:
        return self.view.base.D

    @property
    def w(self) -> np.ndarray:
        return self.view.base.w

    def unit_ball(self) -> np.ndarray:
        """Local indices (into ``members``) of the rescaled closed unit ball at the basepoint."""
        return np.flatnonzero(self.D[self.view.x] <= 1.0)

    def unit_ball_mass(self) -> float:
        return self.view.base.mass(self.unit_ball())


def blowup(P: PointedMeasuredSpace, r: float, K: float = 1.0) -> BlowupView:
    """View of ``P`` at scale ``r``, keeping points within ``K r`` of the basepoint."""
    if r <= 0:
        raise DomainError("scale must be positive")
    if K < 1:
        raise DomainError("view radius multiplier K must be at least 1")
    M = P.base
    x = P.x
    norm = M.mass(M.ball(x, r))
    if norm <= 0:
        raise DomainError(f"ball({x}, {r}) has zero mass")
    members = np.flatnonzero(M.D[x] <= K * r)
    D = M.D[np.ix_(members, members)] / r
    coords = None if M.space.coords is None else M.space.coords[members] / r
    space = FiniteMetricSpace(D, coords=coords, validate=False)
    w = M.w[members] / norm
    local_x = int(np.searchsorted(members, x))
    return BlowupView(P, float(r), float(K), members, PointedMeasuredSpace(MeasuredSpace(space, w), local_x))


def is_resolvable(M: MeasuredSpace, x: int, r: float) -> bool:
    return M.support_ball(x, r / RESOLUTION).size >= 2


def default_ladder(M: MeasuredSpace, r0: float | None = None, lam: float = 0.5, max_scales: int = 40) -> list[float]:
    """``r0 * lam**k`` (``r0`` defaults to ``diam / 4``) down to the finest scale any point resolves."""
    if not 0 < lam < 1:
        raise DomainError("ladder ratio must lie in (0, 1)")
    supp = M.support
    if supp.size < 2:
        return []
    sub = M.D[np.ix_(supp, supp)] + np.diag(np.full(supp.size, np.inf))
    finest = RESOLUTION * float(sub.min(axis=1).min())
    r = M.space.diameter(supp) / 4 if r0 is None else float(r0)
    ladder = []
    while r >= finest and len(ladder) < max_scales:
        ladder.append(r)
        r *= lam
    return ladder


def _check_ladder(ladder) -> list[float]:
    ladder = [float(r) for r in ladder]
    if any(r <= 0 for r in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise DomainError("ladder must be positive and strictly decreasing")
    return ladder


@dataclass
class ScaleRecord:
    r: float
    resolvable: bool
    connected: bool | None = None
    witness: object = None  # SeparatingDecomposition in view indices when disconnected
    flatness: float | None = None


def connectivity_targets(view: BlowupView, delta: float) -> np.ndarray:
    """Support points of the unit ball whose allowed hop ``delta d(x, y)`` is at least the
    resolution ``1/RESOLUTION`` (view units); closer targets are below sampling resolution."""
    V = view.view.base
    d = V.D[view.view.x, V.support]
    keep = (d <= 1.0) & (delta * d >= 1.0 / RESOLUTION)
    return V.support[keep]


def connectivity_at(P: PointedMeasuredSpace, r: float, delta: float, R: float, K: float | None = None) -> ScaleRecord:
    M = P.base
    if not is_resolvable(M, P.x, r):
        return ScaleRecord(r, False)
    view = blowup(P, r, R + 1 if K is None else K)
    res: MembershipResult = is_Qp(view.view.base, view.view.x, delta, R, targets=connectivity_targets(view, delta))
    return ScaleRecord(r, True, res.ok, None if res.ok else res.certificate.split)


def connectivity_profile(P: PointedMeasuredSpace, ladder, delta: float = 1 / 6, R: float = 2.0, K: float | None = None) -> list[ScaleRecord]:
    """Per-scale quasi-path connectivity of the blowup views at the basepoint.

    Scales below resolution are reported with ``resolvable=False`` and
    ``connected=None`` rather than as disconnected.
    """
    return [connectivity_at(P, r, delta, R, K) for r in _check_ladder(ladder)]


def farthest_point_subsample(D: np.ndarray, start: int, m: int) -> list[int]:
    """Greedy farthest-point net of size ``min(m, n)`` starting at ``start`` (ties by index)."""
    n = D.shape[0]
    chosen = [start]
    dist = D[start].copy()
    while len(chosen) < min(m, n):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, D[nxt])
    return chosen


def reference_grid(m: int, model: str = "line") -> np.ndarray:
    """Distance matrix of ``m`` equally spaced points on [-1, 1] (``"line"``) or [0, 1] (``"half-line"``)."""
    lo = {"line": -1.0, "half-line": 0.0}[model]
    g = np.linspace(lo, 1.0, m)
    return np.abs(g[:, None] - g[None, :])


def _reference_base(m: int, model: str) -> int:
    return m // 2 if model == "line" else 0


FLAT_MODELS = ("line", "half-line", "either")


def flatness_at(P: PointedMeasuredSpace, r: float, m: int = 5, model: str = "line") -> float | None:
    """Pointed GH distance between a farthest-point subsample of the unit-ball view and
    the ``m``-point reference grid; ``None`` for degenerate views.

    ``model="line"`` compares with the grid on [-1, 1] pointed at 0,
    ``"half-line"`` with the grid on [0, 1] pointed at 0 (what a curve looks
    like near its endpoint), and ``"either"`` takes the smaller of the two.
    """
    if m % 2 == 0 or not 3 <= m <= 7:
        raise DomainError("flatness subsample size must be odd and between 3 and 7")
    if model not in FLAT_MODELS:
        raise DomainError(f"unknown flat model {model!r}")
    view = blowup(P, r, 1.0)
    V = view.view.base
    unit = V.support[V.D[view.view.x, V.support] <= 1.0]
    if unit.size < 2:
        return None
    local = V.D[np.ix_(unit, unit)]
    start = int(np.searchsorted(unit, view.view.x))
    pick = farthest_point_subsample(local, start, m)
    sample = local[np.ix_(pick, pick)]
    models = ("line", "half-line") if model == "either" else (model,)
    return min(gh_exact_small(sample, reference_grid(m, k), pointed=(0, _reference_base(m, k))) for k in models)


def flatness_profile(P: PointedMeasuredSpace, ladder, m: int = 5, model: str = "line") -> list[float | None]:
    return [flatness_at(P, r, m, model) for r in _check_ladder(ladder)]


def tube_mass(M: MeasuredSpace, polyline, r: float) -> float:
    """Fraction of the total mass within distance ``r`` of a polyline (ambient coordinates)."""
    coords = M.space.coords
    if coords is None:
        raise DomainError("tube_mass needs a coordinate-backed space (distance-matrix-only input is unsupported)")
    V = np.atleast_2d(np.asarray(polyline, dtype=float))
    if V.size == 0:
        raise DomainError("polyline must be nonempty")
    if V.shape[1] != coords.shape[1]:
        raise DomainError("polyline dimension does not match the point coordinates")
    best = np.sqrt(((coords[:, None, :] - V[None, :, :]) ** 2).sum(-1)).min(axis=1)
    for p, q in zip(V[:-1], V[1:]):
        seg = q - p
        L2 = float(seg @ seg)
        if L2 == 0:
            continue
        t = np.clip((coords - p) @ seg / L2, 0.0, 1.0)
        proj = p + t[:, None] * seg
        best = np.minimum(best, np.sqrt(((coords - proj) ** 2).sum(-1)))
    return math.fsum(M.w[best <= r]) / M.total_mass


def polyline_length(polyline) -> float:
    V = np.atleast_2d(np.asarray(polyline, dtype=float))
    return float(np.sqrt(((V[1:] - V[:-1]) ** 2).sum(-1)).sum())


@dataclass
class TangentProfile:
    x: int
    ladder: list
    records: list  # ScaleRecord per scale

    def resolvable(self) -> list:
        return [rec for rec in self.records if rec.resolvable]


@dataclass(frozen=True)
class ClassifierParams:
    delta: float = 1 / 6
    R: float = 2.0
    r0: float | None = None  # None: diam / 4
    lam: float = 0.5
    flat_threshold: float = 0.25
    flat_fraction: float = 0.8
    disconnect_fraction: float = 0.5
    m: int = 5
    flat_model: str = "either"

    def validate(self) -> None:
        if self.delta <= 0 or self.R < 1:
            raise DomainError("need delta > 0 and R >= 1")
        if not 0 < self.lam < 1:
            raise DomainError("ladder ratio must lie in (0, 1)")
        if not (0 <= self.flat_fraction <= 1 and 0 <= self.disconnect_fraction <= 1):
            raise DomainError("fractions must lie in [0, 1]")


@dataclass
class RectifiabilityVerdict:
    labels: list
    ladder: list
    params: dict
    profiles: list = field(default_factory=list, repr=False)

    @property
    def fractions(self) -> dict:
        n = len(self.labels)
        return {k: self.labels.count(k) / n if n else 0.0 for k in (RECTIFIABLE, UNRECTIFIABLE, INDETERMINATE)}

    def to_json(self) -> str:
        return json.dumps({"params": self.params, "ladder": self.ladder, "labels": self.labels, "fractions": self.fractions})

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["point", "scale", "resolvable", "connected", "flatness"])
            for prof in self.profiles:
                for rec in prof.records:
                    out.writerow([prof.x, repr(rec.r), rec.resolvable, rec.connected, rec.flatness])


def profile_point(M: MeasuredSpace, x: int, ladder, params: ClassifierParams) -> TangentProfile:
    P = PointedMeasuredSpace(M, x)
    records = []
    for r in ladder:
        rec = connectivity_at(P, r, params.delta, params.R)
        if rec.resolvable:
            rec.flatness = flatness_at(P, r, params.m, params.flat_model)
        records.append(rec)
    return TangentProfile(x, list(ladder), records)


def label_profile(prof: TangentProfile, params: ClassifierParams) -> str:
    res = prof.resolvable()
    if not res:
        return INDETERMINATE
    n = len(res)
    flat = sum(1 for rec in res if rec.flatness is not None and rec.flatness <= params.flat_threshold)
    broken = sum(1 for rec in res if not rec.connected)
    if broken == 0 and flat >= params.flat_fraction * n:
        return RECTIFIABLE
    if broken >= params.disconnect_fraction * n:
        return UNRECTIFIABLE
    return INDETERMINATE


def classify(M: MeasuredSpace, params: ClassifierParams | None = None, ladder=None) -> RectifiabilityVerdict:
    """Label each support point from its connectivity and flatness profiles.

    rectifiable-like: connected at every resolvable scale and flat on at least
    ``flat_fraction`` of them; unrectifiable-like: disconnected on at least
    ``disconnect_fraction`` of them; otherwise (or with no resolvable scale)
    indeterminate.
    """
    params = params or ClassifierParams()
    params.validate()
    ladder = default_ladder(M, params.r0, params.lam) if ladder is None else _check_ladder(ladder)
    profiles = [profile_point(M, int(x), ladder, params) for x in M.support]
    labels = [label_profile(p, params) for p in profiles]
    return RectifiabilityVerdict(labels, list(ladder), asdict(params), profiles)
