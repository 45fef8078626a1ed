"""Uniform covers with separated centres and bounded overlap."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .metric import MeasuredSpace


@dataclass(frozen=True)
class UniformCover:
    centers: tuple
    r: float

    def to_json(self) -> str:
        return json.dumps({"centers": list(self.centers), "r": self.r})

    @classmethod
    def from_json(cls, text: str) -> "UniformCover":
        data = json.loads(text)
        return cls(tuple(int(c) for c in data["centers"]), float(data["r"]))


def greedy_separated_cover(M: MeasuredSpace, r: float) -> UniformCover:
    """Cover the support by radius-``r`` balls whose centres are more than ``r/2`` apart.

    Support points are scanned in ascending index order; a point becomes a
    centre unless it already lies in the closed ``r/2``-ball of a retained centre.
    """
    if r <= 0:
        raise DomainError("cover radius must be positive")
    supp = M.support
    if supp.size == 0:
        raise DomainError("empty support")
    D = M.D
    centers: list[int] = []
    covered = np.zeros(M.n, dtype=bool)
    for i in supp:
        if covered[i]:
            continue
        centers.append(int(i))
        covered |= D[i] <= r / 2
    return UniformCover(tuple(centers), float(r))


def overlap_counts(M: MeasuredSpace, cover: UniformCover) -> np.ndarray:
    """For each ball, the number of cover balls meeting it (itself included).

    Balls meet when their centres are at most ``2r`` apart.
    """
    c = np.asarray(cover.centers, dtype=np.intp)
    return (M.D[np.ix_(c, c)] <= 2 * cover.r).sum(axis=1)


def is_covering(M: MeasuredSpace, cover: UniformCover) -> bool:
    c = np.asarray(cover.centers, dtype=np.intp)
    return bool(np.all(M.D[np.ix_(M.support, c)].min(axis=1) <= cover.r))


def is_separated(M: MeasuredSpace, cover: UniformCover) -> bool:
    c = np.asarray(cover.centers, dtype=np.intp)
    sub = M.D[np.ix_(c, c)] + np.diag(np.full(c.size, np.inf))
    return bool(c.size < 2 or sub.min() >= cover.r / 2)


@dataclass(frozen=True)
class TReport:
    T1: bool
    T2: bool
    T2_margin: float
    T3: bool
    T3_margin: float
    sum_diam: float
    T2_bound: float
    max_overlap: int
    T3_bound: float

    @property
    def ok(self) -> bool:
        return self.T1 and self.T2 and self.T3


def verify_T_properties(cover: UniformCover, M: MeasuredSpace, C: float, n: int = 1) -> TReport:
    """Check uniform radius (T1), total diameter (T2) and overlap (T3) bounds.

    Margins are ``bound / actual`` (infinite when the actual value is 0).
    """
    if not C >= 1:
        raise DomainError(f"Ahlfors constant must be >= 1, got {C}")
    T1 = bool(np.isfinite(cover.r) and cover.r > 0 and len(cover.centers) > 0)
    sum_diam = 2.0 * cover.r * len(cover.centers)
    T2_bound = 8.0 ** n * C * M.total_mass
    counts = overlap_counts(M, cover)
    max_overlap = int(counts.max()) if counts.size else 0
    T3_bound = 12.0 ** n * C * C
    return TReport(
        T1=T1,
        T2=sum_diam <= T2_bound,
        T2_margin=T2_bound / sum_diam if sum_diam else math.inf,
        T3=max_overlap <= T3_bound,
        T3_margin=T3_bound / max_overlap if max_overlap else math.inf,
        sum_diam=sum_diam,
        T2_bound=T2_bound,
        max_overlap=max_overlap,
        T3_bound=T3_bound,
    )
