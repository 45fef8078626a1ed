"""Finite weighted metric spaces and the elementary metric/measure operations.

Every index set argument accepts any iterable of point indices; results that
are index sets come back as sorted ``numpy`` integer arrays.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "FiniteMetricSpace",
    "MeasuredSpace",
    "PointedMeasuredSpace",
    "MetricReport",
    "DensityProfile",
    "validate_metric",
    "as_index",
    "load_csv",
    "load_json",
    "load_space",
    "save_csv",
]

AHLFORS_RATIO = 2.0 ** 0.25


def as_index(A, n: int | None = None) -> np.ndarray:
    """Normalize an index collection to a sorted, duplicate-free int array."""
    arr = np.unique(np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=np.intp))
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise DomainError(f"index out of range for a space with {n} points")
    return arr


def _nonempty(A, n: int, what: str = "index set") -> np.ndarray:
    idx = as_index(A, n)
    if idx.size == 0:
        raise DomainError(f"{what} must be nonempty")
    return idx


@dataclass(frozen=True)
class MetricReport:
    ok: bool
    violations: list = field(default_factory=list)


def validate_metric(D, tol: float = 0.0) -> MetricReport:
    """Check zero diagonal, symmetry and the triangle inequality of ``D``.

    Violations are tagged tuples: ``("diagonal", (i,))``, ``("symmetry", (i, j))``
    with ``i < j``, ``("negative", (i, j))`` and ``("triangle", (i, j, k))`` meaning
    ``D[i,k] > D[i,j] + D[j,k] + tol`` (listed once per unordered ``{i, k}``).
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ShapeError(f"distance matrix must be square, got shape {D.shape}")
    n = D.shape[0]
    violations: list = []
    for i in np.flatnonzero(np.abs(np.diag(D)) > tol):
        violations.append(("diagonal", (int(i),)))
    for i, j in np.argwhere(D < -tol):
        violations.append(("negative", (int(i), int(j))))
    asym = np.abs(D - D.T) > tol
    for i, j in np.argwhere(np.triu(asym, 1)):
        violations.append(("symmetry", (int(i), int(j))))
    for j in range(n):
        # D[i,k] versus the detour through j, for all (i, k) at once
        bad = D > D[:, j, None] + D[None, j, :] + tol
        bad[j, :] = False
        bad[:, j] = False
        for i, k in np.argwhere(np.triu(bad, 1)):
            violations.append(("triangle", (int(i), j, int(k))))
    violations.sort(key=lambda v: (v[0], v[1]))
    return MetricReport(ok=not violations, violations=violations)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """``n`` points with a full symmetric distance matrix.

    ``coords`` is optional; spaces built from point clouds keep them so that
    coordinate-only operations (tube masses) can run.  ``tol`` is relative to
    the diameter.
    """

    D: np.ndarray
    labels: tuple | None = None
    coords: np.ndarray | None = None
    tol: float = 1e-9
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ShapeError(f"distance matrix must be square, got shape {D.shape}")
        if D.shape[0] == 0:
            raise DomainError("a metric space needs at least one point")
        if self.validate:
            diam = float(D.max()) if D.size else 0.0
            report = validate_metric(D, self.tol * max(diam, 1e-300))
            if not report.ok:
                head = report.violations[:5]
                raise DomainError(f"not a metric within tolerance: {head} ({len(report.violations)} total)")
        object.__setattr__(self, "D", _freeze(D))
        if self.coords is not None:
            coords = np.array(self.coords, dtype=float)
            if coords.ndim != 2 or coords.shape[0] != D.shape[0]:
                raise ShapeError("coords must have one row per point")
            object.__setattr__(self, "coords", _freeze(coords))
        if self.labels is not None:
            if len(self.labels) != D.shape[0]:
                raise ShapeError("labels must have one entry per point")
            object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_points(cls, points, labels=None) -> "FiniteMetricSpace":
        """Euclidean space on the rows of ``points`` (no triangle re-check needed)."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.shape[0] == 1 and np.ndim(points) == 1:
            P = P.T
        diff = P[:, None, :] - P[None, :, :]
        D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        return cls(D, labels=labels, coords=P, validate=False)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def diam(self) -> float:
        return float(self.D.max())

    def scaled(self, s: float) -> "FiniteMetricSpace":
        if s <= 0:
            raise DomainError("scale factor must be positive")
        coords = None if self.coords is None else self.coords * s
        return FiniteMetricSpace(self.D * s, self.labels, coords, self.tol, validate=False)

    def subspace(self, idx) -> "FiniteMetricSpace":
        idx = as_index(idx, self.n)
        coords = None if self.coords is None else self.coords[idx]
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return FiniteMetricSpace(self.D[np.ix_(idx, idx)], labels, coords, self.tol, validate=False)

    def dist_to_set(self, a: int, A) -> float:
        A = _nonempty(A, self.n)
        return float(self.D[a, A].min())

    def diameter(self, A) -> float:
        A = _nonempty(A, self.n)
        return float(self.D[np.ix_(A, A)].max())

    def neighborhood(self, A, eps: float) -> np.ndarray:
        """Closed ``eps``-neighbourhood of ``A``."""
        A = _nonempty(A, self.n)
        return np.flatnonzero(self.D[:, A].min(axis=1) <= eps)

    def hausdorff_distance(self, A, B) -> float:
        A = _nonempty(A, self.n)
        B = _nonempty(B, self.n)
        sub = self.D[np.ix_(A, B)]
        return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))

    def ball(self, x: int, r: float) -> np.ndarray:
        """Closed ball: ties at distance exactly ``r`` are members."""
        return np.flatnonzero(self.D[x] <= r)


@dataclass(frozen=True, eq=False)
class MeasuredSpace:
    """A finite metric space with nonnegative point masses (the H^1 surrogate)."""

    space: FiniteMetricSpace
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.shape != (self.space.n,):
            raise ShapeError(f"expected {self.space.n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("weights must be finite and nonnegative")
        object.__setattr__(self, "w", _freeze(w))
        object.__setattr__(self, "_support", _freeze(np.flatnonzero(w > 0)))

    @classmethod
    def from_points(cls, points, weights=None, labels=None) -> "MeasuredSpace":
        space = FiniteMetricSpace.from_points(points, labels=labels)
        if weights is None:
            weights = np.full(space.n, 1.0 / space.n)
        return cls(space, weights)

    @property
    def support(self) -> np.ndarray:
        return self._support

    @property
    def D(self) -> np.ndarray:
        return self.space.D

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def total_mass(self) -> float:
        return math.fsum(self.w)

    def ball(self, x: int, r: float) -> np.ndarray:
        return self.space.ball(x, r)

    def support_ball(self, x: int, r: float) -> np.ndarray:
        return self._support[self.space.D[x, self._support] <= r]

    def mass(self, A) -> float:
        """Compensated (``math.fsum``) sum of the weights of ``A``, in index order."""
        A = as_index(A, self.n)
        return math.fsum(self.w[A])

    def scaled(self, s: float) -> "MeasuredSpace":
        return MeasuredSpace(self.space.scaled(s), self.w)

    def density_profile(self, x: int, s: float, radii: Sequence[float]) -> "DensityProfile":
        """``mass(ball(x, r)) / (2r)**s`` for each radius.

        Nonpositive radii are dropped with a warning.
        """
        if s <= 0:
            raise DomainError("s must be positive")
        if self.w[x] <= 0:
            raise DomainError(f"point {x} is not in the support")
        entries = []
        for r in radii:
            if r <= 0:
                warnings.warn(f"radius {r} excluded from density profile (division by zero)", stacklevel=2)
                continue
            entries.append((float(r), self.mass(self.ball(x, r)) / (2.0 * r) ** s))
        if not entries:
            raise DomainError("no positive radii supplied")
        thetas = [t for _, t in entries]
        return DensityProfile(x, s, entries, min(thetas), max(thetas))

    def ahlfors_constant(self, r_min: float, r_max: float, s: float = 1.0) -> float:
        """Smallest ``C >= 1`` with ``r**s / C <= mass(ball(x, r)) <= C r**s``.

        Scanned over every support point and over the radii
        ``r_min * 2**(k/4)`` inside the window, with ``r_max`` always included.
        """
        if not (0 < r_min <= r_max):
            raise DomainError("need 0 < r_min <= r_max")
        supp = self.support
        if supp.size == 0:
            raise DomainError("empty support")
        radii = ahlfors_radii(r_min, r_max)
        C = 1.0
        sub = self.D[np.ix_(supp, supp)]
        order = np.argsort(sub, axis=1, kind="stable")
        sorted_d = np.take_along_axis(sub, order, axis=1)
        cum = np.cumsum(self.w[supp][order], axis=1)
        for r in radii:
            counts = (sorted_d <= r).sum(axis=1)
            masses = cum[np.arange(supp.size), counts - 1]
            if np.any(masses <= 0):
                return math.inf
            rs = r ** s
            C = max(C, float(np.max(masses / rs)), float(np.max(rs / masses)))
        return C


def ahlfors_radii(r_min: float, r_max: float) -> list[float]:
    radii = []
    k = 0
    while True:
        r = r_min * AHLFORS_RATIO ** k
        if r >= r_max * (1 - 1e-12):
            break
        radii.append(r)
        k += 1
    radii.append(float(r_max))
    return radii


@dataclass(frozen=True)
class DensityProfile:
    x: int
    s: float
    entries: list
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class PointedMeasuredSpace:
    base: MeasuredSpace
    x: int

    def __post_init__(self):
        if not (0 <= self.x < self.base.n) or self.base.w[self.x] <= 0:
            raise DomainError(f"basepoint {self.x} is not in the support")


# -- file formats -------------------------------------------------------------


def load_csv(path) -> MeasuredSpace:
    """Read ``x,y[,z...],w`` rows into a Euclidean measured space."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if len(header) < 2 or header[-1] != "w":
            raise DomainError(f"CSV header must be coordinate columns followed by 'w', got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise DomainError("CSV contains no points")
    arr = np.asarray(rows)
    return MeasuredSpace.from_points(arr[:, :-1], arr[:, -1])


def load_json(path) -> MeasuredSpace:
    """Read ``{"distance_matrix": [[...]], "weights": [...]}``."""
    data = json.loads(Path(path).read_text())
    try:
        D = data["distance_matrix"]
    except KeyError:
        raise DomainError("JSON input needs a 'distance_matrix' field") from None
    space = FiniteMetricSpace(D, labels=data.get("labels"))
    w = data.get("weights")
    if w is None:
        w = np.full(space.n, 1.0 / space.n)
    return MeasuredSpace(space, w)


def load_space(path) -> MeasuredSpace:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return load_json(path)
    return load_csv(path)


def save_csv(M: MeasuredSpace, path) -> None:
    coords = M.space.coords
    if coords is None:
        raise DomainError("only coordinate-backed spaces can be written as CSV")
    names = ["x", "y", "z"] + [f"x{k}" for k in range(3, coords.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names[: coords.shape[1]] + ["w"])
        for row, w in zip(coords, M.w):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
