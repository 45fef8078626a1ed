"""Deterministic reference clouds with length-calibrated weights.

Rectifiable kinds (segment, circle, Lipschitz graph, spiral) put ``m`` samples
at uniform parameter values and give each the weight ``arclength / m``.  The
four-corner Cantor cloud is the standard purely 1-unrectifiable reference.
Pseudo-random choices use ``numpy.random.default_rng`` (PCG64) seeded by the
caller, and coordinates are rounded to 1e-12 before distances are formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .metric import MeasuredSpace

QUADRATURE_CELLS = 10_000
KINDS = ("segment", "circle", "lipschitz_graph", "spiral", "four_corner_cantor", "union")


def _cloud(points, arclength: float) -> MeasuredSpace:
    P = np.round(np.asarray(points, dtype=float), 12) + 0.0
    m = P.shape[0]
    return MeasuredSpace.from_points(P, np.full(m, arclength / m))


def _check_m(m: int) -> None:
    if int(m) != m or m < 2:
        raise DomainError(f"need at least 2 samples, got {m}")


def gen_segment(m: int) -> MeasuredSpace:
    """Unit segment on the x-axis, endpoints included."""
    _check_m(m)
    x = np.arange(m) / (m - 1)
    return _cloud(np.column_stack([x, np.zeros(m)]), 1.0)


def gen_circle(m: int) -> MeasuredSpace:
    """Circle of circumference 1."""
    _check_m(m)
    theta = 2.0 * np.pi * np.arange(m) / m
    rad = 1.0 / (2.0 * np.pi)
    return _cloud(np.column_stack([rad * np.cos(theta), rad * np.sin(theta)]), 1.0)


def _bump_slopes(L: float, seed: int, n_bumps: int = 8) -> np.ndarray:
    """Slope on each quadrature cell of a seeded tent-function sum, clipped to ``[-L, L]``."""
    rng = np.random.default_rng(seed)
    mids = (np.arange(QUADRATURE_CELLS) + 0.5) / QUADRATURE_CELLS
    slope = np.zeros(QUADRATURE_CELLS)
    for _ in range(n_bumps):
        c = rng.uniform(0.1, 0.9)
        half = rng.uniform(0.03, 0.15)
        s = rng.uniform(-2.0, 2.0) * L
        slope += np.where((mids >= c - half) & (mids < c), s, 0.0)
        slope -= np.where((mids >= c) & (mids < c + half), s, 0.0)
    return np.clip(slope, -L, L) + 0.0


def gen_lipschitz_graph(m: int, L: float, seed: int = 0) -> MeasuredSpace:
    """Graph of a piecewise-linear function on [0, 1] with slope bounded by ``L``."""
    _check_m(m)
    if L < 0:
        raise DomainError("Lipschitz constant must be nonnegative")
    slope = _bump_slopes(L, seed)
    nodes = np.arange(QUADRATURE_CELLS + 1) / QUADRATURE_CELLS
    heights = np.concatenate([[0.0], np.cumsum(slope) / QUADRATURE_CELLS])
    x = np.arange(m) / (m - 1)
    y = np.interp(x, nodes, heights) + 0.0
    arclength = math.fsum(np.sqrt(1.0 + slope * slope)) / QUADRATURE_CELLS
    return _cloud(np.column_stack([x, y]), arclength)


def spiral_arclength(decay: float, turns: float = 2.0) -> float:
    """Closed form for the logarithmic spiral used by :func:`gen_spiral`."""
    T = 2.0 * np.pi * turns
    if decay == 0:
        return T
    return math.sqrt(1.0 + decay * decay) / decay * (1.0 - math.exp(-decay * T))


def gen_spiral(m: int, decay: float, turns: float = 2.0) -> MeasuredSpace:
    """Logarithmic spiral ``r = exp(-decay t)``, ``t`` in ``[0, 2 pi turns]``."""
    _check_m(m)
    if decay < 0:
        raise DomainError("decay must be nonnegative")
    T = 2.0 * np.pi * turns
    t = T * np.arange(m) / (m - 1)
    r = np.exp(-decay * t)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    tq = np.linspace(0.0, T, QUADRATURE_CELLS + 1)
    speed = np.exp(-decay * tq) * math.sqrt(1.0 + decay * decay)
    arclength = float(np.trapezoid(speed, tq))
    return _cloud(pts, arclength)


def gen_four_corner_cantor(depth: int) -> MeasuredSpace:
    """Centres of the ``4**depth`` corner cells of the iterated 1/4 scheme on the unit square.

    Points are ordered so that ``index // 4**(depth - 1)`` is the top-level
    quadrant (lower-left, lower-right, upper-left, upper-right).
    """
    if int(depth) != depth or not 1 <= depth <= 7:
        raise DomainError(f"depth must be an integer in [1, 7], got {depth}")
    corners = np.zeros((1, 2))
    side = 1.0
    offsets = np.array([[0, 0], [3, 0], [0, 3], [3, 3]], dtype=float) / 4.0
    for _ in range(depth):
        corners = (corners[:, None, :] + side * offsets[None, :, :]).reshape(-1, 2)
        side /= 4.0
    pts = corners + side / 2.0
    return _cloud(pts, 1.0)


def gen_union(clouds, offsets=None) -> MeasuredSpace:
    """Disjoint union of coordinate-backed clouds, each translated by its offset."""
    clouds = list(clouds)
    if not clouds:
        raise DomainError("need at least one cloud")
    if len(clouds) == 1 and offsets is None:
        return clouds[0]
    dim = max(c.space.coords.shape[1] for c in clouds)
    if offsets is None:
        offsets = [np.zeros(dim)] * len(clouds)
    if len(offsets) != len(clouds):
        raise DomainError("one offset per cloud")
    parts, weights = [], []
    for c, off in zip(clouds, offsets):
        if c.space.coords is None:
            raise DomainError("gen_union needs coordinate-backed clouds")
        P = np.zeros((c.n, dim))
        P[:, : c.space.coords.shape[1]] = c.space.coords
        off = np.zeros(dim) + np.pad(np.asarray(off, float), (0, dim - len(off)))
        parts.append(P + off)
        weights.append(c.w)
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            diff = parts[i][:, None, :] - parts[j][None, :, :]
            if np.sqrt((diff ** 2).sum(-1)).min() <= 0:
                raise DomainError(f"clouds {i} and {j} overlap after translation")
    P = np.round(np.vstack(parts), 12) + 0.0
    return MeasuredSpace.from_points(P, np.concatenate(weights))


@dataclass(frozen=True)
class CorpusSpec:
    """A serializable recipe for one corpus cloud."""

    kind: str
    m: int = 400
    depth: int = 4
    L: float = 0.5
    decay: float = 0.1
    seed: int = 0
    parts: tuple = field(default=())
    offsets: tuple = field(default=())

    def build(self) -> MeasuredSpace:
        if self.kind == "segment":
            return gen_segment(self.m)
        if self.kind == "circle":
            return gen_circle(self.m)
        if self.kind == "lipschitz_graph":
            return gen_lipschitz_graph(self.m, self.L, self.seed)
        if self.kind == "spiral":
            return gen_spiral(self.m, self.decay)
        if self.kind == "four_corner_cantor":
            return gen_four_corner_cantor(self.depth)
        if self.kind == "union":
            return gen_union([p.build() for p in self.parts], list(self.offsets) or None)
        raise DomainError(f"unknown corpus kind {self.kind!r}; expected one of {KINDS}")
