"""Measured distances between subsets and measures of one finite space.

``lipschitz_distance`` is the Lipschitz-potential distance: the supremum of
``sum f (mu - nu)`` over ``[-1, 1]``-valued ``L``-Lipschitz potentials vanishing
outside ``ball(x, r)``.  It is solved exactly as a linear program (HiGHS via
``scipy.optimize.linprog``); the returned potential is re-checked against
every constraint and the reported value is the dual objective, cross-checked
against the potential's primal value.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import DomainError, SolverError
from .metric import FiniteMetricSpace, PointedMeasuredSpace, _nonempty

GH_CAP = 7
LP_RESIDUAL_TOL = 1e-9


def pointed_hausdorff(space: FiniteMetricSpace, z: int, A, B) -> float:
    """Pointed Hausdorff distance of ``A`` and ``B`` seen from ``z``.

    The defining condition at ``eps`` (``A`` inside ``ball(z, 1/eps)`` lies in
    the closed ``eps``-neighbourhood of ``B`` and vice versa) is monotone in
    ``eps``.  A point ``a`` stops obstructing it once ``eps >= dist(a, B)``
    or ``eps > 1/d(z, a)``, so the infimum is the largest per-point threshold.
    """
    A = _nonempty(A, space.n)
    B = _nonempty(B, space.n)
    sub = space.D[np.ix_(A, B)]
    thresholds = []
    for pts, gaps in ((A, sub.min(axis=1)), (B, sub.min(axis=0))):
        dz = space.D[z, pts]
        with np.errstate(divide="ignore"):
            inv = np.where(dz > 0, 1.0 / dz, np.inf)
        thresholds.append(np.minimum(gaps, inv).max())
    return float(max(thresholds))


@dataclass(frozen=True)
class LipschitzPotential:
    f: np.ndarray
    L: float
    x: int
    r: float

    def check(self, space: FiniteMetricSpace, tol: float = LP_RESIDUAL_TOL) -> bool:
        f = self.f
        if np.any(np.abs(f) > 1 + tol):
            return False
        if np.any(np.abs(f[space.D[self.x] > self.r]) > tol):
            return False
        gap = np.abs(f[:, None] - f[None, :]) - self.L * space.D
        return bool(gap.max() <= tol)

    def to_json(self) -> str:
        return json.dumps({"f": self.f.tolist(), "L": self.L, "x": self.x, "r": self.r})


def lipschitz_distance(space: FiniteMetricSpace, mu, nu, L: float, r: float, x: int):
    """Return ``(value, potential)`` for the Lipschitz-potential distance."""
    if L <= 0 or r <= 0:
        raise DomainError("L and r must be positive")
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != (space.n,) or nu.shape != (space.n,):
        raise DomainError("measures must have one weight per point")
    diff = mu - nu
    inside = np.flatnonzero(space.D[x] <= r)
    outside = np.flatnonzero(space.D[x] > r)
    f = np.zeros(space.n)
    c = diff[inside]
    if not np.any(c):
        return 0.0, LipschitzPotential(f, L, x, r)

    # |f_i| <= min(1, L dist(i, outside)) since f vanishes off the ball
    cap = np.ones(inside.size)
    if outside.size:
        cap = np.minimum(cap, L * space.D[np.ix_(inside, outside)].min(axis=1))
    sub = space.D[np.ix_(inside, inside)]
    iu, ju = np.triu_indices(inside.size, 1)
    lim = L * sub[iu, ju]
    keep = lim < cap[iu] + cap[ju]  # otherwise implied by the box
    iu, ju, lim = iu[keep], ju[keep], lim[keep]
    k = iu.size
    if k:
        rows = np.repeat(np.arange(2 * k), 2)
        cols = np.column_stack([np.concatenate([iu, ju]), np.concatenate([ju, iu])]).ravel()
        vals = np.tile([1.0, -1.0], 2 * k)
        A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * k, inside.size))
        b_ub = np.concatenate([lim, lim])
    else:
        A_ub, b_ub = None, None
    res = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=np.column_stack([-cap, cap]), method="highs")
    if res.status != 0:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}")
    f[inside] = np.clip(res.x, -cap, cap)
    pot = LipschitzPotential(f, L, x, r)
    if not pot.check(space):
        worst = (np.abs(f[:, None] - f[None, :]) - L * space.D).max()
        raise SolverError(f"LP potential violates constraints (worst residual {worst:.3e})")
    primal = math.fsum(f[inside] * c)
    # report the dual objective: it is a sum of multipliers times the constraint
    # data (L d, caps), so closed-form cases such as min(L d, 2) come out exact
    terms = list(res.lower.marginals * -cap) + list(res.upper.marginals * cap)
    if k:
        terms += list(res.ineqlin.marginals * b_ub)
    value = -math.fsum(terms)
    if abs(value - primal) > LP_RESIDUAL_TOL * max(1.0, abs(primal)):
        raise SolverError(f"primal {primal!r} and dual {value!r} objectives disagree")
    return max(value, 0.0), pot


def star_distance(space: FiniteMetricSpace, mu, nu, x: int, tol: float = 1e-6, return_trace: bool = False):
    """Infimum of ``eps`` in ``(0, 1/2)`` with ``F^{1/eps, 1/eps}_x(mu, nu) < eps``.

    The condition is monotone in ``eps`` (larger ``eps`` shrinks both ``L``
    and ``r``), so bisection on it is exact up to ``tol``.  Returns 1/2 when no
    admissible ``eps`` exists.  With ``return_trace`` the list of evaluated
    ``(eps, value, holds)`` triples is returned as well.
    """
    trace = []

    def holds(eps: float) -> bool:
        val, _ = lipschitz_distance(space, mu, nu, 1.0 / eps, 1.0 / eps, x)
        ok = val < eps
        trace.append((eps, val, ok))
        return ok

    hi = 0.5 - tol / 2
    if not holds(hi):
        out = 0.5
    elif holds(tol):
        out = tol
    else:
        lo = tol
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if holds(mid):
                hi = mid
            else:
                lo = mid
        out = hi
    return (out, trace) if return_trace else out


def pmgh_in_common_space(A: PointedMeasuredSpace, B: PointedMeasuredSpace, tol: float = 1e-6) -> float:
    """Upper bound for the pointed measured GH distance using the shared ambient space."""
    if A.base.space is not B.base.space and not np.array_equal(A.base.D, B.base.D):
        raise DomainError("both measured spaces must live in one ambient metric space")
    if A.x != B.x:
        raise DomainError(f"basepoint mismatch: {A.x} != {B.x}")
    space = A.base.space
    z = A.x
    dh = pointed_hausdorff(space, z, A.base.support, B.base.support)
    return dh + star_distance(space, A.base.w, B.base.w, z, tol=tol)


# -- exhaustive Gromov-Hausdorff oracle ---------------------------------------


def _pairs_feasible(compat: np.ndarray, n: int, m: int, forced: int | None) -> bool:
    """Is there a set of pairwise-compatible (a, b) pairs covering every a and every b?

    Pair ``p`` encodes ``(p // m, p % m)``.
    """
    alive = compat.diagonal().copy()
    a_of = np.arange(n * m) // m
    b_of = np.arange(n * m) % m
    # prune pairs that some other row/column cannot accompany
    changed = True
    while changed:
        changed = False
        sub = compat & alive[None, :]
        for p in np.flatnonzero(alive):
            row = sub[p]
            if not (np.bincount(a_of[row], minlength=n).all() and np.bincount(b_of[row], minlength=m).all()):
                alive[p] = False
                changed = True
    if forced is not None and not alive[forced]:
        return False

    def search(allowed: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray) -> bool:
        best_opts = None
        for a in np.flatnonzero(~cov_a):
            opts = np.flatnonzero(allowed[a * m:(a + 1) * m]) + a * m
            if best_opts is None or opts.size < best_opts.size:
                best_opts = opts
        for b in np.flatnonzero(~cov_b):
            opts = np.flatnonzero(allowed[b::m]) * m + b
            if best_opts is None or opts.size < best_opts.size:
                best_opts = opts
        if best_opts is None:
            return True
        for p in best_opts:
            ca, cb = cov_a.copy(), cov_b.copy()
            ca[a_of[p]] = True
            cb[b_of[p]] = True
            if search(allowed & compat[p], ca, cb):
                return True
        return False

    cov_a = np.zeros(n, bool)
    cov_b = np.zeros(m, bool)
    allowed = alive.copy()
    if forced is not None:
        cov_a[a_of[forced]] = True
        cov_b[b_of[forced]] = True
        allowed &= compat[forced]
    return search(allowed, cov_a, cov_b)


def gh_exact_small(DA, DB, pointed: tuple[int, int] | None = None) -> float:
    """Exact Gromov-Hausdorff distance between two spaces of at most 7 points.

    Half the least distortion over correspondences, found by bisecting over
    the finite set of candidate distortions with a backtracking feasibility
    search.  ``pointed=(za, zb)`` forces the basepoints to correspond.
    """
    DA = np.asarray(DA.D if isinstance(DA, FiniteMetricSpace) else DA, dtype=float)
    DB = np.asarray(DB.D if isinstance(DB, FiniteMetricSpace) else DB, dtype=float)
    n, m = DA.shape[0], DB.shape[0]
    if n > GH_CAP or m > GH_CAP:
        raise DomainError(f"exhaustive GH search is capped at {GH_CAP} points per side (got {n} and {m})")
    if n == 0 or m == 0:
        raise DomainError("spaces must be nonempty")
    # distortion between pairs (a, b) and (a', b'): |DA[a, a'] - DB[b, b']|
    dist = np.abs(DA[:, None, :, None] - DB[None, :, None, :]).reshape(n * m, n * m)
    cands = np.unique(dist)
    forced = None if pointed is None else pointed[0] * m + pointed[1]
    lo, hi = 0, cands.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _pairs_feasible(dist <= cands[mid], n, m, forced):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo]) / 2.0


def correspondence_distortion(DA, DB, pairs) -> float:
    """Distortion of an explicit correspondence given as ``(i, j)`` pairs."""
    pairs = list(pairs)
    return max(abs(DA[i][k] - DB[j][l]) for (i, j), (k, l) in itertools.product(pairs, pairs))
