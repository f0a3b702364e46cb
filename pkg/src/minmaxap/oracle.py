"""Independent brute-force verifiers.

Deliberately slow and simple, and deliberately sharing no algorithmic code
with the solver modules: a dense grid search for min-max values and a
randomized membership-only search for nearest feasible points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .errors import OracleBudgetError
from .geometry import PointTime

Array = np.ndarray


@dataclass(frozen=True)
class GridSpec:
    lower: Array
    upper: Array
    resolution: int

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("need lower < upper componentwise")
        if self.resolution < 3:
            raise ValueError("resolution must be at least 3")
        if lo.size > 3:
            raise ValueError("grid search supports at most 3 dimensions")


@dataclass(frozen=True)
class GridMinMaxResult:
    x: Array
    value: float
    spacing: float
    error_bound: float


def grid_minmax(
    functions: Sequence[Callable[[Array], float]], grid: GridSpec
) -> GridMinMaxResult:
    """argmin over grid nodes of max_i f_i, ties broken by lowest index.

    The reported error bound is grid spacing times a finite-difference
    Lipschitz estimate of the max function along the first axis.
    """
    if not functions:
        raise ValueError("functions must be nonempty")
    axes = [
        np.linspace(grid.lower[d], grid.upper[d], grid.resolution)
        for d in range(grid.lower.size)
    ]
    spacing = max(float(ax[1] - ax[0]) for ax in axes)
    best_val = np.inf
    best_x = None
    prev_val = None
    lipschitz = 0.0
    for node in itertools.product(*axes):
        x = np.array(node)
        val = max(float(f(x)) for f in functions)
        if prev_val is not None:
            lipschitz = max(lipschitz, abs(val - prev_val) / spacing)
        prev_val = val
        if val < best_val:
            best_val = val
            best_x = x
    bound = lipschitz * spacing * np.sqrt(grid.lower.size)
    return GridMinMaxResult(best_x, best_val, spacing, float(bound))


def _pull_toward(
    member: Callable[[Array], bool], q: Array, p: Array, iters: int = 40
) -> Array:
    """Farthest point on the segment [q, p] that stays feasible (q is)."""
    lo, hi = 0.0, 1.0
    if member(p):
        return p.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if member(q + mid * (p - q)):
            lo = mid
        else:
            hi = mid
    return q + lo * (p - q)


def numeric_projection(
    membership: Callable[[PointTime], bool],
    p: PointTime,
    max_evals: int = 60000,
    seed: int = 0,
    feasible_hint: PointTime | None = None,
) -> PointTime:
    """Approximate nearest feasible point from a membership oracle alone.

    Penalized local search: keep a feasible incumbent, propose random
    steps with an annealed step size, and pull every feasible candidate
    along the segment toward p by bisection.  Random restarts guard
    against bad initial feasible samples.
    """
    evals = 0

    def member(v: Array) -> bool:
        nonlocal evals
        evals += 1
        return bool(membership(PointTime.from_array(v)))

    pv = p.to_array()
    if member(pv):
        return p

    rng = np.random.default_rng(seed)

    def find_feasible() -> Array:
        if feasible_hint is not None:
            hv = feasible_hint.to_array()
            if member(hv):
                return hv
        for scale in np.geomspace(1e-3, 1e3, 25):
            for _ in range(40):
                cand = pv + scale * rng.standard_normal(pv.size)
                if member(cand):
                    return cand
                if evals >= max_evals:
                    raise OracleBudgetError(
                        "no feasible point found within budget", evals=evals
                    )
        raise OracleBudgetError("no feasible point found", evals=evals)

    best = None
    restarts = 2 if feasible_hint is None else 1
    for restart in range(restarts):
        try:
            q = find_feasible()
        except OracleBudgetError:
            if best is None:
                raise
            break
        q = _pull_toward(member, q, pv)
        step = max(float(np.linalg.norm(q - pv)), 1e-3)
        while step > 1e-8:
            improved = 0
            for _ in range(25):
                if evals >= max_evals:
                    raise OracleBudgetError(
                        "projection search budget exhausted",
                        best=PointTime.from_array(q if best is None else best),
                        evals=evals,
                    )
                d = rng.standard_normal(pv.size)
                d /= np.linalg.norm(d)
                cand = q + step * d
                if not member(cand):
                    continue
                cand = _pull_toward(member, cand, pv)
                if np.linalg.norm(cand - pv) < np.linalg.norm(q - pv):
                    q = cand
                    improved += 1
            step *= 0.5 if improved else 0.35
        if best is None or np.linalg.norm(q - pv) < np.linalg.norm(best - pv):
            best = q
    return PointTime.from_array(best)
