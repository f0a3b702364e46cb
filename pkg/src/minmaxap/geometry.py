"""Core point/set types and exact orthogonal projections.

All sets live in R^{n+1}: n spatial coordinates plus one scalar height
(time, or squared time after a coordinate transform).  Every set exposes
membership with a tolerance and an orthogonal projection; projections are
closed-form wherever one exists, with a certified numeric fallback for
generic convex-function epigraphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatchError, ProjectionError

Array = np.ndarray

#: default tolerance for closed-form projections (pure arithmetic)
CLOSED_FORM_TOL = 1e-10
#: default tolerance for the numeric epigraph projection
EPIGRAPH_TOL = 1e-8


@dataclass(frozen=True)
class PointTime:
    """A point (x, t): spatial coordinates plus a scalar height."""

    x: Array
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or x.size < 1:
            raise ValueError("x must be a 1-D vector with at least one component")
        if not (np.all(np.isfinite(x)) and np.isfinite(self.t)):
            raise ValueError("PointTime components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self) -> int:
        return int(self.x.size)

    def to_array(self) -> Array:
        return np.append(self.x, self.t)

    @staticmethod
    def from_array(v: Array) -> "PointTime":
        v = np.asarray(v, dtype=float)
        return PointTime(v[:-1], float(v[-1]))

    def distance_to(self, other: "PointTime") -> float:
        if other.dim != self.dim:
            raise DimensionMismatchError(
                f"points have dims {self.dim} and {other.dim}"
            )
        return float(np.linalg.norm(self.to_array() - other.to_array()))


class ProjectableSet:
    """A closed convex subset of R^{n+1} with membership and projection."""

    dim: int

    def _check(self, p: PointTime) -> None:
        if p.dim != self.dim:
            raise DimensionMismatchError(
                f"point has dim {p.dim}, set expects {self.dim}"
            )

    def violation(self, p: PointTime) -> float:
        """How far p violates the defining inequality (<= 0 means inside)."""
        raise NotImplementedError

    def contains(self, p: PointTime, tol: float = 0.0) -> bool:
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        self._check(p)
        return self.violation(p) <= tol

    def project(self, p: PointTime) -> PointTime:
        raise NotImplementedError


@dataclass(frozen=True)
class HorizontalHyperplane(ProjectableSet):
    """The plane {(x, t) | t = t_min}."""

    t_min: float
    dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.t_min):
            raise ValueError("t_min must be finite")

    def _check(self, p: PointTime) -> None:
        # a horizontal plane is well-defined for any spatial dimension
        pass

    def violation(self, p: PointTime) -> float:
        return abs(p.t - self.t_min)

    def project(self, p: PointTime) -> PointTime:
        self._check(p)
        return PointTime(p.x, self.t_min)


@dataclass(frozen=True)
class SecondOrderCone(ProjectableSet):
    """The cone {(x, t) : slope * ||x - apex.x|| <= t - apex.t}, slope > 0."""

    apex: PointTime
    slope: float

    def __post_init__(self):
        if self.slope <= 0:
            raise ValueError("slope must be positive")

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.apex.dim

    def violation(self, p: PointTime) -> float:
        self._check(p)
        r = float(np.linalg.norm(p.x - self.apex.x))
        return self.slope * r - (p.t - self.apex.t)

    def project(self, p: PointTime) -> PointTime:
        self._check(p)
        a = self.slope
        y = p.x - self.apex.x
        th = p.t - self.apex.t
        r = float(np.linalg.norm(y))
        if a * r <= th:
            return p
        if r <= -a * th:
            return self.apex
        # here r > 0; nearest boundary point along the ray through y
        rho = (r + a * th) / (1.0 + a * a)
        return PointTime(self.apex.x + rho * (y / r), self.apex.t + a * rho)


@dataclass(frozen=True)
class Halfspace(ProjectableSet):
    """The halfspace {v in R^{n+1} : normal . v <= offset} (normal unit-norm)."""

    normal: Array
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        nrm = float(np.linalg.norm(n))
        if nrm == 0 or not np.all(np.isfinite(n)):
            raise ValueError("normal must be a finite nonzero vector")
        object.__setattr__(self, "normal", n / nrm)
        object.__setattr__(self, "offset", float(self.offset) / nrm)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return int(self.normal.size) - 1

    def violation(self, p: PointTime) -> float:
        self._check(p)
        return float(self.normal @ p.to_array() - self.offset)

    def project(self, p: PointTime) -> PointTime:
        self._check(p)
        v = p.to_array()
        excess = float(self.normal @ v - self.offset)
        # boundary points re-enter with a few ulps of excess; treat them as
        # inside so projection is exactly idempotent
        if excess <= 1e-13 * (1.0 + abs(self.offset) + float(np.linalg.norm(v))):
            return p
        return PointTime.from_array(v - excess * self.normal)


@dataclass(frozen=True)
class Ball(ProjectableSet):
    """The closed ball {v in R^{n+1} : ||v - center|| <= radius}."""

    center: Array
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return int(self.center.size) - 1

    def violation(self, p: PointTime) -> float:
        self._check(p)
        return float(np.linalg.norm(p.to_array() - self.center)) - self.radius

    def project(self, p: PointTime) -> PointTime:
        self._check(p)
        v = p.to_array()
        d = v - self.center
        nrm = float(np.linalg.norm(d))
        # same ulp guard as Halfspace: keep boundary points fixed exactly
        if nrm <= self.radius * (1.0 + 1e-13) + 1e-13:
            return p
        return PointTime.from_array(self.center + (self.radius / nrm) * d)


class ConvexEpigraph(ProjectableSet):
    """Epigraph {(x, t) : f(x) <= t} of a convex function given by oracles.

    Parameters
    ----------
    value : callable mapping an n-vector to f(x).
    subgrad : callable mapping an n-vector to one subgradient of f at x.
    dim : spatial dimension n.
    domain_box : optional (lower, upper) axis-aligned bounds on x.
    tol : accuracy target for the numeric projection.
    """

    def __init__(
        self,
        value: Callable[[Array], float],
        subgrad: Callable[[Array], Array],
        dim: int,
        domain_box: Optional[Tuple[Array, Array]] = None,
        tol: float = EPIGRAPH_TOL,
    ):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.value = value
        self.subgrad = subgrad
        self.dim = dim
        self.domain_box = domain_box
        self.tol = tol

    def violation(self, p: PointTime) -> float:
        self._check(p)
        return float(self.value(p.x)) - p.t

    def _bounds(self):
        if self.domain_box is None:
            return None
        lo, hi = self.domain_box
        return list(zip(np.asarray(lo, float), np.asarray(hi, float)))

    def _prox(self, px: Array, lam: float, z0: Array) -> Array:
        """argmin_z 0.5*||z - px||^2 + lam*f(z), warm-started at z0.

        A warm start sitting exactly on a kink of f can trap the line
        search, so the solve is repeated from px and the lower of the two
        objectives wins.
        """

        def obj(z):
            d = z - px
            return 0.5 * float(d @ d) + lam * float(self.value(z))

        def jac(z):
            return (z - px) + lam * np.asarray(self.subgrad(z), float)

        starts = [z0]
        if float(np.linalg.norm(z0 - px)) > 1e-12:
            starts.append(px)
        best = None
        best_val = np.inf
        for s0 in starts:
            res = minimize(
                obj,
                s0,
                jac=jac,
                method="L-BFGS-B",
                bounds=self._bounds(),
                options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 500},
            )
            cand = np.asarray(res.x, dtype=float)
            val = obj(cand)
            if val < best_val:
                best, best_val = cand, val
        return best

    def project(self, p: PointTime) -> PointTime:
        """Nearest point of the epigraph, via bisection on the multiplier.

        The KKT system of min ||q - p||^2 s.t. f(q.x) <= q.t gives
        q.t = p.t + lam and q.x = prox_{lam f}(p.x); the residual
        f(q.x(lam)) - (p.t + lam) is decreasing in lam, so its root is
        bracketed by doubling and then bisected.
        """
        self._check(p)
        tol = self.tol
        if self.violation(p) <= 0:
            return p
        px, pt = p.x, p.t

        z = px.copy()

        def phi(lam):
            nonlocal z
            z = self._prox(px, lam, z)
            return float(self.value(z)) - (pt + lam)

        lo, hi = 0.0, max(tol, 1.0)
        grow = 0
        while phi(hi) > 0:
            lo, hi = hi, hi * 2.0
            grow += 1
            if grow > 80:
                raise ProjectionError(
                    "epigraph projection: multiplier bracket failed",
                    iterate=PointTime(z, pt + hi),
                    residual=float(self.value(z)) - (pt + hi),
                )
        for _ in range(200):
            if hi - lo <= 0.25 * tol:
                break
            mid = 0.5 * (lo + hi)
            if phi(mid) > 0:
                lo = mid
            else:
                hi = mid
        # take the feasible side of the bracket so f(q.x) <= q.t + tol;
        # the residual falls at unit rate or faster in the multiplier, so a
        # leftover few-ulp violation is removed by bumping hi once or twice
        z_hi = self._prox(px, hi, z)
        q = PointTime(z_hi, pt + hi)
        resid = self.violation(q)
        for _ in range(50):
            if resid <= tol:
                break
            hi += max(resid, tol)
            z_hi = self._prox(px, hi, z_hi)
            q = PointTime(z_hi, pt + hi)
            resid = self.violation(q)
        if resid > tol:
            raise ProjectionError(
                "epigraph projection did not reach tolerance",
                iterate=q,
                residual=resid,
            )
        return q


def contains(s: ProjectableSet, p: PointTime, tol: float = 0.0) -> bool:
    """True iff p violates the set's defining inequality by at most tol."""
    return s.contains(p, tol)


def project_hyperplane(p: PointTime, plane: HorizontalHyperplane) -> PointTime:
    return plane.project(p)


def project_cone(p: PointTime, cone: SecondOrderCone) -> PointTime:
    return cone.project(p)


def project_epigraph(
    p: PointTime, epi: ConvexEpigraph, tol: Optional[float] = None
) -> PointTime:
    if tol is not None:
        old = epi.tol
        epi.tol = tol
        try:
            return epi.project(p)
        finally:
            epi.tol = old
    return epi.project(p)
