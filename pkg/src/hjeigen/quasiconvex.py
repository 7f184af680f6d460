"""Jensen-type inequality for quasiconvex functions, barycenters of finitely
supported measures, and convex-hull separation in dimensions 1 and 2."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError, PreconditionError
from .hamiltonian import HamiltonianSpec

MASS_TOL = 1e-12
HULL_TOL = 1e-9
JENSEN_TOL = 1e-9
CERT_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure sum_i w_i delta_{X_i} on R^N."""

    points: np.ndarray  # (k, N)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InputError("a measure needs at least one support point")
        if pts.shape[0] != w.size:
            raise InputError(f"{pts.shape[0]} points but {w.size} weights")
        if np.any(w < 0):
            raise InputError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InputError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def support(self) -> np.ndarray:
        """Points carrying positive mass (the essential range of X)."""
        return self.points[self.weights > 0]

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}


def barycenter(mu: DiscreteMeasure) -> np.ndarray:
    return mu.weights @ mu.points


# ---------------------------------------------------------------------------
# Hulls and separation
# ---------------------------------------------------------------------------

def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Counterclockwise hull vertices (monotone chain); collinear points dropped.

    Degenerate inputs give 1 vertex (all equal) or 2 (collinear).
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for q in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list = []
    for q in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    hull = np.array(lower[:-1] + upper[:-1])
    return hull


def _segment_projection(e, a, b):
    d = b - a
    dd = d @ d
    t = 0.0 if dd == 0 else float(np.clip((e - a) @ d / dd, 0.0, 1.0))
    return a + t * d


def _inside_polygon(e, hull) -> bool:
    if len(hull) < 3:
        return False
    nxt = np.roll(hull, -1, axis=0)
    cross = (nxt[:, 0] - hull[:, 0]) * (e[1] - hull[:, 1]) - (nxt[:, 1] - hull[:, 1]) * (e[0] - hull[:, 0])
    return bool(np.all(cross >= 0))


def project_onto_hull(points: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``e`` onto the convex hull of ``points`` (N <= 2)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if pts.shape[1] == 1:
        return np.clip(e, pts.min(), pts.max())
    if pts.shape[1] != 2:
        raise PreconditionError("hull operations support N in {1, 2}")
    hull = convex_hull_2d(pts)
    if _inside_polygon(e, hull):
        return e.copy()
    if len(hull) == 1:
        return hull[0].copy()
    edges = zip(hull, np.roll(hull, -1, axis=0)) if len(hull) > 2 else [(hull[0], hull[1])]
    cands = [_segment_projection(e, a, b) for a, b in edges]
    d = [np.sum((c - e) ** 2) for c in cands]
    return cands[int(np.argmin(d))]


@dataclass(frozen=True)
class SeparationResult:
    status: str  # "inside" | "separated"
    direction: np.ndarray | None = None
    offset: float | None = None
    margin: float | None = None

    @property
    def inside(self) -> bool:
        return self.status == "inside"

    def verify(self, points: np.ndarray, e: np.ndarray) -> bool:
        """Re-check the stored certificate v.x <= a_sep (+1e-9), v.e >= a_sep + margin."""
        if self.inside:
            return True
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        v = self.direction
        return bool(
            self.margin > 0
            and np.all(pts @ v <= self.offset + CERT_TOL)
            and v @ np.atleast_1d(e) >= self.offset + self.margin
        )

    def to_dict(self) -> dict:
        if self.inside:
            return {"status": "inside"}
        return {
            "status": "separated",
            "direction": self.direction.tolist(),
            "offset": self.offset,
            "margin": self.margin,
        }


def hull_membership(points: np.ndarray, e: np.ndarray) -> SeparationResult:
    """Decide whether ``e`` lies in the closed convex hull of ``points``.

    If not, the separating direction is ``v = e - proj(e)`` with offset
    ``max_x v.x`` over the points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) < 1:
        raise PreconditionError("need at least one point")
    e = np.atleast_1d(np.asarray(e, dtype=float))
    proj = project_onto_hull(pts, e)
    v = e - proj
    if np.sqrt(v @ v) <= HULL_TOL:
        return SeparationResult("inside")
    offset = float(np.max(pts @ v))
    ve = float(v @ e)
    margin = ve - offset
    if not margin > 0:
        return SeparationResult("inside")
    # Round the margin down until the stored inequality holds in floating point.
    while offset + margin > ve:
        margin = np.nextafter(margin, 0.0)
    return SeparationResult("separated", v, offset, float(margin))


# ---------------------------------------------------------------------------
# Jensen-like inequality
# ---------------------------------------------------------------------------

ScalarFunction = Callable[[np.ndarray], np.ndarray]


def freeze(h: HamiltonianSpec, x) -> ScalarFunction:
    """``p -> H(x, p)`` for a fixed torus point; p has shape (k, N)."""
    g = h.bind(np.asarray(x, dtype=float))
    N = h.dimension

    def f(p):
        p = np.asarray(p, dtype=float).reshape(-1, N)
        return np.broadcast_to(g(tuple(p[:, i] for i in range(N))), (len(p),))

    return f


def _as_batch(f: ScalarFunction | HamiltonianSpec, x=None) -> ScalarFunction:
    if isinstance(f, HamiltonianSpec):
        return freeze(f, 0.0 if x is None else x)
    return f


@dataclass(frozen=True)
class JensenVerdict:
    holds: bool
    lhs: float
    rhs: float


def jensen_check(f: ScalarFunction, mu: DiscreteMeasure) -> JensenVerdict:
    """f(barycenter) <= ess sup of f over the support (max over positive weights)."""
    f = _as_batch(f)
    lhs = float(f(barycenter(mu)[None, :])[0])
    rhs = float(np.max(f(mu.support())))
    return JensenVerdict(lhs <= rhs + JENSEN_TOL, lhs, rhs)


_THETA_GRID = np.linspace(0.0, 1.0, 21)


def find_violating_measure(
    f: ScalarFunction,
    trials: int = 1000,
    seed: int = 0,
    *,
    p_max: float = 10.0,
    dimension: int = 1,
) -> DiscreteMeasure | None:
    """Random search over two-point measures theta*delta_p + (1-theta)*delta_q.

    Each trial draws a scale log-uniformly in [P_max/1000, P_max], a pair
    (p, q) uniformly in the cube of that radius, and tests a fixed theta grid
    plus one random theta.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    f = _as_batch(f)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        scale = p_max * 10.0 ** (-3.0 * rng.random())
        p = rng.uniform(-scale, scale, dimension)
        q = rng.uniform(-scale, scale, dimension)
        thetas = np.append(_THETA_GRID[1:-1], rng.random())
        mids = thetas[:, None] * p + (1.0 - thetas[:, None]) * q
        fm = f(mids)
        fp, fq = f(np.stack([p, q]))
        bad = np.nonzero(fm > max(fp, fq) + JENSEN_TOL)[0]
        if bad.size:
            t = float(thetas[bad[0]])
            mu = DiscreteMeasure(np.stack([p, q]), np.array([t, 1.0 - t]))
            if not jensen_check(f, mu).holds:
                return mu
    return None
