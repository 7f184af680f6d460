"""Periodic grid functions on the torus, Friedrichs-type mollification,
classical and Clarke generalized gradients.

Cell conventions: in 1D cell ``j`` is ``[j/m, (j+1)/m]`` with slope
``(u[j+1] - u[j]) * m``.  In 2D each square cell is split into two triangles
and contributes both piecewise-linear gradients.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import InputError, PreconditionError
from .quasiconvex import convex_hull_2d, project_onto_hull

KERNEL_MASS_TOL = 1e-12


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray  # shape (m,) or (m, m)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2):
            raise InputError(f"grid functions live on T^1 or T^2, got {v.ndim} axes")
        m = v.shape[0]
        if any(s != m for s in v.shape):
            raise InputError(f"2D grids must be square, got {v.shape}")
        if m < 8 or m & (m - 1):
            raise InputError(f"resolution m must be a power of two >= 8, got {m}")
        if not np.all(np.isfinite(v)):
            raise InputError("grid samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_function(cls, f: Callable, m: int, dimension: int = 1) -> "GridFunction":
        x = np.arange(m) / m
        if dimension == 1:
            return cls(f(x))
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return cls(f(x1, x2))

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (m,) in 1D and (m, m, 2) in 2D."""
        x = np.arange(self.m) / self.m
        if self.dimension == 1:
            return x
        return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)

    def lipschitz_constant(self) -> float:
        u = self.values
        return float(max(np.max(np.abs(np.roll(u, -1, axis=a) - u)) for a in range(u.ndim)) * self.m)

    def to_csv(self) -> str:
        lines = [f"{self.dimension},{self.m}"]
        if self.dimension == 1:
            lines += [repr(float(v)) for v in self.values]
        else:
            lines += [",".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = [ln.strip() for ln in io.StringIO(text) if ln.strip()]
        if not rows:
            raise InputError("empty grid function file")
        try:
            dim, m = (int(t) for t in rows[0].split(","))
            data = [[float(t) for t in r.split(",")] for r in rows[1:]]
        except ValueError as exc:
            raise InputError(f"malformed grid function CSV: {exc}") from None
        arr = np.array(data, dtype=float)
        arr = arr.ravel() if dim == 1 else arr
        if arr.shape != ((m,) if dim == 1 else (m, m)):
            raise InputError(f"header says dim={dim}, m={m} but data has shape {arr.shape}")
        return cls(arr)


def tent(m: int) -> GridFunction:
    """u_j = min(j/m, 1 - j/m): kinks at 0 (minimum) and 1/2 (maximum)."""
    j = np.arange(m)
    return GridFunction(np.minimum(j / m, 1 - j / m))


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierKernel:
    """Bump weights (1 - (n|z|)^2)^2 on |z| <= 1/n, sampled at grid offsets."""

    n: int
    m: int
    dimension: int
    offsets: np.ndarray  # (k, dimension) integer offsets
    weights: np.ndarray  # (k,)

    @classmethod
    def build(cls, n: int, m: int, dimension: int = 1) -> "MollifierKernel":
        if n < 1:
            raise PreconditionError(f"kernel index n must be >= 1, got {n}")
        if 1.0 / n < 2.0 / m:
            raise PreconditionError(f"kernel radius 1/{n} is below two grid cells (m={m})")
        K = m // n
        r = np.arange(-K, K + 1)
        grids = np.meshgrid(*([r] * dimension), indexing="ij")
        offs = np.stack([g.ravel() for g in grids], axis=1)
        z = np.sqrt(np.sum((offs / m) ** 2, axis=1))
        w = np.where(z <= 1.0 / n, (1.0 - (n * z) ** 2) ** 2, 0.0)
        keep = w > 0
        offs, w = offs[keep], w[keep]
        return cls(n, m, dimension, offs, w / w.sum())

    @property
    def radius(self) -> float:
        return 1.0 / self.n


def mollify(u: GridFunction, n: int) -> GridFunction:
    """Periodic discrete convolution with the index-n kernel."""
    kern = MollifierKernel.build(n, u.m, u.dimension)
    # Fold offsets onto the periodic grid before summing shifted copies.
    folded: dict[tuple, float] = {}
    for off, w in zip(map(tuple, np.mod(kern.offsets, u.m)), kern.weights):
        folded[off] = folded.get(off, 0.0) + w
    out = np.zeros_like(u.values)
    axes = tuple(range(u.dimension))
    for off, w in folded.items():
        out += w * np.roll(u.values, off, axis=axes)
    return GridFunction(out)


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientSample:
    x: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class GradientField:
    """Central-difference gradients at every node; x and p have shape (k, N)."""

    x: np.ndarray
    p: np.ndarray

    def __iter__(self) -> Iterator[GradientSample]:
        for xi, pi in zip(self.x, self.p):
            yield GradientSample(xi, pi)

    def __len__(self) -> int:
        return len(self.x)


def central_gradient(values: np.ndarray) -> np.ndarray:
    """Array of shape values.shape + (N,) of periodic central differences."""
    m = values.shape[0]
    return np.stack(
        [(np.roll(values, -1, axis=a) - np.roll(values, 1, axis=a)) * (m / 2.0) for a in range(values.ndim)],
        axis=-1,
    )


def gradient_field(u: GridFunction) -> GradientField:
    g = central_gradient(u.values)
    N = u.dimension
    x = u.nodes().reshape(-1, N)
    return GradientField(x, g.reshape(-1, N))


def cell_gradients(u: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell gradients and cell lower-left corners.

    1D: slopes (m, 1) and corners (m, 1).  2D: (2 m^2, 2) gradients, two
    triangles per cell, with matching corners.
    """
    v, m = u.values, u.m
    if u.dimension == 1:
        return ((np.roll(v, -1) - v) * m)[:, None], (np.arange(m) / m)[:, None]
    up1 = np.roll(v, -1, axis=0)
    up2 = np.roll(v, -1, axis=1)
    up12 = np.roll(up1, -1, axis=1)
    lower = np.stack([(up1 - v) * m, (up2 - v) * m], axis=-1).reshape(-1, 2)
    upper = np.stack([(up12 - up2) * m, (up12 - up1) * m], axis=-1).reshape(-1, 2)
    corners = u.nodes().reshape(-1, 2)
    return np.concatenate([lower, upper]), np.concatenate([corners, corners])


def _torus_gap(d):
    d = np.mod(d, 1.0)
    return np.minimum(d, 1.0 - d)


def cell_distances(corners: np.ndarray, x, m: int) -> np.ndarray:
    """Torus distance from ``x`` to each closed cell [c, c + 1/m]^N."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = 1.0 / m
    centre_gap = _torus_gap(corners + h / 2 - x)
    per_axis = np.maximum(centre_gap - h / 2, 0.0)
    return np.sqrt(np.sum(per_axis**2, axis=1))


@dataclass(frozen=True)
class ClarkeSet:
    """Interval [lo, hi] in 1D or a CCW convex polygon (vertex list) in 2D."""

    dimension: int
    lo: float | None = None
    hi: float | None = None
    vertices: np.ndarray | None = None

    def distance(self, p) -> np.ndarray | float:
        p = np.asarray(p, dtype=float)
        if self.dimension == 1:
            return np.maximum(np.maximum(self.lo - p, p - self.hi), 0.0).reshape(p.shape[:-1] if p.ndim > 1 else p.shape)
        pts = p.reshape(-1, 2)
        proj = np.array([project_onto_hull(self.vertices, q) for q in pts])
        d = np.sqrt(np.sum((proj - pts) ** 2, axis=1))
        return d.reshape(p.shape[:-1])

    def contains(self, p, tol: float = 1e-9) -> bool:
        return bool(np.all(self.distance(p) <= tol))

    def sample(self, k: int) -> np.ndarray:
        """k points of the set (1D: evenly spaced; 2D: along the boundary and vertices)."""
        if self.dimension == 1:
            return np.linspace(self.lo, self.hi, k)[:, None]
        vs = self.vertices
        if len(vs) == 1:
            return np.repeat(vs, k, axis=0)
        t = np.linspace(0, 1, max(k // len(vs), 2))
        segs = [a + t[:, None] * (b - a) for a, b in zip(vs, np.roll(vs, -1, axis=0))]
        return np.concatenate(segs)


def _clarke_from(grads: np.ndarray) -> ClarkeSet:
    if grads.shape[1] == 1:
        return ClarkeSet(1, float(grads.min()), float(grads.max()))
    return ClarkeSet(2, vertices=convex_hull_2d(grads))


def clarke_at(u: GridFunction, x, r: float | None = None) -> ClarkeSet:
    """Convex hull of cell gradients over cells meeting the open ball B(x, r).

    One-sided cell slopes are used rather than central differences, which
    would average across a kink and shrink the set.  Default ``r = 2/m``.
    """
    r = 2.0 / u.m if r is None else r
    if r < 2.0 / u.m - 1e-15:
        raise PreconditionError(f"radius {r} is below two grid cells")
    grads, corners = cell_gradients(u)
    near = cell_distances(corners, x, u.m) < r
    return _clarke_from(grads[near])


# ---------------------------------------------------------------------------
# Modulus of continuity and the mollification convergence check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TabulatedModulus:
    radii: np.ndarray
    values: np.ndarray

    def __call__(self, r: float) -> float:
        k = int(np.searchsorted(self.radii, r - 1e-15, side="left"))
        return float(self.values[min(k, len(self.values) - 1)])


def modulus_estimate(u: GridFunction, x, clarke: ClarkeSet | None = None) -> TabulatedModulus:
    """omega(r) = max d(du(x), p) over cell gradients p on cells within distance r of x."""
    clarke = clarke or clarke_at(u, x)
    grads, corners = cell_gradients(u)
    dist = cell_distances(corners, x, u.m)
    gaps = np.asarray(clarke.distance(grads if u.dimension == 2 else grads[:, 0]), dtype=float)
    order = np.argsort(dist, kind="stable")
    running = np.maximum.accumulate(gaps[order])
    radii = np.arange(0, u.m // 2 + 1) / u.m
    idx = np.searchsorted(dist[order], radii + 1e-12, side="right") - 1
    values = np.where(idx >= 0, running[np.maximum(idx, 0)], 0.0)
    return TabulatedModulus(radii, values)


Selector = Callable[[np.ndarray, np.ndarray, int], int]


def farthest_node(distances: np.ndarray, node_gaps: np.ndarray, n: int) -> int:
    """Default selector: the node (within the kernel radius) farthest from du(x)."""
    return int(np.argmax(distances))


@dataclass(frozen=True)
class ConvergenceReport:
    target: np.ndarray
    n_schedule: list[int]
    nodes: list[list[float]]
    gradients: list[list[float]]
    distances: list[float]
    grid_floor: float
    final_bound: float
    nonincreasing: bool
    success: bool

    def to_dict(self) -> dict:
        return {
            "target": self.target.tolist(),
            "n_schedule": self.n_schedule,
            "nodes": self.nodes,
            "gradients": self.gradients,
            "distances": self.distances,
            "grid_floor": self.grid_floor,
            "final_bound": self.final_bound,
            "nonincreasing": self.nonincreasing,
            "success": self.success,
        }


def mollification_convergence_check(
    u: GridFunction,
    n_schedule: list[int],
    x,
    selector: Selector = farthest_node,
) -> ConvergenceReport:
    """Distances from du(x) to mollified gradients at nodes x_n with |x_n - x| <= 1/n.

    On a fixed grid the achievable floor is one cell: success means the
    distances are nonincreasing up to ``2/m * L_h(u)`` and the last one is
    at most ``omega(1/n_last) + 2/m * L_h(u)``.
    """
    if list(n_schedule) != sorted(set(n_schedule)) or not n_schedule:
        raise PreconditionError("n_schedule must be strictly increasing and nonempty")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    target_set = clarke_at(u, x)
    omega = modulus_estimate(u, x, target_set)
    floor = 2.0 / u.m * u.lipschitz_constant()
    N = u.dimension
    node_x = u.nodes().reshape(-1, N)
    node_gap = np.sqrt(np.sum(_torus_gap(node_x - x) ** 2, axis=1))

    picked_x, picked_p, dists = [], [], []
    for n in n_schedule:
        grads = central_gradient(mollify(u, n).values).reshape(-1, N)
        near = np.nonzero(node_gap <= 1.0 / n + 1e-12)[0]
        d = np.asarray(target_set.distance(grads[near] if N == 2 else grads[near, 0]), dtype=float)
        k = near[selector(d, node_gap[near], n)]
        picked_x.append(node_x[k].tolist())
        picked_p.append(grads[k].tolist())
        dists.append(float(np.asarray(target_set.distance(grads[k] if N == 2 else grads[k, 0]))))
    nonincreasing = all(b <= a + floor for a, b in zip(dists, dists[1:]))
    bound = omega(1.0 / n_schedule[-1]) + floor
    return ConvergenceReport(
        x, list(n_schedule), picked_x, picked_p, dists, floor, bound, nonincreasing, nonincreasing and dists[-1] <= bound
    )
