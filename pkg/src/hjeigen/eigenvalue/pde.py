"""Independent oracle: march u_t + H(x, Du) = 0 to long times with a monotone
local Lax-Friedrichs scheme and read off c = -du/dt.

The per-node viscosity is the local bound on |dH/dp| over the stencil
gradients, capped by the global ``theta``.  A global viscosity over the whole
momentum box smears the eigenvalue by O(theta * dx), which is far too large
for momentum boxes much wider than the solution's gradients.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .._codegen import compile_scalar
from ..errors import BlowUpError, PreconditionError
from ..hamiltonian import HamiltonianSpec
from ..lipschitz import GridFunction
from .report import EigenvalueReport, grid_nodes, rough_bounds

FD_STEP = 1e-6
_MOMENTUM_SAMPLES = {1: 801, 2: 41}


def estimate_theta(h: HamiltonianSpec, m: int) -> float:
    """max |dH/dp_i| from one-sided differences on grid nodes x momentum box."""
    N = h.dimension
    R = h.p_max
    ticks = np.linspace(-R, R, _MOMENTUM_SAMPLES[N])
    dp = ticks[1] - ticks[0]
    x = grid_nodes(m, N)
    if N == 1:
        vals = h(x[:, None], ticks[None, :])
        return float(np.max(np.abs(np.diff(vals, axis=1))) / dp)
    stride = max(1, len(x) // 1024)
    x = x[::stride]
    g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
    f = h.bind(x[:, None, None, :])
    vals = np.broadcast_to(f((g1[None], g2[None])), (len(x),) + g1.shape)
    d1 = np.max(np.abs(np.diff(vals, axis=1)))
    d2 = np.max(np.abs(np.diff(vals, axis=2)))
    return float(max(d1, d2) / dp)


@numba.njit(cache=False)
def _dpabs(H, x0, x1, p0, p1, axis, delta):
    if axis == 0:
        return abs(H(x0, x1, p0 + delta, p1) - H(x0, x1, p0 - delta, p1)) / (2.0 * delta)
    return abs(H(x0, x1, p0, p1 + delta) - H(x0, x1, p0, p1 - delta)) / (2.0 * delta)


@numba.njit(cache=False)
def _march_1d(H, x, T, theta, floor, delta):
    m = x.size
    dx = 1.0 / m
    u = np.zeros(m)
    new = np.zeros(m)
    half = np.zeros(m)
    th = np.zeros(m)
    hv = np.zeros(m)
    t = 0.0
    steps = 0
    have_half = False
    while True:
        target = T if have_half else 0.5 * T
        if t >= target:
            break
        tmax = 0.0
        for j in range(m):
            jp = j + 1 if j + 1 < m else 0
            jm = j - 1 if j > 0 else m - 1
            pf = (u[jp] - u[j]) * m
            pb = (u[j] - u[jm]) * m
            a = max(_dpabs(H, x[j], 0.0, pf, 0.0, 0, delta), _dpabs(H, x[j], 0.0, pb, 0.0, 0, delta))
            a = min(a, theta)
            th[j] = a
            if a > tmax:
                tmax = a
            hv[j] = H(x[j], 0.0, 0.5 * (pf + pb), 0.0)
        dt = dx / (2.0 * max(tmax, floor))
        last = t + dt >= target * (1.0 - 1e-15)
        if last:
            dt = target - t
        ok = True
        for j in range(m):
            jp = j + 1 if j + 1 < m else 0
            jm = j - 1 if j > 0 else m - 1
            new[j] = u[j] - dt * (hv[j] - th[j] / (2.0 * dx) * (u[jp] - 2.0 * u[j] + u[jm]))
            if not math.isfinite(new[j]):
                ok = False
        steps += 1
        if not ok:
            return u, half, steps, False
        u, new = new, u
        t = target if last else t + dt
        if last and not have_half:
            half[:] = u
            have_half = True
    return u, half, steps, True


@numba.njit(cache=False)
def _march_2d(H, x, T, theta, floor, delta):
    m = x.shape[0]
    dx = 1.0 / m
    u = np.zeros((m, m))
    new = np.zeros((m, m))
    half = np.zeros((m, m))
    th0 = np.zeros((m, m))
    th1 = np.zeros((m, m))
    hv = np.zeros((m, m))
    t = 0.0
    steps = 0
    have_half = False
    while True:
        target = T if have_half else 0.5 * T
        if t >= target:
            break
        tmax = 0.0
        for i in range(m):
            ip = i + 1 if i + 1 < m else 0
            im = i - 1 if i > 0 else m - 1
            for j in range(m):
                jp = j + 1 if j + 1 < m else 0
                jm = j - 1 if j > 0 else m - 1
                pf0 = (u[ip, j] - u[i, j]) * m
                pb0 = (u[i, j] - u[im, j]) * m
                pf1 = (u[i, jp] - u[i, j]) * m
                pb1 = (u[i, j] - u[i, jm]) * m
                a0 = 0.0
                a1 = 0.0
                for q0 in (pf0, pb0):
                    for q1 in (pf1, pb1):
                        a0 = max(a0, _dpabs(H, x[i, j, 0], x[i, j, 1], q0, q1, 0, delta))
                        a1 = max(a1, _dpabs(H, x[i, j, 0], x[i, j, 1], q0, q1, 1, delta))
                a0 = min(a0, theta)
                a1 = min(a1, theta)
                th0[i, j] = a0
                th1[i, j] = a1
                tmax = max(tmax, max(a0, a1))
                hv[i, j] = H(x[i, j, 0], x[i, j, 1], 0.5 * (pf0 + pb0), 0.5 * (pf1 + pb1))
        dt = dx / (2.0 * max(tmax, floor))
        last = t + dt >= target * (1.0 - 1e-15)
        if last:
            dt = target - t
        ok = True
        for i in range(m):
            ip = i + 1 if i + 1 < m else 0
            im = i - 1 if i > 0 else m - 1
            for j in range(m):
                jp = j + 1 if j + 1 < m else 0
                jm = j - 1 if j > 0 else m - 1
                visc = th0[i, j] * (u[ip, j] - 2.0 * u[i, j] + u[im, j]) + th1[i, j] * (
                    u[i, jp] - 2.0 * u[i, j] + u[i, jm]
                )
                new[i, j] = u[i, j] - dt * (hv[i, j] - visc / (2.0 * dx))
                if not math.isfinite(new[i, j]):
                    ok = False
        steps += 1
        if not ok:
            return u, half, steps, False
        u, new = new, u
        t = target if last else t + dt
        if last and not have_half:
            half[:, :] = u
            have_half = True
    return u, half, steps, True


def pde_eigenvalue(
    h: HamiltonianSpec,
    m: int = 256,
    T: float = 50.0,
    theta: float | None = None,
) -> EigenvalueReport:
    """Long-time average c = -(u(T) - u(T/2)) * 2/T, averaged over nodes.

    ``theta`` must dominate the sampled |dH/dp| on the momentum box (it caps
    the local viscosity and sets the slowest admissible time step).  The
    bracket is the min/max of the per-node estimates.
    """
    if not h.claims_coercive:
        raise PreconditionError("pde_eigenvalue needs a coercive Hamiltonian; use coercive_limit")
    if not T > 0:
        raise PreconditionError("T must be positive")
    needed = estimate_theta(h, m)
    if theta is None:
        theta = needed
    elif theta < needed * (1.0 - 1e-9):
        raise PreconditionError(
            f"CFL violation: theta={theta!r} is below the sampled |dH/dp| bound {needed!r}"
        )
    H = compile_scalar(h)
    floor = min(theta, 1.0)
    if h.dimension == 1:
        x = grid_nodes(m, 1)
        u, half, steps, ok = _march_1d(H, x, float(T), float(theta), floor, FD_STEP)
    else:
        x = grid_nodes(m, 2).reshape(m, m, 2)
        u, half, steps, ok = _march_2d(H, x, float(T), float(theta), floor, FD_STEP)
    if not ok:
        raise BlowUpError(int(steps))
    est = -(u - half) * 2.0 / T
    c = float(np.mean(est))
    return EigenvalueReport(
        "pde-oracle",
        c,
        (float(np.min(est)), float(np.max(est))),
        rough_bounds(h, m),
        [],
        int(steps),
        GridFunction(u - u.mean()),
        {"theta": float(theta), "spread": float(np.max(est) - np.min(est)), "T": float(T)},
    )
