"""Independent numerical oracle for the obstacle-constrained deviation cost.

Minimizes the discretized action

    S(phi) = sum_i f(t_i, phi_i, (phi_{i+1} - phi_i)/dt_i) dt_i,
    f(t, x, y) = (y - b(t, x))^2 / 2,   b(t, x) = (x - sqrt(x^2 - 4t)) / (2t),

over paths pinned to phi(eta) = theta and phi(1) = x and clipped to the
obstacle phi_i >= 2*sqrt(t_i) after every iterate.  The search direction is
the analytic gradient smoothed by the tridiagonal metric I + D^T D (the
Hessian of the quadratic part), which keeps the iteration count
mesh-independent; steps use backtracking Armijo line search, so the
objective is nonincreasing across accepted iterates.  A short
coarse-to-fine sweep supplies good initial iterates on fine grids.

Cells are evaluated at their left node; the first cell uses the drift
limit 1/theta when eta = 0 (and is skipped entirely for a zero spike,
where the integrand's on-wall value vanishes).  Near-wall nodes
(x^2 - 4t < 1e-8) are active-set nodes: their drift-derivative term is
dropped and the projection owns them.

Extremality diagnostics: along smooth off-wall arcs the minimizer
satisfies d/dt f_y = f_x (pointwise residual) and the integrated form
f_y - int f_x = const.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solveh_banded

from .errors import EmptySegmentError, InvalidParameterError
from .paths import ScalarPath, validate_grid
from .rate import sc_drift_path, wall

ACTIVE_SET_BAND = 1e-8


@dataclass(frozen=True)
class VarProblem:
    """Boundary data theta at eta, x at 1, a grid on [eta, 1], and solver
    controls."""

    theta: float
    x: float
    grid: np.ndarray
    eta: float = 0.0
    max_iter: int = 400
    tol: float = 1e-11
    armijo: float = 1e-4

    def __post_init__(self):
        grid = validate_grid(self.grid)
        if abs(grid[0] - self.eta) > 1e-12 or abs(grid[-1] - 1.0) > 1e-12:
            raise InvalidParameterError("grid must span [eta, 1]")
        if self.theta < 2.0 * np.sqrt(self.eta) - 1e-12:
            raise InvalidParameterError("spike lies below the bulk edge at eta")
        if self.x < 2.0 - 1e-12:
            raise InvalidParameterError("target below the bulk edge has no admissible path")
        object.__setattr__(self, "grid", grid)


@dataclass
class MinimizeResult:
    path: ScalarPath
    objective: float
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)


def _drift_nodes(p: VarProblem):
    """Per-cell drift evaluation times and which value node each uses."""
    t = p.grid
    b_idx = np.arange(t.size - 1)
    if t[0] == 0.0:
        b_idx[0] = -1  # sentinel: analytic limit or skipped cell
    return b_idx


def _cell_drift(p: VarProblem, phi: np.ndarray):
    """b at the left node of every cell, with the t = 0 conventions."""
    t = p.grid
    b = np.empty(t.size - 1)
    if t[0] == 0.0:
        b[1:] = sc_drift_path(phi[1:-1], t[1:-1], p.theta)
        b[0] = 1.0 / p.theta if p.theta > 0 else 0.0
    else:
        b[:] = sc_drift_path(phi[:-1], t[:-1], p.theta)
    return b


def discretized_objective(phi: np.ndarray, p: VarProblem) -> float:
    """Left-node rectangle rule for the action of a node vector."""
    t = p.grid
    dt = np.diff(t)
    y = np.diff(phi) / dt
    b = _cell_drift(p, phi)
    r = y - b
    w = dt.copy()
    if t[0] == 0.0 and p.theta == 0.0:
        w[0] = 0.0  # on-wall start: the integrand's limit vanishes
    return float(0.5 * np.sum(r * r * w))


def objective_gradient(phi: np.ndarray, p: VarProblem) -> np.ndarray:
    """Analytic gradient of the discretized action; zero at the pinned
    endpoints, drift term dropped at active-set (near-wall) nodes."""
    t = p.grid
    dt = np.diff(t)
    y = np.diff(phi) / dt
    b = _cell_drift(p, phi)
    r = y - b
    if t[0] == 0.0 and p.theta == 0.0:
        r[0] = 0.0
    g = np.zeros_like(phi)
    g[1:] += r
    g[:-1] -= r
    # drift dependence: cell i >= 1 (or i >= 0 off a t = 0 start) reads phi
    # at its left node
    d = phi[:-1] ** 2 - 4.0 * t[:-1]
    inactive = d >= ACTIVE_SET_BAND
    if t[0] == 0.0:
        inactive[0] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        bx = np.where(inactive, 0.5 / t[:-1] * (1.0 - phi[:-1] / np.sqrt(d)), 0.0)
    bx = np.where(np.isfinite(bx), bx, 0.0)
    g[:-1] += -dt * r * bx
    g[0] = 0.0
    g[-1] = 0.0
    return g


def _project(phi: np.ndarray, t: np.ndarray, theta: float, x: float) -> np.ndarray:
    out = np.maximum(phi, wall(t))
    out[0] = theta
    out[-1] = x
    return out


def _metric_solve(g: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Solve (I + D^T D) p = g on the free nodes, tridiagonal SPD."""
    m = g.size - 2
    if m <= 0:
        return np.zeros_like(g)
    inv = 1.0 / dt
    diag = 1.0 + inv[:-1] + inv[1:]
    off = -inv[1:-1]
    ab = np.zeros((2, m))
    ab[0, 1:] = off
    ab[1, :] = diag
    p = np.zeros_like(g)
    p[1:-1] = solveh_banded(ab, g[1:-1])
    return p


def _descend(p: VarProblem, phi0: np.ndarray, max_iter: int, record_trace: bool):
    t = p.grid
    dt = np.diff(t)
    phi = _project(phi0.copy(), t, p.theta, p.x)
    s_val = discretized_objective(phi, p)
    trace = [(0, s_val, 0.0)] if record_trace else []
    stall = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        g = objective_gradient(phi, p)
        direction = _metric_solve(g, dt)
        step = 1.0
        accepted = False
        while step > 1e-14:
            cand = _project(phi - step * direction, t, p.theta, p.x)
            move = cand - phi
            s_new = discretized_objective(cand, p)
            if s_new <= s_val - (p.armijo / step) * float(move @ move):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        drop = s_val - s_new
        phi, s_val = cand, s_new
        if record_trace:
            trace.append((it, s_val, step))
        if drop <= p.tol * max(1.0, abs(s_val)):
            stall += 1
            if stall >= 3:
                converged = True
                break
        else:
            stall = 0
    return phi, s_val, converged, it, trace


def _coarsen_levels(n_cells: int, coarsest: int = 100):
    levels = [n_cells]
    while levels[-1] > coarsest and levels[-1] % 2 == 0:
        levels.append(levels[-1] // 2)
    return levels[::-1]


def minimize_path(p: VarProblem, restarts: int = 1, seed: int = 0,
                  record_trace: bool = False) -> MinimizeResult:
    """Projected descent from the projected straight line (plus smooth
    jitter on restarts); returns the best iterate over restarts.

    The straight line is itself optimal in a whole parameter regime, and
    coarse-to-fine sweeps keep fine grids cheap.
    """
    if restarts < 1:
        raise InvalidParameterError("restarts must be >= 1")
    t = p.grid
    base = p.theta + (p.x - p.theta) * (t - p.eta) / (1.0 - p.eta)
    rng = np.random.default_rng([seed, 0x7061])
    best = None
    n_cells = t.size - 1
    uniform = np.allclose(np.diff(t), (t[-1] - t[0]) / n_cells)
    for r in range(restarts):
        init = base.copy()
        if r > 0:
            u = (t - t[0]) / (t[-1] - t[0])
            amp = 0.3 * rng.uniform(0.2, 1.0)
            freq = rng.integers(1, 4)
            init = init + amp * np.sin(np.pi * freq * u) ** 2
        total_iters = 0
        trace = []
        if uniform and n_cells >= 200:
            phi_c = None
            for cells in _coarsen_levels(n_cells):
                stride = n_cells // cells
                sub = t[::stride]
                sub_p = VarProblem(p.theta, p.x, sub, eta=p.eta, max_iter=p.max_iter,
                                   tol=p.tol, armijo=p.armijo)
                start = np.interp(sub, t, init if phi_c is None else phi_c)
                phi_sub, _, _, its, _ = _descend(sub_p, start, p.max_iter, False)
                phi_c = np.interp(t, sub, phi_sub)
                total_iters += its
            init = phi_c
        phi, s_val, conv, its, trace = _descend(p, init, p.max_iter, record_trace)
        total_iters += its
        if best is None or s_val < best[1]:
            best = (phi, s_val, conv, total_iters, trace)
    phi, s_val, conv, iters, trace = best
    return MinimizeResult(ScalarPath(t, phi), s_val, conv, iters, trace)


def _path_k_and_bx(phi: ScalarPath):
    """k = phi' - b and the drift x-derivative along the path, with the
    active (near-wall) mask."""
    t, v = phi.t, phi.values
    d = v * v - 4.0 * t
    active = d < ACTIVE_SET_BAND
    b = sc_drift_path(v, t, v[0] if t[0] == 0.0 else 1.0)
    with np.errstate(invalid="ignore"):
        k = phi.deriv() - b
    if t[0] == 0.0:
        active[0] = True
    with np.errstate(divide="ignore", invalid="ignore"):
        bx = np.where(~active, 0.5 / t * (1.0 - v / np.sqrt(d)), 0.0)
    return k, bx, active


def el_residual(phi: ScalarPath) -> ScalarPath:
    """Pointwise Euler-Lagrange residual d/dt f_y - f_x = dk/dt + k b_x on
    the interior grid, NaN where the obstacle is active (those nodes are
    excluded); empty path when every interior node is active."""
    k, bx, active = _path_k_and_bx(phi)
    t = phi.t
    k_safe = np.where(np.isfinite(k), k, 0.0)
    kd = np.gradient(k_safe, t, edge_order=1)
    resid = kd + k_safe * bx
    inner = slice(1, -1)
    if active[inner].all():
        return ScalarPath(np.empty(0), np.empty(0))
    vals = np.where(active[inner], np.nan, resid[inner])
    return ScalarPath(t[inner], vals)


def dbr_constant(phi: ScalarPath) -> tuple[float, float]:
    """Integrated extremality check on the longest off-wall arc: returns
    (mean, max deviation from mean) of r(t) = f_y + int k b_x; a
    near-constant r certifies the arc as extremal."""
    k, bx, active = _path_k_and_bx(phi)
    t = phi.t
    off = ~active
    if not off.any():
        raise EmptySegmentError("path rides the bulk edge everywhere")
    # longest contiguous off-wall run
    idx = np.nonzero(off)[0]
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    segments = np.split(idx, breaks + 1)
    seg = max(segments, key=len)
    if seg.size < 3:
        raise EmptySegmentError("off-wall arc too short for the diagnostic")
    s = slice(seg[0], seg[-1] + 1)
    integrand = k[s] * bx[s]
    r = k[s] + np.concatenate([[0.0], cumulative_trapezoid(integrand, t[s])])
    mean = float(np.mean(r))
    return mean, float(np.max(np.abs(r - mean)))
