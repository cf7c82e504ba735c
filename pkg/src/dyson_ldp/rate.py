"""Path-space rate functional for the top eigenvalue and its ingredients.

For an absolutely continuous path phi staying above the moving bulk edge
2*sqrt(t), the deviation cost in the Hermitian class is

    I(phi) = 1/2 * int_0^1 k_phi(s)^2 ds,
    k_phi(s) = phi'(s) - (phi(s) - sqrt(phi(s)^2 - 4s)) / (2s),

i.e. the excess of the path velocity over the semicircle drift; paths
dipping below the edge cost +infinity, and the symmetric class costs half
as much.  The functional is also the supremum over test functions h of

    F(phi, mu; h) = G(phi, mu; h) - 1/2 int h^2,
    G(phi, mu; h) = h(1) phi(1) - h(0) phi(0) - int phi h' - int b(phi, mu) h,

with mu the semicircle process, which `sup_J_lower` exploits as an
independent lower bound via closed-form maximization over a finite smooth
basis.

Wall conventions: values of phi^2 - 4s in [-1e-10, 0) are treated as
floating-point grazing of the edge and clamped to zero (optimal paths ride
the edge exactly); anything lower triggers the infinite-rate branch.  At
s = 0 the drift limit is 1/theta for theta > 0, and the on-wall value
k = 0 is used for a zero spike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SingularDriftError, WallViolationError
from .measures import EmpiricalMeasure, emp_drift
from .paths import ScalarPath, validate_grid

WALL_CLAMP = 1e-10
ENDPOINT_TOL = 1e-8


class _SemicircleProcess:
    """Sentinel for the time-indexed semicircle family (sigma_t)_t."""

    def __repr__(self):
        return "SEMICIRCLE"


SEMICIRCLE = _SemicircleProcess()


@dataclass(frozen=True)
class RateParams:
    """Spike and symmetry class entering the rate functional."""

    theta: float
    beta: int = 2

    def __post_init__(self):
        if self.theta < 0:
            raise InvalidParameterError(f"spike must be >= 0, got {self.theta}")
        if self.beta not in (1, 2):
            raise InvalidParameterError(f"symmetry class must be 1 or 2, got {self.beta}")


def wall(t) -> np.ndarray:
    """The moving bulk edge 2*sqrt(t)."""
    return 2.0 * np.sqrt(np.asarray(t, dtype=float))


def lln_path(theta: float, grid) -> ScalarPath:
    """Almost-sure limit of the top eigenvalue, with analytic derivative.

    2*sqrt(t) for a zero spike; theta + t/theta up to t = theta^2 and
    2*sqrt(t) afterwards for theta > 0.  The two branches meet tangentially,
    so the derivative is continuous.
    """
    if theta < 0:
        raise InvalidParameterError(f"spike must be >= 0, got {theta}")
    t = validate_grid(grid)
    with np.errstate(divide="ignore"):
        sqrt_deriv = np.where(t > 0, 1.0 / np.sqrt(np.where(t > 0, t, 1.0)), np.inf)
    if theta == 0:
        return ScalarPath(t, wall(t), sqrt_deriv)
    vals = np.where(t <= theta**2, theta + t / theta, wall(t))
    deriv = np.where(t <= theta**2, 1.0 / theta, sqrt_deriv)
    return ScalarPath(t, vals, deriv)


def _wall_discriminant(values: np.ndarray, t: np.ndarray):
    """phi^2 - 4t with the grazing band clamped; flags true violations."""
    d = values * values - 4.0 * t
    violated = d < -WALL_CLAMP
    return np.where((d < 0) & ~violated, 0.0, d), violated


def sc_drift_path(values: np.ndarray, t: np.ndarray, theta: float) -> np.ndarray:
    """Semicircle drift b(phi(s), sigma_s) along a path, with the s = 0
    limit 1/theta (the theta = 0 value at s = 0 is never used: the on-wall
    convention k = 0 applies there)."""
    d, violated = _wall_discriminant(values, t)
    if violated.any():
        i = int(np.argmax(violated))
        raise WallViolationError(
            f"path dips below the bulk edge at t={t[i]:.6g} (phi={values[i]:.6g})"
        )
    b = np.empty_like(values)
    pos = t > 0
    b[pos] = (values[pos] - np.sqrt(d[pos])) / (2.0 * t[pos])
    if (~pos).any():
        b[~pos] = 1.0 / theta if theta > 0 else np.inf
    return b


def k_phi(phi: ScalarPath, theta: float) -> ScalarPath:
    """Excess velocity k_phi = phi' - b(phi, sigma) on the path's grid.

    Requires phi(0) = theta when the grid starts at 0, and the path on or
    above the edge within the clamp tolerance.
    """
    t, v = phi.t, phi.values
    if t[0] == 0.0 and abs(v[0] - theta) > ENDPOINT_TOL:
        raise InvalidParameterError(f"path starts at {v[0]}, expected the spike {theta}")
    b = sc_drift_path(v, t, theta)
    with np.errstate(invalid="ignore"):
        k = phi.deriv() - b
    if t[0] == 0.0 and theta == 0.0:
        k[0] = 0.0
    return ScalarPath(t, k)


def x_transform(phi: ScalarPath) -> ScalarPath:
    """Edge-resolving change of variable x = (phi + sqrt(phi^2 - 4s)) / 2,
    inverse of x + s/x."""
    d, violated = _wall_discriminant(phi.values, phi.t)
    if violated.any():
        i = int(np.argmax(violated))
        raise WallViolationError(f"path dips below the bulk edge at t={phi.t[i]:.6g}")
    return ScalarPath(phi.t, 0.5 * (phi.values + np.sqrt(d)))


def rate_I(phi: ScalarPath, params: RateParams) -> float:
    """Deviation cost of a path; +inf below the edge, halved for beta = 1."""
    t, v = phi.t, phi.values
    if t[0] == 0.0 and abs(v[0] - params.theta) > ENDPOINT_TOL:
        raise InvalidParameterError(
            f"path starts at {v[0]}, expected the spike {params.theta}"
        )
    _, violated = _wall_discriminant(v, t)
    if violated.any():
        return np.inf
    k = k_phi(phi, params.theta)
    val = 0.5 * np.trapezoid(k.values**2, t)
    return float(val) if params.beta == 2 else float(0.5 * val)


def _drift_along(phi: ScalarPath, mu) -> tuple[np.ndarray, float]:
    """Drift samples b(phi(t_i), mu_{t_i}) plus the first-cell integral
    correction needed when the drift blows up at t = 0 (zero spike).

    Returns (b, first_cell) where first_cell is the contribution of
    int_{t_0}^{t_1} b h over the first cell divided by the average of h
    there, or nan when the ordinary trapezoid cell applies.
    """
    t, v = phi.t, phi.values
    if mu is SEMICIRCLE:
        theta = float(v[0]) if t[0] == 0.0 else 1.0
        if t[0] == 0.0 and theta == 0.0:
            b = np.empty_like(v)
            b[1:] = sc_drift_path(v[1:], t[1:], theta)
            b[0] = np.inf
            # on-wall start: int_0^{t1} b ds = 2 sqrt(t1) + O(t1)
            return b, 2.0 * np.sqrt(t[1])
        return sc_drift_path(v, t, theta), np.nan
    measures = list(mu)
    if len(measures) != t.size:
        raise InvalidParameterError("need one spectral measure per grid node")
    b = np.empty_like(v)
    for i, m in enumerate(measures):
        if not isinstance(m, EmpiricalMeasure):
            raise InvalidParameterError("measure path entries must be EmpiricalMeasure")
        if v[i] <= m.atoms[0]:
            raise SingularDriftError(
                f"path at t={t[i]:.6g} is not above the measure support"
            )
        b[i] = emp_drift(v[i], m)
    return b, np.nan


def G_functional(phi: ScalarPath, mu, h: ScalarPath) -> float:
    """Boundary terms minus int phi h' minus int b(phi, mu) h, on the grid.

    `mu` is SEMICIRCLE or a sequence of EmpiricalMeasure, one per node.
    """
    t = phi.t
    if h.t.shape != t.shape or not np.allclose(h.t, t):
        raise InvalidParameterError("test function must live on the path's grid")
    b, first_cell = _drift_along(phi, mu)
    hv = h.values
    if np.isnan(first_cell):
        bh = np.trapezoid(b * hv, t)
    else:
        bh = np.trapezoid(b[1:] * hv[1:], t[1:]) + first_cell * 0.5 * (hv[0] + hv[1])
    boundary = hv[-1] * phi.values[-1] - hv[0] * phi.values[0]
    return float(boundary - np.trapezoid(phi.values * h.deriv(), t) - bh)


def F_functional(phi: ScalarPath, mu, h: ScalarPath) -> float:
    """G minus half the squared L2 norm of h; F(phi, sigma; k_phi) = I(phi)."""
    return G_functional(phi, mu, h) - 0.5 * float(np.trapezoid(h.values**2, phi.t))


def _cosine_basis(t: np.ndarray, size: int):
    """Orthonormal-in-L2 smooth family {1, sqrt(2) cos(j pi u)} on the
    grid's span, with analytic derivatives."""
    t0, t1 = t[0], t[-1]
    u = (t - t0) / (t1 - t0)
    funcs = []
    for j in range(size):
        if j == 0:
            funcs.append((np.ones_like(t), np.zeros_like(t)))
        else:
            funcs.append(
                (
                    np.sqrt(2.0) * np.cos(j * np.pi * u),
                    -np.sqrt(2.0) * j * np.pi / (t1 - t0) * np.sin(j * np.pi * u),
                )
            )
    return funcs


def sup_J_lower(phi: ScalarPath, basis_size: int) -> float:
    """Lower bound on the rate by maximizing F(phi, sigma; .) in closed
    form over the span of the first `basis_size` smooth basis functions.

    The maximum of a linear functional minus half a quadratic one over a
    finite span solves a small positive-definite system; enlarging the
    span can only increase the value.
    """
    if basis_size < 1:
        raise InvalidParameterError("basis_size must be >= 1")
    t = phi.t
    funcs = _cosine_basis(t, basis_size)
    g = np.array([G_functional(phi, SEMICIRCLE, ScalarPath(t, e, de)) for e, de in funcs])
    e_mat = np.stack([e for e, _ in funcs])
    # Gram matrix under the same trapezoid rule used for F
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    m = (e_mat * w) @ e_mat.T
    m += 1e-12 * np.eye(basis_size)
    c = np.linalg.solve(m, g)
    return float(0.5 * g @ c)


def t0_of(phi: ScalarPath, tol: float = 1e-8) -> float:
    """Last grid time at which the path sits on the bulk edge (within
    `tol`), or 0 when it never touches after time 0."""
    t, v = phi.t, phi.values
    if t[0] == 0.0 and abs(v[0]) > ENDPOINT_TOL:
        raise InvalidParameterError("t0 is defined for paths started at 0")
    on = (np.abs(v - wall(t)) <= tol) & (t > 0)
    if not on.any():
        return 0.0
    return float(t[np.nonzero(on)[0][-1]])
