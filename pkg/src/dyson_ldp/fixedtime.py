"""Closed-form fixed-time rate for the top eigenvalue at t = 1, and the
explicit minimizing paths.

With J(x) = int_2^x sqrt(z^2 - 4) dz, the rate of deviating to x at time 1
from a spike theta is

    theta <= 1:  J(x) on [2, theta + 1/theta], then
                 M_theta(x) = J(x)/2 - theta x + x^2/4 + 1/2 + theta^2/2 + ln theta
    theta >= 1:  L_theta(x) = (J(x) - J(theta + 1/theta))/2
                 - theta (x - theta - 1/theta) + (x^2 - (theta + 1/theta)^2)/4

and +infinity below 2.  M and L agree with the cost of the straight path
(x - theta) t + theta wherever that path is optimal, and K is continuous at
the branch junction x = theta + 1/theta.

The integral has the theta-free antiderivative
J(x) = (x/2) sqrt(x^2 - 4) - 2 ln((x + sqrt(x^2 - 4)) / 2), certified
against direct quadrature in the acceptance suite.

Minimizers: the straight line when theta >= 1 or x >= theta + 1/theta;
otherwise ride the limit path to the edge, stay on 2*sqrt(t) and leave
tangentially at t* with sqrt(t*) = (x - sqrt(x^2 - 4)) / 2, the root that
keeps the departure inside [0, 1] and makes the tangent line hit x at
time 1.  The edge-riding construction costs exactly J(x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParameterError
from .paths import ScalarPath, validate_grid
from .rate import wall

_X_CLAMP = 1e-12


@dataclass(frozen=True)
class FixedTimeQuery:
    """Deviation target: top eigenvalue at x at time 1, spike theta placed
    at time eta (default 0)."""

    theta: float
    x: float
    eta: float = 0.0

    def __post_init__(self):
        if self.theta < 0:
            raise InvalidParameterError(f"spike must be >= 0, got {self.theta}")
        if not 0.0 <= self.eta < 1.0:
            raise InvalidParameterError(f"start time must be in [0, 1), got {self.eta}")
        if self.eta > 0 and self.theta < 2.0 * np.sqrt(self.eta) - 1e-12:
            raise InvalidParameterError(
                f"spike {self.theta} lies below the bulk edge at eta={self.eta}"
            )


def _sqrt_disc(x: float) -> float:
    d = x * x - 4.0
    if d < 0:
        if d < -_X_CLAMP * max(1.0, x * x):
            raise DomainError(f"target {x} is below the bulk edge 2")
        d = 0.0
    return np.sqrt(d)


def int_sqrt(x: float) -> float:
    """int_2^x sqrt(z^2 - 4) dz = (x/2) sqrt(x^2-4) - 2 ln((x+sqrt(x^2-4))/2)."""
    s = _sqrt_disc(x)
    return float(0.5 * x * s - 2.0 * np.log(0.5 * (x + s)))


def m_branch(theta: float, x: float) -> float:
    """Rate branch past the junction for a sub-unit spike."""
    if theta <= 0:
        raise InvalidParameterError("the M branch needs theta > 0")
    return float(
        0.5 * int_sqrt(x)
        - theta * x
        + 0.25 * x * x
        + 0.5
        + 0.5 * theta * theta
        + np.log(theta)
    )


def l_branch(theta: float, x: float) -> float:
    """Rate for a super-unit spike, vanishing at x = theta + 1/theta."""
    j = theta + 1.0 / theta
    return float(
        0.5 * (int_sqrt(x) - int_sqrt(j))
        - theta * (x - j)
        + 0.25 * (x * x - j * j)
    )


def K_theta(q: FixedTimeQuery) -> float:
    """Fixed-time rate at time 1; +inf below the bulk edge."""
    if q.eta != 0.0:
        raise InvalidParameterError(
            "closed forms are for eta = 0; use the variational oracle for eta > 0"
        )
    x, theta = q.x, q.theta
    if x < 2.0 - _X_CLAMP:
        return np.inf
    x = max(x, 2.0)
    if theta >= 1.0:
        return l_branch(theta, x)
    if theta == 0.0 or x <= theta + 1.0 / theta:
        return int_sqrt(x)
    return m_branch(theta, x)


def closed_form_linear_rate(theta: float, x: float) -> float:
    """Cost of the straight path (x - theta) t + theta, in closed form:
    -ln((x + sqrt(x^2-4)) / (2 theta)) + x sqrt(x^2-4)/4 + x^2/4
    - theta x + theta^2/2 + 1/2."""
    if theta <= 0:
        raise InvalidParameterError("the linear-path closed form needs theta > 0")
    s = _sqrt_disc(x)
    return float(
        -np.log((x + s) / (2.0 * theta))
        + 0.25 * x * s
        + 0.25 * x * x
        - theta * x
        + 0.5 * theta * theta
        + 0.5
    )


def tangent_departure_time(x: float) -> float:
    """Edge-departure time t* of the minimizer: sqrt(t*) = (x - sqrt(x^2-4))/2.

    This is the root in (0, 1]; the tangent line leaving the edge at t*
    passes through (1, x), and the edge-then-tangent path costs exactly
    int_sqrt(x).  (The conjugate root (x + sqrt(x^2-4))/2 would place the
    departure outside [0, 1] for every x > 2.)
    """
    u = 0.5 * (x - _sqrt_disc(x))
    return float(u * u)


def optimal_path(q: FixedTimeQuery, grid) -> ScalarPath:
    """Minimizing path for the fixed-time deviation, with analytic
    derivative samples; endpoint phi(1) = x exact.

    Straight line when theta >= 1 + eta or x past the junction; otherwise
    the limit-path segment (slope 1/sqrt(s*)), the edge, and the tangent
    departure at t*.
    """
    t = validate_grid(grid)
    if abs(t[0] - q.eta) > 1e-12 or abs(t[-1] - 1.0) > 1e-12:
        raise InvalidParameterError("grid must span [eta, 1]")
    x, theta, eta = q.x, q.theta, q.eta
    if x < 2.0 - _X_CLAMP:
        raise InvalidParameterError(f"no admissible path ends below the edge, got x={x}")
    x = max(x, 2.0)

    on_edge_at_start = theta <= 2.0 * np.sqrt(eta) + 1e-12
    if not on_edge_at_start:
        sqrt_s = 0.5 * (theta + np.sqrt(max(theta * theta - 4.0 * eta, 0.0)))
        junction = sqrt_s + 1.0 / sqrt_s
        if theta >= 1.0 + eta or x >= junction - 1e-12:
            slope = (x - theta) / (1.0 - eta)
            vals = theta + slope * (t - eta)
            deriv = np.full_like(t, slope)
            vals[-1] = x
            return ScalarPath(t, vals, deriv)
        s_star = sqrt_s * sqrt_s
    else:
        sqrt_s = np.sqrt(eta)
        s_star = eta

    t_star = max(tangent_departure_time(x), s_star)
    u = np.sqrt(t_star)
    vals = np.empty_like(t)
    deriv = np.empty_like(t)
    seg1 = t <= s_star
    seg2 = (t > s_star) & (t <= t_star)
    seg3 = t > t_star
    if not on_edge_at_start:
        vals[seg1] = theta + (t[seg1] - eta) / sqrt_s
        deriv[seg1] = 1.0 / sqrt_s
    else:
        vals[seg1] = wall(t[seg1])
        with np.errstate(divide="ignore"):
            deriv[seg1] = np.where(t[seg1] > 0, 1.0 / np.sqrt(np.where(t[seg1] > 0, t[seg1], 1.0)), np.inf)
    vals[seg2] = wall(t[seg2])
    deriv[seg2] = 1.0 / np.sqrt(t[seg2])
    vals[seg3] = 2.0 * u + (t[seg3] - t_star) / u
    deriv[seg3] = 1.0 / u
    vals[-1] = x
    return ScalarPath(t, vals, deriv)
