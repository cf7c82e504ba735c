"""Semicircle law, empirical spectral measures, and the one-sided
Stieltjes drift b(x, mu) = int_{-inf}^x dmu(y)/(x - y).

The drift is the mean-field force a point at x feels from the bulk.  For
the time-t semicircle law it has the closed form
b(x, sigma_t) = (x - sqrt(x^2 - 4t)) / (2t) for x >= 2*sqrt(t), with
values in (0, 1/sqrt(t)].  For an empirical measure it is the uniform
sum over atoms strictly below x; an atom exactly at x gives +inf, which
downstream rate code maps to the infinite-rate branch rather than an
exception.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidParameterError, NoDensityError

# x^2 - 4t values in [-_EDGE_CLAMP, 0) count as grazing the spectral edge
# and are clamped to zero; real violations are rejected.
_EDGE_CLAMP = 1e-12


@dataclass(frozen=True)
class SemicircleLaw:
    """Semicircle distribution with variance parameter t >= 0.

    Support is exactly [-2*sqrt(t), 2*sqrt(t)]; t = 0 degenerates to a
    point mass at the origin.
    """

    t: float

    def __post_init__(self):
        if self.t < 0:
            raise InvalidParameterError(f"variance parameter must be >= 0, got {self.t}")
        object.__setattr__(self, "t", float(self.t))

    @property
    def edge(self) -> float:
        return 2.0 * np.sqrt(self.t)

    def density(self, x):
        return sc_density(self.t, x)

    def cdf(self, x):
        """Distribution function, exact on and off the support."""
        if self.t == 0.0:
            return np.where(np.asarray(x, dtype=float) >= 0.0, 1.0, 0.0)
        a = self.edge
        xc = np.clip(np.asarray(x, dtype=float), -a, a)
        inside = (
            0.5
            + xc * np.sqrt(np.maximum(a * a - xc * xc, 0.0)) / (4.0 * np.pi * self.t)
            + np.arcsin(xc / a) / np.pi
        )
        return np.clip(inside, 0.0, 1.0)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted atoms, stored sorted descending."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise InvalidParameterError("an empirical measure needs at least one atom")
        if np.any(np.diff(a) > 0):
            raise InvalidParameterError("atoms must be sorted descending")
        object.__setattr__(self, "atoms", a)

    @classmethod
    def from_values(cls, values) -> "EmpiricalMeasure":
        return cls(np.sort(np.asarray(values, dtype=float))[::-1].copy())

    @property
    def n(self) -> int:
        return self.atoms.size

    @property
    def weight(self) -> float:
        return 1.0 / self.atoms.size


def sc_density(t: float, x):
    """Density sqrt(4t - x^2) / (2 pi t) on [-2 sqrt(t), 2 sqrt(t)], 0 outside."""
    if t < 0:
        raise InvalidParameterError(f"variance parameter must be >= 0, got {t}")
    if t == 0:
        raise NoDensityError("the t = 0 law is a point mass and has no density")
    x = np.asarray(x, dtype=float)
    inside = 4.0 * t - x * x
    out = np.where(inside > 0, np.sqrt(np.maximum(inside, 0.0)) / (2.0 * np.pi * t), 0.0)
    return out if out.ndim else float(out)


def sc_drift(x: float, t: float) -> float:
    """Stieltjes drift of the time-t semicircle law at x >= 2*sqrt(t)."""
    if t <= 0:
        raise InvalidParameterError(f"time must be > 0, got {t}")
    d = x * x - 4.0 * t
    if d < 0:
        if d < -_EDGE_CLAMP * max(1.0, x * x):
            raise DomainError(f"x={x} is inside the support of the time-{t} semicircle law")
        d = 0.0
    return (x - np.sqrt(d)) / (2.0 * t)


def emp_drift(x: float, mu: EmpiricalMeasure) -> float:
    """One-sided drift sum over atoms below x; +inf on an atom collision."""
    a = mu.atoms
    if np.any(a == x):
        return np.inf
    below = a[a < x]
    if below.size == 0:
        return 0.0
    return float(np.sum(1.0 / (x - below)) / mu.n)


def leave_top_out(mu: EmpiricalMeasure, j: int) -> EmpiricalMeasure:
    """Remove the j largest atoms and reweight uniformly."""
    if j < 0 or j >= mu.n:
        raise InvalidParameterError(f"j must be in [0, {mu.n}), got {j}")
    if j == 0:
        return mu
    return EmpiricalMeasure(mu.atoms[j:].copy())


def w1_distance(mu: EmpiricalMeasure, ref) -> float:
    """Wasserstein-1 distance, the integral of |F_mu - F_ref|.

    `ref` may be another EmpiricalMeasure (exact breakpoint formula) or a
    SemicircleLaw (piecewise adaptive quadrature between atoms).
    """
    if isinstance(ref, EmpiricalMeasure):
        pts = np.union1d(mu.atoms, ref.atoms)
        if pts.size == 1:
            return 0.0
        mids = 0.5 * (pts[:-1] + pts[1:])
        f1 = np.searchsorted(np.sort(mu.atoms), mids, side="right") / mu.n
        f2 = np.searchsorted(np.sort(ref.atoms), mids, side="right") / ref.n
        return float(np.sum(np.abs(f1 - f2) * np.diff(pts)))
    if not isinstance(ref, SemicircleLaw):
        raise InvalidParameterError("reference must be an EmpiricalMeasure or SemicircleLaw")
    if ref.t == 0.0:
        return float(np.mean(np.abs(mu.atoms)))
    edges = np.unique(np.concatenate([mu.atoms, [-ref.edge, ref.edge]]))
    total = 0.0
    sorted_atoms = np.sort(mu.atoms)
    for lo, hi in zip(edges[:-1], edges[1:]):
        c = np.searchsorted(sorted_atoms, 0.5 * (lo + hi), side="right") / mu.n
        val, _ = integrate.quad(lambda x: abs(c - ref.cdf(x)), lo, hi, limit=100)
        total += val
    return float(total)
