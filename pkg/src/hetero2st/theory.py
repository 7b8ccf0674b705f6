"""Asymptotic constants for the weighted edge count and the Henze-Penrose
divergence.

Under the composite mixture null the rescaled WEC statistic converges to a
multiple of the Henze-Penrose divergence, which is bounded above by a
constant depending on the number of components ``K`` and the minimum weight
``L``. :func:`gamma_cutoff` turns that bound into a WEC cutoff;
:func:`epsilon_separation` is the L2 separation beyond which the cutoff is
exceeded with probability tending to one.

The quadrature routines are 1-d only and serve as oracles for the plug-in
estimator and for the bound checks in the test-suite.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .edgecount import count_edges, wec_statistic
from .errors import QuadratureNonconvergent
from .geometry import as_points, pooled_lmst

__all__ = [
    "AsymptoticParams",
    "Density1D",
    "gamma_cutoff",
    "epsilon_separation",
    "hp_divergence_estimate",
    "hp_divergence_quadrature",
    "hp_divergence_upper_bound",
    "hp_divergence_lower_bound",
    "l2_distance_sq",
    "truncated_l2_condition",
]


@dataclass(frozen=True)
class AsymptoticParams:
    """Constants entering the asymptotic WEC cutoff.

    ell : number of spanning trees in the similarity graph.
    rho : limiting ratio n / m.
    k : number of baseline mixture components.
    l_bound : lower bound on the baseline mixture weights, at most 1 / k.
    m1, m2 : lower and upper density bounds on the common support.
    """

    ell: int = 1
    rho: float = 1.0
    k: int = 1
    l_bound: float = 1.0
    m1: float = 1.0
    m2: float = 1.0

    def __post_init__(self):
        if self.ell < 1 or self.k < 1:
            raise ValueError("ell and k must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not 0 < self.l_bound or self.l_bound * self.k > 1 + 1e-12:
            raise ValueError("l_bound must lie in (0, 1/k]")
        if not 0 < self.m1 <= self.m2:
            raise ValueError("need 0 < m1 <= m2")


@dataclass(frozen=True)
class Density1D:
    """A univariate density supported on ``[a, b]`` (it may be zero inside)."""

    pdf: Callable[[float], float]
    a: float
    b: float

    def __call__(self, t):
        if t < self.a or t > self.b:
            return 0.0
        return float(self.pdf(t))

    def total_mass(self) -> float:
        return _quad(self, self.a, self.b)


def gamma_cutoff(p: AsymptoticParams) -> float:
    """``ell rho / (1 + rho)^2 * (1 + (1 + rho) K^2 / (L rho^2))``."""
    rho = p.rho
    return p.ell * rho / (1 + rho) ** 2 * hp_divergence_upper_bound(rho, p.k, p.l_bound)


def epsilon_separation(p: AsymptoticParams) -> float:
    """``sqrt(2 M2^3 (1 + rho)^3 K^2 / (M1^2 rho^3 L))``."""
    rho = p.rho
    return math.sqrt(2 * p.m2**3 * (1 + rho) ** 3 * p.k**2 / (p.m1**2 * rho**3 * p.l_bound))


def hp_divergence_upper_bound(rho: float, k: int, l_bound: float) -> float:
    """Upper bound on the divergence for any Y density in the mixture null."""
    return 1 + (1 + rho) * k**2 / (l_bound * rho**2)


def hp_divergence_lower_bound(rho: float, m1: float, m2: float, l2_sq: float) -> float:
    """Lower bound ``1 + rho M1^2 / (M2^3 (1+rho)^2) * ||f_Y - f_X||_2^2``."""
    return 1 + rho * m1**2 / (m2**3 * (1 + rho) ** 2) * l2_sq


def hp_divergence_estimate(x, y, ell: int = 1) -> float:
    """Plug-in divergence estimate from the WEC statistic of the pooled l-MST.

    Inverts ``R_w -> ell rho / (1 + rho)^2 * delta`` with ``rho = n / m``.
    """
    x = as_points(x, "x")
    y = as_points(y, "y")
    n, m = len(x), len(y)
    if n < 2 or m < 2:
        raise ValueError("both samples need at least 2 points")
    rw = wec_statistic(count_edges(pooled_lmst(x, y, ell)), n, m)
    rho = n / m
    return rw * (1 + rho) ** 2 / (ell * rho)


def _breakpoints(*dens):
    return sorted({float(v) for f in dens for v in (f.a, f.b)})


def _quad(fn, a, b, points=None, tol=1e-6) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            inner = [p for p in (points or []) if a < p < b] or None
            val, err = integrate.quad(fn, a, b, points=inner, epsabs=tol, epsrel=1e-10, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonconvergent(str(exc)) from exc
    if not np.isfinite(val) or err > 10 * tol:
        raise QuadratureNonconvergent(f"quadrature error estimate {err:.2e} exceeds tolerance")
    return val


def _integrate_union(fn, fx: Density1D, fy: Density1D, extra_points=()):
    cuts = _breakpoints(fx, fy)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            total += _quad(fn, a, b, points=list(extra_points))
    return total


def hp_divergence_quadrature(fx: Density1D, fy: Density1D, rho: float,
                             points=()) -> float:
    """Henze-Penrose divergence ``int (rho f^2 + g^2) / (rho f + g)`` by quadrature.

    The integrand is taken as 0 where both densities vanish. ``points`` may
    list interior locations where the integrand is irregular (e.g. mixture
    modes) to help the adaptive rule.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")

    def integrand(t):
        f = fx(t)
        g = fy(t)
        den = rho * f + g
        return 0.0 if den <= 0 else (rho * f * f + g * g) / den

    return _integrate_union(integrand, fx, fy, points)


def l2_distance_sq(fx: Density1D, fy: Density1D, points=()) -> float:
    return _integrate_union(lambda t: (fy(t) - fx(t)) ** 2, fx, fy, points)


def truncated_l2_condition(fx: Density1D, fy: Density1D, p: AsymptoticParams,
                           kappa: float, points=()) -> bool:
    """Whether the L2 distance over ``{f_X > kappa}`` reaches ``eps~^2 / kappa^2``.

    ``eps~`` is the separation constant with the density lower bound ``M1``
    dropped; this replaces the requirement that ``f_X`` be bounded below.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    eps_sq = 2 * p.m2**3 * (1 + p.rho) ** 3 * p.k**2 / (p.rho**3 * p.l_bound)
    mass = _integrate_union(
        lambda t: (fy(t) - fx(t)) ** 2 if fx(t) > kappa else 0.0, fx, fy, points
    )
    return mass >= eps_sq / kappa**2
