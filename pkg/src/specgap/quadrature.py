"""Quadrature plumbing on top of QUADPACK (scipy.integrate.quad).

Everything the diagnostics need reduces to one-dimensional radial integrals,
possibly with an angular average over the unit sphere when a component is not
centred at the origin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import QuadratureError

DEFAULT_RTOL = 1e-8
GROWTH_LIMIT = 0.10


def sphere_area(d):
    """Surface area of the unit sphere S^{d-1}; 2 for d = 1."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d):
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def quad(f, a, b, rtol=DEFAULT_RTOL, atol=0.0, points=None, limit=400):
    """Adaptive Gauss-Kronrod integral; raises QuadratureError when QUADPACK gives up."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            kwargs = dict(epsabs=atol, epsrel=rtol, limit=limit)
            if points is not None and np.isfinite(a) and np.isfinite(b):
                pts = [p for p in points if a < p < b]
                if pts:
                    kwargs["points"] = pts
            val, err = integrate.quad(f, a, b, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {exc}") from None
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite quadrature value on [{a}, {b}]")
    return val


@dataclass(frozen=True)
class Refinement:
    """Result of a refinement sequence: converged value or a divergence flag."""

    value: float
    divergent: bool
    steps: int


def refine_until_stable(partial, start, rtol=DEFAULT_RTOL, max_steps=60, min_steps=2, atol=0.0):
    """Drive ``partial(level)`` over levels start, 2*start, 4*start, ...

    ``partial`` returns the integral over the first ``level`` units (radius or
    number of terms). Convergence: relative change <= rtol. Divergence: two
    successive refinements each grow the value by more than 10 %; also when the
    budget runs out without settling.
    """
    level = start
    prev = partial(level)
    grew = 0
    for step in range(1, max_steps + 1):
        level *= 2
        cur = partial(level)
        change = cur - prev
        if step >= min_steps and abs(change) <= max(rtol * abs(cur), atol, 1e-300):
            return Refinement(cur, False, step)
        if abs(prev) > atol and change / abs(prev) > GROWTH_LIMIT:
            grew += 1
            if grew >= 2:
                return Refinement(math.inf, True, step)
        else:
            grew = 0
        prev = cur
    return Refinement(math.inf, True, max_steps)


_GL_CACHE = {}


def gauss_legendre(n, a=-1.0, b=1.0):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x, w = _GL_CACHE[n]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def sphere_average(func, r, offset, d, nodes=64):
    """Average of ``func(rho)`` over the sphere |u| = r, with rho = |offset e1 + u|.

    d = 1 averages the two points offset +- r. For d >= 2 the average over the
    polar cosine t uses the weight (1 - t^2)^((d-3)/2).
    """
    if offset == 0.0 or r == 0.0:
        return func(np.array([math.hypot(offset, r)]))[0]
    if d == 1:
        vals = func(np.array([abs(offset + r), abs(offset - r)]))
        return 0.5 * (vals[0] + vals[1])
    if d == 2:
        theta, w = gauss_legendre(nodes, 0.0, math.pi)
        t = np.cos(theta)
        rho = np.sqrt(np.maximum(offset * offset + r * r + 2.0 * offset * r * t, 0.0))
        return float(np.dot(w, func(rho))) / math.pi
    t, w = gauss_legendre(nodes)
    weight = (1.0 - t * t) ** ((d - 3) / 2.0)
    rho = np.sqrt(np.maximum(offset * offset + r * r + 2.0 * offset * r * t, 0.0))
    return float(np.dot(w * weight, func(rho)) / np.dot(w, weight))
