"""Half-line Neumann problem psi'' + sigma V psi = 0, psi(0) = 1, psi'(0) = 0.

Shooting traces with zero-crossing detection, Jost solutions psi_1 ~ 1 and
psi_2 ~ x at infinity from the Picard iteration for z = psi_1 - 1, the
small-sigma coefficients a, b, c^2, and the truncated test-function form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import core_model as cm
from . import quadrature as q
from .errors import ContractionError, DomainError, MissingZeroCrossing, StepSizeUnderflow

X_MAX_CAP = 1e4
TAIL_TOL = 1e-12


def _v(spec, x):
    x = np.asarray(x, dtype=float)
    return np.asarray(spec.evaluate(x), dtype=float).reshape(x.shape)


def _profile_slope(block, r):
    if isinstance(block, cm.GaussianBump):
        return -r / block.width**2 * block.profile(r)
    if isinstance(block, cm.ExponentialBump):
        return -block.rate * block.profile(r)
    if isinstance(block, cm.RadialWell):
        return np.zeros_like(r)
    raise DomainError("no analytic slope")


def potential_slope(spec, x):
    """V'(x) in d = 1: analytic for radial blocks, central differences otherwise."""
    x = np.asarray(x, dtype=float)
    terms = cm.radial_terms(spec)
    if terms is not None:
        out = np.zeros_like(x)
        for w, block, c in terms:
            diff = x - c[0]
            out = out + w * _profile_slope(block, np.abs(diff)) * np.sign(diff)
        return out
    h = 1e-5
    return (_v(spec, x + h) - _v(spec, x - h)) / (2.0 * h)


def _check_1d(spec):
    if spec.dimension != 1:
        raise DomainError("half-line problems need a one-dimensional potential")


def default_x_max(spec):
    """Smallest dyadic X with int_X^inf x|V| dx < 1e-12, capped at 1e4."""
    _check_1d(spec)

    def f(x):
        return x * abs(float(_v(spec, np.array([x]))[0]))

    X = 1.0
    while X < X_MAX_CAP:
        tail = q.quad(f, X, X + 64.0 * max(X, 1.0), rtol=1e-6, atol=1e-300, limit=400)
        if tail < TAIL_TOL:
            return X
        X *= 2.0
    return X_MAX_CAP


# ------------------------------------------------------------ shooting

@dataclass
class ShootingTrace:
    x: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    sigma: float
    x0: Optional[float]
    x_max: float
    extrapolated: bool = False
    dense: Optional[Callable] = field(default=None, repr=False)

    def to_rows(self):
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.psi, self.dpsi)]

    def certificate_dict(self):
        return {"sigma": self.sigma, "x0": self.x0, "x_max": self.x_max,
                "x0_beyond_x_max": self.extrapolated, "samples": int(len(self.x))}


def _rk4(rhs, y0, x_end, step):
    n = max(1, int(math.ceil(x_end / step)))
    h = x_end / n
    xs = np.linspace(0.0, x_end, n + 1)
    ys = np.empty((n + 1, 2))
    ys[0] = y0
    y = np.array(y0, dtype=float)
    for i in range(n):
        x = xs[i]
        k1 = rhs(x, y)
        k2 = rhs(x + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(x + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return xs, ys


def _hermite_root(x0, x1, p0, p1, d0, d1):
    """Zero of the cubic Hermite interpolant on [x0, x1] with p0 > 0 >= p1."""
    h = x1 - x0

    def cubic(t):
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1

    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if cubic(mid) > 0:
            lo = mid
        else:
            hi = mid
    return x0 + 0.5 * (lo + hi) * h


def integrate_ivp(V, sigma, x_max=None, method="adaptive", step=None, rtol=1e-10):
    """Solve psi'' = -sigma V psi from psi(0)=1, psi'(0)=0 up to x_max.

    ``method``: "adaptive" (RK45, local error <= rtol) or "rk4" (fixed ``step``).
    Past x_max the solution is free (linear); a crossing there is located exactly
    and flagged ``extrapolated``.
    """
    _check_1d(V)
    if x_max is None:
        x_max = default_x_max(V)

    def rhs(x, y):
        return np.array([y[1], -sigma * float(_v(V, np.array([x]))[0]) * y[0]])

    dense = None
    if method == "rk4":
        if step is None:
            raise DomainError("rk4 needs a step")
        xs, ys = _rk4(rhs, [1.0, 0.0], x_max, step)
        psi, dpsi = ys[:, 0], ys[:, 1]
    elif method == "adaptive":
        def crossing(x, y):
            return y[0]

        crossing.direction = -1
        sol = integrate.solve_ivp(rhs, (0.0, x_max), [1.0, 0.0], method="RK45", rtol=rtol,
                                  atol=1e-14, dense_output=True, events=crossing, max_step=x_max / 8.0)
        if sol.status == -1:
            raise StepSizeUnderflow(f"integration failed: {sol.message}")
        xs, psi, dpsi = sol.t, sol.y[0], sol.y[1]
        dense = sol.sol
    else:
        raise DomainError(f"unknown method {method!r}")

    x0 = None
    extrapolated = False
    neg = np.nonzero(psi <= 0.0)[0]
    if len(neg):
        i = neg[0]
        x0 = _hermite_root(xs[i - 1], xs[i], psi[i - 1], psi[i], dpsi[i - 1], dpsi[i])
    elif dpsi[-1] < 0:
        x0 = float(xs[-1] + psi[-1] / -dpsi[-1])
        extrapolated = True
        xs = np.append(xs, x0)
        psi = np.append(psi, 0.0)
        dpsi = np.append(dpsi, dpsi[-1])
    return ShootingTrace(np.asarray(xs), np.asarray(psi), np.asarray(dpsi), float(sigma),
                         None if x0 is None else float(x0), float(x_max), extrapolated, dense)


def _hermite_trapezoid(x, f, df):
    """Trapezoid rule with the end corrections h^2/12 (f'_i - f'_{i+1}); exact for cubics."""
    h = np.diff(x)
    return float(np.sum(0.5 * h * (f[:-1] + f[1:]) + h * h / 12.0 * (df[:-1] - df[1:])))


@dataclass(frozen=True)
class FormCertificate:
    x0: float
    form_sigma: float
    form_double: float
    kinetic: float

    def to_dict(self):
        return {"x0": self.x0, "form_sigma": self.form_sigma, "form_2sigma": self.form_double,
                "kinetic": self.kinetic}


def truncated_form_value(V, sigma, trace, resample=20000):
    """Quadratic form of phi = psi_0 on [0, x0] (zero beyond) at sigma and at 2 sigma.

    int phi'^2 - s int V phi^2 by Hermite-corrected trapezoid on ``resample``
    uniform points from the dense interpolant (on the raw trace samples when
    ``resample`` is None/0 or the trace has no interpolant, e.g. rk4).
    """
    if trace.x0 is None:
        raise MissingZeroCrossing("trace has no zero crossing; the truncated test function is undefined")
    x0 = trace.x0
    if resample and trace.dense is not None:
        stop = min(x0, trace.x_max)
        xs = np.linspace(0.0, stop, int(resample) + 1)
        y = trace.dense(xs)
        psi, dpsi = y[0], y[1]
        if stop < x0:  # free linear tail to the extrapolated crossing
            xs = np.append(xs, x0)
            psi = np.append(psi, 0.0)
            dpsi = np.append(dpsi, dpsi[-1])
        else:
            psi[-1] = 0.0
    else:
        keep = trace.x < x0
        xs = np.append(trace.x[keep], x0)
        psi = trace.psi[keep]
        dpsi = trace.dpsi[keep]
        # end values at x0 from the last step's cubic Hermite data
        psi = np.append(psi, 0.0)
        d_end = trace.dpsi[np.searchsorted(trace.x, x0)] if x0 <= trace.x[-1] else trace.dpsi[-1]
        dpsi = np.append(dpsi, d_end)
    v = _v(V, xs)
    dv = potential_slope(V, xs)
    ddpsi = -sigma * v * psi
    kin = dpsi * dpsi
    dkin = 2.0 * dpsi * ddpsi
    pot = v * psi * psi
    dpot = dv * psi * psi + 2.0 * v * psi * dpsi
    K = _hermite_trapezoid(xs, kin, dkin)
    P = _hermite_trapezoid(xs, pot, dpot)
    return FormCertificate(float(x0), K - sigma * P, K - 2.0 * sigma * P, K)


# -------------------------------------------------------- Jost solutions

@dataclass(frozen=True)
class JostData:
    psi1_0: float
    dpsi1_0: float
    psi2_0: float
    dpsi2_0: float
    iterations: int
    alpha_contraction: float
    shift: float

    @property
    def B(self):
        """psi_0 = A psi_1 + B psi_2 with A = 1/psi_1(0), B = -psi_1'(0) (Wronskian 1)."""
        return -self.dpsi1_0

    @property
    def A(self):
        return 1.0 / self.psi1_0

    def to_dict(self):
        return {"psi1_0": self.psi1_0, "dpsi1_0": self.dpsi1_0, "psi2_0": self.psi2_0,
                "dpsi2_0": self.dpsi2_0, "iterations": self.iterations,
                "alpha_contraction": self.alpha_contraction, "shift": self.shift,
                "A": self.A, "B": self.B}


def _tail_moments(x, v):
    """int_x^X v and int_x^X xi v on the grid (composite Simpson, cumulative from the right)."""
    c0 = integrate.cumulative_simpson(v, x=x, initial=0.0)
    c1 = integrate.cumulative_simpson(x * v, x=x, initial=0.0)
    return c0[-1] - c0, c1[-1] - c1


def contraction_factor(V, sigma, shift, x_far):
    def f(x):
        return (x - shift) * abs(float(_v(V, np.array([x]))[0]))

    return sigma * q.quad(f, shift, x_far, rtol=1e-8, atol=1e-300, limit=800)


def jost_solution(V, sigma, x_far=None, points=None, tol=1e-12, max_iter=500):
    """psi_1(0), psi_1'(0) (and psi_2 with anchor 0) from the Picard iteration.

    z = -sigma P z - sigma int_x^inf (xi - x) V, P z = int_x^inf (xi - x) V z, is
    iterated on [s, x_far] where s is the smallest shift in {0, 1, 2, 4, ...} with
    sigma int_s^inf (x - s)|V| < 1; psi_1 is carried back to 0 by the ODE.
    """
    _check_1d(V)
    if x_far is None:
        x_far = default_x_max(V)
    shift = 0.0
    alpha = contraction_factor(V, sigma, shift, x_far)
    while alpha >= 1.0:
        shift = 1.0 if shift == 0.0 else 2.0 * shift
        if shift >= x_far:
            raise ContractionError(f"sigma int x|V| >= 1 for every origin shift up to {x_far}")
        alpha = contraction_factor(V, sigma, shift, x_far)
    if points is None:
        points = int(min(400001, max(20001, 200 * (x_far - shift)))) | 1
    x = np.linspace(shift, x_far, points)
    v = _v(V, x)
    m0, m1 = _tail_moments(x, v)
    forcing = -sigma * (m1 - x * m0)
    z = forcing.copy()
    it = 0
    for it in range(1, max_iter + 1):
        p0, p1 = _tail_moments(x, v * z)
        z_new = -sigma * (p1 - x * p0) + forcing
        change = float(np.max(np.abs(z_new - z)))
        z = z_new
        if change <= tol:
            break
    else:
        raise ContractionError("Picard iteration did not reach the tolerance")
    psi1 = 1.0 + z
    # psi_1'(x) = sigma int_x^inf V psi_1
    q0, _ = _tail_moments(x, v * psi1)
    y_s = (psi1[0], sigma * q0[0])
    if shift > 0:
        def rhs(t, y):
            return [y[1], -sigma * float(_v(V, np.array([t]))[0]) * y[0]]

        sol = integrate.solve_ivp(rhs, (shift, 0.0), list(y_s), method="DOP853", rtol=1e-12,
                                  atol=1e-14, dense_output=True)
        if sol.status == -1:
            raise StepSizeUnderflow(sol.message)
        if np.any(sol.y[0] <= 0):
            raise ContractionError("psi_1 vanishes on the back-integration segment")
        y0 = sol.y[:, -1]
    else:
        y0 = y_s
    if np.any(psi1 <= 0):
        raise ContractionError("psi_1 vanishes on the half-line; the anchor x0 = 0 is not available")
    return JostData(float(y0[0]), float(y0[1]), 0.0, float(1.0 / y0[0]), it, float(alpha), float(shift))


def jost_wronskian(V, sigma, jost, x_end, samples=200):
    """W(psi_1, psi_2) = psi_1 psi_2' - psi_1' psi_2 along an ODE trace from the data at 0."""
    def rhs(t, y):
        vv = -sigma * float(_v(V, np.array([t]))[0])
        return [y[1], vv * y[0], y[3], vv * y[2]]

    xs = np.linspace(0.0, x_end, samples)
    sol = integrate.solve_ivp(rhs, (0.0, x_end), [jost.psi1_0, jost.dpsi1_0, jost.psi2_0, jost.dpsi2_0],
                              method="DOP853", rtol=1e-12, atol=1e-14, t_eval=xs)
    p1, d1, p2, d2 = sol.y
    return xs, p1 * d2 - d1 * p2


# ------------------------------------------------------------ coefficients

@dataclass(frozen=True)
class ExpansionCoefficients:
    a: float
    b: float
    c2: float

    def to_dict(self):
        return {"a": self.a, "b": self.b, "c2": self.c2}


def expansion_coefficients(V, x_far=None, rtol=1e-10):
    """a = int xi V, b = int V, c^2 = int_0^inf (int_eta^inf V)^2 d eta over the half-line."""
    _check_1d(V)
    if x_far is None:
        x_far = default_x_max(V)
    diag = cm.diagnostics(V)
    if "bargman" in diag.divergent:
        raise DomainError("int x|V| diverges on the half-line; coefficients undefined")

    def v(x):
        return float(_v(V, np.array([x]))[0])

    pts = _breakpoints(V, x_far)
    # absolute floors relative to the |V| moments keep mean-zero V (a or b = 0) well posed
    mass = q.quad(lambda x: abs(v(x)), 0.0, x_far, rtol=rtol, atol=1e-300, points=pts, limit=1000)
    moment = q.quad(lambda x: x * abs(v(x)), 0.0, x_far, rtol=rtol, atol=1e-300, points=pts, limit=1000)
    a = q.quad(lambda x: x * v(x), 0.0, x_far, rtol=rtol, atol=rtol * moment, points=pts, limit=1000)
    b = q.quad(v, 0.0, x_far, rtol=rtol, atol=rtol * mass, points=pts, limit=1000)

    # tail T(eta) = int_eta^X V on a fine grid, then c^2 by Simpson
    xs = np.linspace(0.0, x_far, 200001)
    vv = _v(V, xs)
    cum = integrate.cumulative_simpson(vv, x=xs, initial=0.0)
    tail = cum[-1] - cum
    c2 = float(integrate.simpson(tail * tail, x=xs))
    return ExpansionCoefficients(float(a), float(b), c2)


def _breakpoints(V, x_far):
    terms = cm.radial_terms(V)
    pts = []
    if terms is not None:
        for _, block, c in terms:
            pts.append(float(c[0]))
            if math.isfinite(block.support):
                pts += [float(c[0]) - block.support, float(c[0]) + block.support]
    return [p for p in pts if 0.0 < p < x_far]


@dataclass(frozen=True)
class SigmaFit:
    a_fit: float
    b_fit: float
    second_order: float
    minus_ab_plus_c2: float
    plus_ab_plus_c2: float
    supported_sign: str

    def to_dict(self):
        return {"a_fit": self.a_fit, "b_fit": self.b_fit, "second_order_fit": self.second_order,
                "-ab+c2": self.minus_ab_plus_c2, "ab+c2": self.plus_ab_plus_c2,
                "supported": self.supported_sign}


def fit_sigma_expansion(V, sigmas=(1e-3, 2e-3, 4e-3), x_far=None):
    """Fit psi_1(0) = 1 - a s + k s^2 and psi_1'(0) = b s + k2 s^2 over the sigma list."""
    coeff = expansion_coefficients(V, x_far)
    rows = [jost_solution(V, s, x_far) for s in sigmas]
    s = np.asarray(sigmas)
    M = np.stack([s, s * s], axis=1)
    c_psi, *_ = np.linalg.lstsq(M, np.array([r.psi1_0 - 1.0 for r in rows]), rcond=None)
    c_dpsi, *_ = np.linalg.lstsq(M, np.array([r.dpsi1_0 for r in rows]), rcond=None)
    minus = -coeff.a * coeff.b + coeff.c2
    plus = coeff.a * coeff.b + coeff.c2
    k2 = float(c_dpsi[1])
    supported = "-ab+c2" if abs(k2 - minus) <= abs(k2 - plus) else "ab+c2"
    return SigmaFit(float(-c_psi[0]), float(c_dpsi[0]), k2, minus, plus, supported)
