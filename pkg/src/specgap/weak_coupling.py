"""Weak-coupling quantities: the coupling constant m, leading-order eigenvalue
predictions, the split fractional resolvent kernel, and the Fourier-space
quadratic-form witness for potentials with positive mean.

Fourier transforms are unitary, so m = int |V^(k)|^2 / a(k) dk equals
int int V(x) V(y) g0(x - y) dx dy with g0(z) = -(1/2pi) ln|z| (d = 2, alpha = 2)
or g0(z) = -c2(alpha) |z|^(alpha-1) (d = 1), the finite part of the
resolvent kernel at lambda = 0 (additive constants drop out for mean-zero V).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from . import core_model as cm
from . import quadrature as q
from .errors import DivergentCouplingError, DomainError, QuadratureError
from .specfun import alpha_constants, c1_alpha, c2_alpha

MEAN_TOL = 1e-10


class Regime(str, Enum):
    LOG2D = "Log2D"
    FRACTIONAL1D = "Fractional1D"


@dataclass(frozen=True)
class CouplingConstant:
    m_fourier: float
    m_position: Optional[float]
    discrepancy: Optional[float]

    def to_dict(self):
        return {"m_fourier": self.m_fourier, "m_position": self.m_position,
                "discrepancy": self.discrepancy}


@dataclass(frozen=True)
class SecularPrediction:
    sigma: float
    lam: float
    regime: Regime
    alpha: float

    def to_dict(self):
        return {"sigma": self.sigma, "lambda_predicted": self.lam, "regime": self.regime.value,
                "alpha": self.alpha}


def _regime_for(symbol):
    if not isinstance(symbol, cm.PowerLaw):
        raise DomainError("coupling constant needs a power-law symbol")
    d, a = symbol.dimension, symbol.alpha
    if d == 2 and a == 2.0:
        return Regime.LOG2D
    if d == 1 and 1.0 < a <= 2.0:
        return Regime.FRACTIONAL1D
    raise DomainError(f"weak coupling covers d=2 with alpha=2 and d=1 with alpha in (1,2]; got d={d}, alpha={a}")


def _profile_delta(block, k):
    """block^(k) - block^(0), without cancellation for Gaussians."""
    if isinstance(block, cm.GaussianBump):
        return block.amplitude * block.width**block.dimension * np.expm1(-0.5 * (block.width * k) ** 2)
    return block.fourier_profile(k) - block.fourier_profile(np.zeros_like(k))


def _check_mean_zero(V):
    terms = cm.radial_terms(V)
    if terms is None:
        raise DomainError(f"coupling constant needs radial building blocks, got {V.kind}")
    total = sum(w * b.integral() for w, b, _ in terms)
    scale = sum(abs(w * b.integral()) for w, b, _ in terms)
    if abs(total) > MEAN_TOL * max(scale, 1e-300):
        raise DivergentCouplingError(
            f"int V = {total:.6g} != 0: m diverges at k = 0 (positive mean binds by the quadratic-form "
            "argument instead; see quadform_witness)")
    return terms, scale


def m_fourier(V, symbol, rtol=1e-12):
    """Radial quadrature of the angular average of |V^(k)|^2 / a(k).

    |V^|^2 averaged over directions is (sum_i w_i D_i)^2 - sum_ij w_i w_j g_i g_j (1 - <cos>)
    with D_i = g_i(k) - g_i(0); both pieces are computed without cancellation.
    """
    _regime_for(symbol)
    terms, _ = _check_mean_zero(V)
    d = V.dimension
    sd = q.sphere_area(d)
    seps = [[float(np.linalg.norm(ci - cj)) for _, _, cj in terms] for _, _, ci in terms]

    def integrand_vec(k):
        k = np.asarray(k, dtype=float)
        lin = sum(w * _profile_delta(b, k) for w, b, _ in terms)
        val = lin * lin
        g = [w * b.fourier_profile(k) for w, b, _ in terms]
        for i in range(len(terms)):
            for j in range(len(terms)):
                if seps[i][j] > 0:
                    val = val - g[i] * g[j] * cm._one_minus_mean_cos(k * seps[i][j], d)
        return sd * k ** (d - 1) * val / np.asarray(symbol.radial(k), dtype=float)

    def integrand(k):
        return float(integrand_vec(np.array([k]))[0])

    sizes = [getattr(b, "scale", getattr(b, "support", 1.0)) for _, b, _ in terms]
    scale, kmax = max(sizes), 40.0 / min(sizes)
    pts = [0.1 / scale, 1.0 / scale, 4.0 / scale]
    head = q.quad(integrand, 0.0, kmax, rtol=rtol, atol=1e-300, points=pts, limit=1000)
    if all(isinstance(b, cm.GaussianBump) for _, b, _ in terms):
        return head  # Gaussian tails beyond 40/width are below 1e-300
    return head + _oscillatory_tail(integrand_vec, kmax, terms, seps, head, rtol)


def _oscillatory_tail(f, k0, terms, seps, head, rtol, max_blocks=24):
    """int_k0^inf f for an oscillating, power-decaying f >= 0.

    Dyadic blocks [K, 2K] of Gauss-Legendre panels shorter than a quarter period;
    once block sums decay geometrically the remainder is summed as a geometric series.
    """
    reach = [getattr(b, "support", math.inf) for _, b, _ in terms]
    reach = [r if math.isfinite(r) else 10.0 * getattr(b, "scale", 1.0) for r, (_, b, _) in zip(reach, terms)]
    extent = max(seps[i][j] + reach[i] + reach[j] for i in range(len(terms)) for j in range(len(terms)))
    width = 0.25 * math.pi / max(extent, 1e-300)
    x, w = q.gauss_legendre(16)
    total, prev, lo = 0.0, None, k0
    for _ in range(max_blocks):
        hi = 2.0 * lo
        n = int(math.ceil((hi - lo) / width))
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)[:, None]
        kk = (edges[:-1, None] + half * (x + 1.0)).ravel()
        block = float(np.sum((half * w).ravel() * f(kk)))
        total += block
        if prev is not None and prev > 0 and 0 <= block < prev:
            ratio = block / prev
            rest = block * ratio / (1.0 - ratio)
            if rest <= rtol * abs(head + total):
                return total + rest
        prev, lo = block, hi
    raise QuadratureError(f"oscillatory tail of m from k = {k0} did not settle in {max_blocks} dyadic blocks")


def _pair_kernel_average(regime, alpha, s2, sep):
    """int N(z; sep, s2) g0(z) dz for an isotropic Gaussian density of variance s2 per axis."""
    s = math.sqrt(s2)
    if regime is Regime.LOG2D:
        # Newton: the circle average of ln|sep + r w| is ln max(r, |sep|)
        def f(r):
            return r * math.exp(-0.5 * r * r / s2) / s2 * math.log(max(r, sep))

        pts = [sep] if sep > 0 else None
        val = q.quad(f, 0.0, 40.0 * s + sep, rtol=1e-13, atol=1e-300, points=pts, limit=400)
        return -val / (2.0 * math.pi)
    c2 = 0.5 if alpha == 2.0 else c2_alpha(alpha)

    def f1(z):
        return math.exp(-0.5 * z * z / s2) / math.sqrt(2.0 * math.pi * s2) * abs(z + sep) ** (alpha - 1.0)

    lo, hi = -sep - 40.0 * s, -sep + 40.0 * s
    val = q.quad(f1, min(lo, -40 * s), max(hi, 40 * s), rtol=1e-13, atol=1e-300, points=[-sep, 0.0], limit=400)
    return -c2 * val


def m_position(V, symbol):
    """Double integral of V(x)V(y) g0(x - y) for sums of Gaussian bumps."""
    regime = _regime_for(symbol)
    terms, _ = _check_mean_zero(V)
    if not all(isinstance(b, cm.GaussianBump) for _, b, _ in terms):
        raise DomainError("position-space m is implemented for Gaussian building blocks")
    d = V.dimension
    total = 0.0
    for wi, bi, ci in terms:
        for wj, bj, cj in terms:
            s2 = bi.width**2 + bj.width**2
            # int g_i(u) g_j(u - z) du = mass_i mass_j N(z; 0, s2)
            mass = wi * bi.integral() * wj * bj.integral()
            sep = float(np.linalg.norm(ci - cj))
            total += mass * _pair_kernel_average(regime, symbol.alpha, s2, sep)
    return total


def coupling_constant_m(V, symbol):
    """m by the Fourier route and, for Gaussian blocks, the position route."""
    terms, scale = _check_mean_zero(V)
    if scale == 0.0:
        return CouplingConstant(0.0, 0.0, 0.0)
    mf = m_fourier(V, symbol)
    try:
        mp = m_position(V, symbol)
    except DomainError:
        return CouplingConstant(mf, None, None)
    return CouplingConstant(mf, mp, abs(mf - mp))


def predict_lambda(sigma, m, regime, alpha=2.0):
    """Leading-order root of the secular equation (o(1) terms dropped)."""
    regime = Regime(regime)
    if not sigma > 0 or not m > 0:
        raise DomainError("predict_lambda needs sigma > 0 and m > 0")
    if regime is Regime.LOG2D:
        if alpha != 2.0:
            raise DomainError("Log2D regime fixes alpha = 2")
        lam = -math.exp(-4.0 * math.pi / (sigma * sigma * m))
    else:
        if not 1.0 < alpha <= 2.0:
            raise DomainError("Fractional1D needs alpha in (1, 2]")
        lam = -((c1_alpha(alpha) * sigma * sigma * m) ** (alpha / (alpha - 1.0)))
    return SecularPrediction(float(sigma), lam, regime, float(alpha))


# ------------------------------------------------------ fractional kernel

def _h(nu, alpha):
    """int_0^inf (cos s - 1) / (nu + s^alpha) ds for nu >= 0, alpha in (1, 2]."""
    def head_f(s):
        if s < 1e-4:
            num = -0.5 * s * s * (1.0 - s * s / 12.0)
        else:
            num = -2.0 * math.sin(0.5 * s) ** 2
        return num / (nu + s**alpha)

    knee = nu ** (1.0 / alpha)
    # beyond T the amplitude decays monotonically; whole periods keep QAWF's cycles aligned
    T = 2.0 * math.pi * math.ceil((1.0 + 4.0 * knee) / (2.0 * math.pi))
    pts = [knee] if 0.0 < knee < T else None
    head = q.quad(head_f, 0.0, T, rtol=1e-13, atol=1e-300, points=pts, limit=2000)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            # cosine tail after one integration by parts
            rest = integrate.quad(lambda s: alpha * s ** (alpha - 1.0) / (nu + s**alpha) ** 2, T, np.inf,
                                  weight="sin", wvar=1.0, epsabs=1e-13, limlst=200)[0]
            # int_T^inf ds/(nu + s^alpha) = int_0^1 T t^(alpha-2) / (nu t^alpha + T^alpha) dt
            plain = integrate.quad(lambda t: T / (nu * t**alpha + T**alpha), 0.0, 1.0, weight="alg",
                                   wvar=(alpha - 2.0, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)[0]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"resolvent tail did not converge: {exc}") from None
    cos_tail = -math.sin(T) / (nu + T**alpha) + rest
    return head + cos_tail - plain


def green_g_split(lam, x, alpha):
    """g(lam, x) = G(lam, x) - c1(alpha) |lam|^((1-alpha)/alpha).

    G(lam, x) = (1/pi) int_0^inf cos(kx) / (|lam| + k^alpha) dk. After s = k|x|,
    g = |x|^(alpha-1)/pi * h(|lam| |x|^alpha), so |g| <= c2(alpha) |x|^(alpha-1)
    and g(0, x) = -c2(alpha) |x|^(alpha-1).
    """
    if lam > 0:
        raise DomainError("green_g_split needs lambda <= 0")
    if not 1.0 < alpha <= 2.0:
        raise DomainError("green_g_split needs alpha in (1, 2]")
    ax = abs(float(x))
    if ax == 0.0:
        raise DomainError("green_g_split needs x != 0")
    if lam == 0.0:
        c2 = 0.5 if alpha == 2.0 else c2_alpha(alpha)
        return -c2 * ax ** (alpha - 1.0)
    return ax ** (alpha - 1.0) / math.pi * _h(-lam * ax**alpha, alpha)


def green_G(lam, x, alpha):
    if not lam < 0:
        raise DomainError("green_G needs lambda < 0")
    return c1_alpha(alpha) * (-lam) ** ((1.0 - alpha) / alpha) + green_g_split(lam, x, alpha)


def green_bound_constant(alpha):
    """The frozen C with |g(lam, x)| <= C |x|^(alpha-1): C = c2(alpha)."""
    return alpha_constants(alpha).c2


# ------------------------------------------------------- quadratic form

@dataclass(frozen=True)
class QuadformWitness:
    eps: float
    eps1: float
    v0: float
    I1: float
    I2: float
    form_value: float
    found: bool
    history: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {"eps": self.eps, "eps1": self.eps1, "v0": self.v0, "I1": self.I1, "I2": self.I2,
                "form_value": self.form_value, "found": self.found,
                "history": [list(h) for h in self.history]}


def _radial_hat(V):
    terms = cm.radial_terms(V)
    if terms is None or any(np.any(c != 0) for _, _, c in terms):
        raise DomainError("quadform_witness needs a radial potential centred at the origin")

    def vhat(k):
        return sum(w * b.fourier_profile(k) for w, b, _ in terms)

    return vhat


def select_eps1(vhat, kmax=1e6):
    """eps1: largest radius with vhat > vhat(0)/2 on the ball of radius 2 eps1."""
    v0 = float(vhat(np.array([0.0]))[0])
    if not v0 > 0:
        raise DomainError("quadform_witness needs V^(0) > 0 (positive mean)")
    ks = np.concatenate([[0.0], np.logspace(-8, math.log10(kmax), 4000)])
    vals = vhat(ks)
    bad = np.nonzero(vals <= 0.5 * v0)[0]
    if len(bad) == 0:
        return kmax / 2.0, 0.5 * v0
    lo, hi = ks[bad[0] - 1], ks[bad[0]]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if vhat(np.array([mid]))[0] > 0.5 * v0:
            lo = mid
        else:
            hi = mid
    return 0.5 * lo, float(np.min(vhat(np.linspace(0.0, lo, 2001))))


def _log_nodes(eps, eps1, per_unit=8, order=8):
    """Composite Gauss-Legendre nodes in u = ln r over [ln eps, ln eps1]."""
    a, b = math.log(eps), math.log(eps1)
    panels = max(1, int(math.ceil((b - a) * per_unit / order)))
    edges = np.linspace(a, b, panels + 1)
    x, w = q.gauss_legendre(order)
    u = (edges[:-1, None] + 0.5 * (edges[1:] - edges[:-1])[:, None] * (x + 1.0)).ravel()
    wu = (0.5 * (edges[1:] - edges[:-1])[:, None] * w).ravel()
    return u, wu


def quadform_terms(symbol, vhat, eps, eps1, angular=48):
    """I1 = int a(k)|k|^-2d and I2 = (2pi)^(-d/2) int int V^(k - xi)|k|^-d |xi|^-d over the annulus pair."""
    d = symbol.dimension
    u, wu = _log_nodes(eps, eps1)
    r = np.exp(u)
    I1 = q.sphere_area(d) * float(np.dot(wu, np.asarray(symbol.radial(r)) * r ** (-d)))
    rr, ss = r[:, None], r[None, :]
    wgt = wu[:, None] * wu[None, :]
    if d == 1:
        # sign pairs: (+,+), (-,-) give |r - s|; (+,-), (-,+) give r + s
        block = 2.0 * vhat(np.abs(rr - ss)) + 2.0 * vhat(rr + ss)
        I2 = float(np.sum(wgt * block)) / math.sqrt(2.0 * math.pi)
    elif d == 2:
        th, wt = q.gauss_legendre(angular, 0.0, math.pi)
        acc = np.zeros_like(wgt)
        for t, w in zip(th, wt):
            acc += 2.0 * w * vhat(np.sqrt(np.maximum(rr * rr + ss * ss - 2.0 * rr * ss * math.cos(t), 0.0)))
        I2 = 2.0 * math.pi * float(np.sum(wgt * acc)) / (2.0 * math.pi)
    else:
        raise DomainError("quadform_witness covers d in {1, 2}")
    return I1, I2


def quadform_witness(symbol, V, sigma, eps_floor=1e-12):
    """Halve eps from eps1/2 until I1 - sigma I2 < 0 or eps drops below eps_floor.

    The test function is psi^(k) = |k|^-d on eps < |k| < eps1.
    """
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if symbol.dimension != V.dimension:
        raise DomainError("symbol and potential dimensions differ")
    vhat = _radial_hat(V)
    eps1, v0 = select_eps1(vhat)
    eps = 0.5 * eps1
    history = []
    while True:
        I1, I2 = quadform_terms(symbol, vhat, eps, eps1)
        form = I1 - sigma * I2
        history.append((eps, I1, I2, form))
        if form < 0:
            return QuadformWitness(eps, eps1, v0, I1, I2, form, True, tuple(history))
        if eps * 0.5 < eps_floor:
            return QuadformWitness(eps, eps1, v0, I1, I2, form, False, tuple(history))
        eps *= 0.5
