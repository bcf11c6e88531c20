"""Double precision Bessel functions J0, J1, K0, K1 and the resolvent constants c1, c2.

The Bessel routines are self-contained (no scipy.special):

* J0, J1: power series on [0, 8], Miller backward recurrence on (8, 25],
  Hankel asymptotic expansion beyond 25.
* K0, K1: ascending series on (0, 2], Steed's continued fraction (CF2) beyond.

All four accept scalars or arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
J0_FIRST_ZERO = 2.404825557695772768622

_SERIES_EDGE = 8.0
_MILLER_EDGE = 25.0
_K_SERIES_EDGE = 2.0


def _wrap(fn):
    def wrapped(x):
        arr = np.asarray(x, dtype=float)
        out = fn(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    wrapped.__name__ = fn.__name__.lstrip("_")
    wrapped.__doc__ = fn.__doc__
    return wrapped


# ---------------------------------------------------------------- J0 / J1

def _j_series(x, order):
    q = -0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, 40):
        term = term * q / (k * (k + order))
        total += term
    return total


def _j_miller(x):
    # Backward recurrence from an even start index; normalised with
    # J0 + 2 (J2 + J4 + ...) = 1.
    start = 2 * int((float(x.max()) + 36.0) / 2.0)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for n in range(start, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{n-1}
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        if n - 1 == 1:
            j1 = j_cur.copy()
        big = np.abs(j_cur) > 1e250
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            j_cur, j_next, norm, j1 = j_cur * scale, j_next * scale, norm * scale, j1 * scale
    norm += j_cur
    return j_cur / norm, j1 / norm


def _hankel(x, order):
    mu = 4.0 * order * order
    z = 8.0 * x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full_like(x, np.inf)
    for k in range(1, 60):
        term = term * (mu - (2 * k - 1) ** 2) / (k * z)
        mag = np.abs(term)
        use = mag < last
        if not use.any():
            break
        contrib = np.where(use, term, 0.0)
        if k % 4 == 1:
            q += contrib
        elif k % 4 == 2:
            p -= contrib
        elif k % 4 == 3:
            q -= contrib
        else:
            p += contrib
        last = np.where(use, mag, 0.0)
        if float(mag.max()) < 1e-18:
            break
    chi = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _j01(x):
    ax = np.abs(x)
    j0 = np.empty_like(ax)
    j1 = np.empty_like(ax)
    lo = ax <= _SERIES_EDGE
    mid = (ax > _SERIES_EDGE) & (ax <= _MILLER_EDGE)
    hi = ax > _MILLER_EDGE
    if lo.any():
        j0[lo] = _j_series(ax[lo], 0)
        j1[lo] = _j_series(ax[lo], 1)
    if mid.any():
        j0[mid], j1[mid] = _j_miller(ax[mid])
    if hi.any():
        j0[hi] = _hankel(ax[hi], 0)
        j1[hi] = _hankel(ax[hi], 1)
    return j0, np.sign(x) * j1 if np.any(x < 0) else j1


def _bessel_j0(x):
    """Bessel function of the first kind, order 0."""
    return _j01(x)[0]


def _bessel_j1(x):
    """Bessel function of the first kind, order 1."""
    return _j01(x)[1]


bessel_j0 = _wrap(_bessel_j0)
bessel_j1 = _wrap(_bessel_j1)


# ---------------------------------------------------------------- K0 / K1

def _k_series(x):
    q = 0.25 * x * x
    log_half = np.log(0.5 * x)
    # I0, I1 and the harmonic-number sums of the ascending expansions
    term0 = np.ones_like(x)
    i0 = term0.copy()
    s0 = np.zeros_like(x)
    term1 = np.ones_like(x)  # (x^2/4)^k / (k! (k+1)!)
    s1 = (1.0 - EULER_GAMMA) + (-EULER_GAMMA) + np.zeros_like(x)  # psi(1) + psi(2)
    i1_sum = term1.copy()
    harmonic = 0.0
    for k in range(1, 40):
        harmonic += 1.0 / k
        term0 = term0 * q / (k * k)
        i0 += term0
        s0 += term0 * harmonic
        term1 = term1 * q / (k * (k + 1))
        i1_sum += term1
        psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (k + 1)
        s1 += term1 * psi_sum
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    i1 = 0.5 * x * i1_sum
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    return k0, k1


def _k_steed(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 400):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if float(np.max(np.abs(dels / s))) < 1e-17:
            break
    h = a1 * h
    k0 = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _k01(x):
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise DomainError("modified Bessel K0/K1 require finite x > 0")
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    lo = x <= _K_SERIES_EDGE
    if lo.any():
        k0[lo], k1[lo] = _k_series(x[lo])
    if (~lo).any():
        k0[~lo], k1[~lo] = _k_steed(x[~lo])
    return k0, k1


def _bessel_k0(x):
    """Modified Bessel function of the second kind, order 0 (x > 0)."""
    return _k01(x)[0]


def _bessel_k1(x):
    """Modified Bessel function of the second kind, order 1 (x > 0)."""
    return _k01(x)[1]


bessel_k0 = _wrap(_bessel_k0)
bessel_k1 = _wrap(_bessel_k1)


def bessel_k01(x):
    """Return ``(K0(x), K1(x))`` from a single evaluation."""
    arr = np.asarray(x, dtype=float)
    k0, k1 = _k01(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(k0[0]), float(k1[0])
    return k0.reshape(arr.shape), k1.reshape(arr.shape)


def bessel_j01(x):
    """Return ``(J0(x), J1(x))`` from a single evaluation."""
    arr = np.asarray(x, dtype=float)
    j0, j1 = _j01(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(j0[0]), float(j1[0])
    return j0.reshape(arr.shape), j1.reshape(arr.shape)


def j0_first_zero(tol=1e-15):
    """First positive zero of J0, by bisection on the implemented J0."""
    lo, hi = 2.0, 3.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bessel_j0(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------- resolvent constants

@dataclass(frozen=True)
class AlphaConstants:
    alpha: float
    c1: float
    c2: float


def c1_closed_form(alpha):
    return 1.0 / (alpha * math.sin(math.pi / alpha))


def c1_alpha(alpha):
    """``(1/pi) * int_0^inf ds / (1 + s**alpha)`` for alpha in (1, 2].

    The range is split at s = 1; the tail is mapped to (0, 1] by s -> 1/t, where
    the algebraic endpoint singularity t**(alpha-2) is handled by QUADPACK's
    QAWS weight.
    """
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"c1_alpha needs alpha in (1, 2], got {alpha}")
    head, _ = integrate.quad(lambda s: 1.0 / (1.0 + s**alpha), 0.0, 1.0,
                             epsabs=0.0, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(lambda t: 1.0 / (1.0 + t**alpha), 0.0, 1.0,
                             weight="alg", wvar=(alpha - 2.0, 0.0),
                             epsabs=0.0, epsrel=1e-13, limit=200)
    return (head + tail) / math.pi


def c2_alpha(alpha):
    """``(1/pi) * int_0^inf 2 sin^2(s/2) / s**alpha ds`` for alpha in (1, 2).

    ``2 sin^2(s/2) = 1 - cos s``. On [0, 1] the integrand is smooth after
    factoring s**(2-alpha); on [1, inf) the non-oscillatory part is exact and
    the cosine part goes through the Fourier-integral routine QAWF.
    """
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise DomainError(
            f"c2_alpha needs alpha in (1, 2); alpha=2 uses the explicit Laplacian kernel (got {alpha})")

    def smooth(s):
        if s < 1e-4:
            return 0.5 - s * s / 24.0
        return 2.0 * math.sin(0.5 * s) ** 2 / (s * s)

    head, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(2.0 - alpha, 0.0),
                             epsabs=0.0, epsrel=1e-13, limit=200)
    # one integration by parts: int_1^inf cos(s) s^-a = -sin 1 + a int_1^inf sin(s) s^-(a+1)
    sin_tail, _ = integrate.quad(lambda s: s ** (-alpha - 1.0), 1.0, np.inf, weight="sin", wvar=1.0,
                                 epsabs=1e-13, limlst=200)
    cos_tail = -math.sin(1.0) + alpha * sin_tail
    tail = 1.0 / (alpha - 1.0) - cos_tail
    return (head + tail) / math.pi


def alpha_constants(alpha):
    """Bundle c1 and c2; at alpha = 2, c2 = 1/2 is read off the 1D Laplacian kernel."""
    c2 = 0.5 if alpha == 2.0 else c2_alpha(alpha)
    return AlphaConstants(alpha=float(alpha), c1=c1_alpha(alpha), c2=c2)


def specfun_table(xs, alphas):
    """Rows for the regression snapshot CSV: (x, J0, J1, K0, K1) and (alpha, c1, c2)."""
    xs = np.asarray(xs, dtype=float)
    j0, j1 = bessel_j01(xs)
    k0, k1 = bessel_k01(xs)
    bessel_rows = [(float(x), float(a), float(b), float(c), float(d))
                   for x, a, b, c, d in zip(xs, j0, j1, k0, k1)]
    const_rows = []
    for a in alphas:
        ac = alpha_constants(a)
        const_rows.append((ac.alpha, ac.c1, ac.c2))
    return bessel_rows, const_rows
