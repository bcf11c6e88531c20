"""Operator symbols a(k), potentials V(x) and the integrability diagnostics.

Symbols and potentials are frozen dataclasses. Each serialises to a JSON-ready
dict tagged with ``"kind"``; :func:`symbol_from_dict` / :func:`potential_from_dict`
invert that exactly.

Fourier transforms use the unitary convention
``f^(k) = (2 pi)^(-d/2) int f(x) exp(-i k.x) dx``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import quadrature as q
from .errors import ClassificationIndeterminate, DivergentSymbolError, DomainError, QuadratureError
from .specfun import bessel_j0, bessel_j1


def _as_vector(center, d):
    if center is None or (hasattr(center, "__len__") and len(center) == 0):
        return tuple([0.0] * d)
    if np.isscalar(center):
        center = [center]
    c = tuple(float(v) for v in center)
    if len(c) != d:
        raise DomainError(f"center {c} does not have dimension {d}")
    return c


def _as_points(x, d):
    """Flatten evaluation points to shape (n, d); remember the output shape."""
    arr = np.asarray(x, dtype=float)
    if d == 1:
        if arr.ndim > 1 and arr.shape[-1] == 1:
            arr = arr[..., 0]
        return arr.reshape(-1, 1), arr.shape
    if arr.shape[-1] != d:
        raise DomainError(f"points must have trailing axis of length {d}, got shape {arr.shape}")
    return arr.reshape(-1, d), arr.shape[:-1]


def _norm(k, d):
    arr = np.asarray(k, dtype=float)
    if d == 1:
        if arr.ndim > 1 and arr.shape[-1] == 1:
            arr = arr[..., 0]
        return np.abs(arr)
    if arr.ndim == 0:
        raise DomainError(f"wave vector must have {d} components")
    return np.sqrt(np.sum(arr * arr, axis=-1))


def spherical_mean_cos(u, d):
    """Average of cos(<k, z>) over directions, as a function of u = |k||z|."""
    u = np.asarray(u, dtype=float)
    if d == 1:
        return np.cos(u)
    if d == 2:
        return bessel_j0(u)
    if d == 3:
        out = np.ones_like(u)
        nz = u != 0
        out[nz] = np.sin(u[nz]) / u[nz]
        return out
    raise DomainError("spherical averages implemented for d <= 3")


def _one_minus_mean_cos(u, d):
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    u2 = u * u
    series = u2 / (2.0 * d) - u2 * u2 / (8.0 * d * (d + 2))
    full = 1.0 - spherical_mean_cos(np.where(small, 1.0, u), d)
    if d == 1:
        full = 2.0 * np.sin(0.5 * np.where(small, 1.0, u)) ** 2
    return np.where(small, series, full)


# ====================================================================== symbols

@dataclass(frozen=True)
class PowerLaw:
    """a(k) = |k|**alpha (fractional Laplacian)."""

    dimension: int
    alpha: float
    kind: str = field(default="power_law", init=False)

    def __post_init__(self):
        if self.dimension < 1 or self.alpha <= 0:
            raise DomainError("PowerLaw needs dimension >= 1 and alpha > 0")

    def radial(self, kabs):
        return np.asarray(kabs, dtype=float) ** self.alpha

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension, "alpha": self.alpha}


@dataclass(frozen=True)
class RadialDensity:
    """l(r) = coefficient * r**(-exponent) * exp(-rate * r), cut off at ``cutoff``."""

    coefficient: float
    exponent: float
    cutoff: float
    rate: float = 0.0

    def raw(self, r):
        r = np.asarray(r, dtype=float)
        return self.coefficient * r ** (-self.exponent) * np.exp(-self.rate * r)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.cutoff, self.raw(r), 0.0)

    def to_dict(self):
        return {"coefficient": self.coefficient, "exponent": self.exponent,
                "cutoff": self.cutoff, "rate": self.rate}


def _wide_quad(f, a, b, rtol=1e-10):
    """int_a^b f for 0 <= a < b; ranges spanning decades are done in ln r."""
    if a == 0.0:
        head_end = min(b, 1.0)
        return q.quad(f, 0.0, head_end, rtol=rtol) + (_wide_quad(f, head_end, b, rtol) if b > head_end else 0.0)
    if b / a < 100.0:
        return q.quad(f, a, b, rtol=rtol)
    return q.quad(lambda t: f(math.exp(t)) * math.exp(t), math.log(a), math.log(b), rtol=rtol, limit=800)


def _fourier_tail(g, dg, a, k, weight):
    """int_a^inf g(r) cos(kr) (or sin) dr after one integration by parts (QAWF on g')."""
    from scipy import integrate
    # for monotone g, |int g' trig| <= |g(a)|: relative accuracy QAWF can actually deliver
    scale = abs(g(a))
    other = "sin" if weight == "cos" else "cos"
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            rest = integrate.quad(dg, a, np.inf, weight=other, wvar=k, limlst=200,
                                  epsabs=1e-11 * max(scale, 1e-300))[0]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"Fourier tail from {a} did not converge: {exc}") from None
    if weight == "cos":
        return -g(a) * math.sin(k * a) / k - rest / k
    return g(a) * math.cos(k * a) / k + rest / k


# switch from panel quadrature to the two-term Hankel form of J0 beyond k r = _HANKEL_START
_HANKEL_START = 200.0


@dataclass(frozen=True)
class LevyDensity:
    """a(k) = int (1 - cos<k,z>) l(|z|) dz for a radial Levy density l."""

    dimension: int
    density: RadialDensity
    kind: str = field(default="levy_density", init=False)

    def __post_init__(self):
        d = self.dimension
        if d not in (1, 2, 3):
            raise DomainError("LevyDensity symbols are implemented for d in {1, 2, 3}")
        l = self.density
        if l.coefficient < 0 or not (l.cutoff > 0):
            raise DomainError("Levy density must be nonnegative with a positive cutoff")
        sd = q.sphere_area(d)
        # finite mass away from the origin, and int min(1, |z|^2) l < inf near it
        try:
            far = 0.0
            if l.cutoff > 1.0:
                far = _wide_quad(lambda r: sd * r ** (d - 1) * float(l(r)), 1.0, l.cutoff)
            near = q.quad(lambda r: sd * r ** (d + 1) * float(l(r)), 0.0, min(1.0, l.cutoff), rtol=1e-10)
        except QuadratureError as exc:
            raise DivergentSymbolError(f"Levy density is not a Levy measure: {exc}") from None
        if not (math.isfinite(far) and math.isfinite(near)):
            raise DivergentSymbolError("Levy density moments diverge")

    def radial(self, kabs):
        kabs = np.asarray(kabs, dtype=float)
        flat = kabs.reshape(-1)
        uniq, inverse = np.unique(flat, return_inverse=True)
        vals = np.array([self._eval_one(float(k)) for k in uniq])
        return vals[inverse].reshape(kabs.shape)

    def _eval_one(self, k):
        if k == 0.0:
            return 0.0
        d = self.dimension
        l = self.density
        sd = q.sphere_area(d)
        cut = l.cutoff
        split = min(cut, 1.0 / k)
        try:
            near = _wide_quad(lambda r: sd * r ** (d - 1) * float(l(r)) * float(_one_minus_mean_cos(k * r, d)),
                              0.0, split)
            if split >= cut:
                return near
            plain = _wide_quad(lambda r: sd * r ** (d - 1) * float(l(r)), split, cut)
            if k * (cut - split) <= 400.0 * math.pi:
                osc = self._cos_window(k, split, cut)
            else:
                osc = self._cos_tail(k, split) - self._cos_tail(k, cut)
        except QuadratureError as exc:
            raise DivergentSymbolError(f"symbol quadrature failed at |k|={k}: {exc}") from None
        return near + plain - osc

    def _cos_window(self, k, a, b):
        """int_a^b S_d r^(d-1) l(r) <cos(k r w1)> dr over a short window."""
        from scipy import integrate
        d = self.dimension
        raw = self.density.raw
        sd = q.sphere_area(d)
        if d == 2:
            n_panels = max(1, int(math.ceil((b - a) * k / math.pi)))
            edges = np.linspace(a, b, n_panels + 1)
            x, w = q.gauss_legendre(24)
            total = 0.0
            for lo, hi in zip(edges[:-1], edges[1:]):
                r = lo + 0.5 * (hi - lo) * (x + 1.0)
                total += 0.5 * (hi - lo) * float(np.dot(w, sd * r * raw(r) * bessel_j0(k * r)))
            return total
        if d == 1:
            f, weight = (lambda r: sd * raw(r)), "cos"
        else:
            f, weight = (lambda r: sd * r * raw(r) / k), "sin"
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                return integrate.quad(f, a, b, weight=weight, wvar=k, limit=2000, epsrel=1e-10)[0]
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"oscillatory window [{a}, {b}] did not converge: {exc}") from None

    def _cos_tail(self, k, a):
        """int_a^inf S_d r^(d-1) l_raw(r) <cos(k r w1)> dr (no cutoff), a > 0."""
        d = self.dimension
        dens = self.density
        sd = q.sphere_area(d)
        p, rate = dens.exponent, dens.rate

        def power_term(scale, m):
            # g(r) = scale * r^m * l_raw(r) and its derivative
            def g(r):
                return scale * r**m * dens.raw(r)

            def dg(r):
                return g(r) * ((m - p) / r - rate)

            return g, dg

        if d == 1:
            g, dg = power_term(sd, 0)
            return _fourier_tail(g, dg, a, k, "cos")
        if d == 3:
            g, dg = power_term(sd / k, 1)
            return _fourier_tail(g, dg, a, k, "sin")
        # d = 2: half-period panels of J0 up to k r = _HANKEL_START, then
        # J0(u) ~ sqrt(2/(pi u)) [cos(u - pi/4) + sin(u - pi/4) / (8u)]
        total = 0.0
        switch = max(a, _HANKEL_START / k)
        if switch > a:
            n_panels = int(math.ceil((switch - a) * k / math.pi))
            edges = np.linspace(a, switch, n_panels + 1)
            x, w = q.gauss_legendre(24)
            for lo, hi in zip(edges[:-1], edges[1:]):
                r = lo + 0.5 * (hi - lo) * (x + 1.0)
                total += 0.5 * (hi - lo) * float(np.dot(w, sd * r * dens.raw(r) * bessel_j0(k * r)))
        lead = sd * math.sqrt(2.0 / (math.pi * k)) / math.sqrt(2.0)
        g0, dg0 = power_term(lead, 0.5)
        g1, dg1 = power_term(lead / (8.0 * k), -0.5)
        # cos(u - pi/4) = (cos u + sin u)/sqrt2 ; sin(u - pi/4) = (sin u - cos u)/sqrt2
        total += _fourier_tail(g0, dg0, switch, k, "cos") + _fourier_tail(g0, dg0, switch, k, "sin")
        total += _fourier_tail(g1, dg1, switch, k, "sin") - _fourier_tail(g1, dg1, switch, k, "cos")
        return total

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension, "density": self.density.to_dict()}


@dataclass(frozen=True)
class Tabulated:
    """Radial samples (|k|, a); log-log interpolation, power-law extrapolation."""

    dimension: int
    samples: tuple
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        pts = tuple(sorted((float(k), float(a)) for k, a in self.samples))
        object.__setattr__(self, "samples", pts)
        if len(pts) < 2:
            raise DomainError("Tabulated symbol needs at least two samples")
        for k, a in pts:
            if k <= 0 or a <= 0:
                raise DomainError("Tabulated symbol needs |k| > 0 and a > 0 at every sample")

    def radial(self, kabs):
        kabs = np.asarray(kabs, dtype=float)
        ks = np.log([p[0] for p in self.samples])
        av = np.log([p[1] for p in self.samples])
        out = np.zeros_like(kabs)
        pos = kabs > 0
        lk = np.log(kabs[pos])
        res = np.interp(lk, ks, av)
        lo_slope = (av[1] - av[0]) / (ks[1] - ks[0])
        hi_slope = (av[-1] - av[-2]) / (ks[-1] - ks[-2])
        res = np.where(lk < ks[0], av[0] + lo_slope * (lk - ks[0]), res)
        res = np.where(lk > ks[-1], av[-1] + hi_slope * (lk - ks[-1]), res)
        out[pos] = np.exp(res)
        return out

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension,
                "samples": [list(p) for p in self.samples]}


SymbolSpec = PowerLaw | LevyDensity | Tabulated


def symbol_eval(spec, k):
    """a(k) for a wave vector (or array of wave vectors; trailing axis = d)."""
    kabs = _norm(k, spec.dimension)
    if not np.all(np.isfinite(kabs)):
        raise DomainError("wave vector must be finite")
    out = spec.radial(kabs)
    if np.ndim(out) == 0 or (spec.dimension == 1 and np.shape(k) == (1,)):
        return float(np.reshape(out, -1)[0])
    return out


@dataclass(frozen=True)
class Recurrence:
    recurrent: bool
    exponent: float
    borderline: bool

    @property
    def label(self):
        return "Recurrent" if self.recurrent else "Transient"


def classify_recurrence(spec, k_lo=1e-4, k_hi=1e-2, samples=21, tie=0.05):
    """Local power fit a(k) ~ c |k|**beta on [k_lo, k_hi]; recurrent iff beta >= d."""
    ks = np.logspace(math.log10(k_lo), math.log10(k_hi), samples)
    a = np.asarray(spec.radial(ks), dtype=float)
    if np.any(a <= 0) or np.any(np.diff(a) <= 0):
        raise ClassificationIndeterminate("symbol is not positive and increasing near k = 0")
    lk, la = np.log(ks), np.log(a)
    beta, icpt = np.polyfit(lk, la, 1)
    if np.max(np.abs(la - (beta * lk + icpt))) > 0.05:
        raise ClassificationIndeterminate("symbol is not power-like near k = 0")
    d = spec.dimension
    borderline = abs(beta - d) < tie
    return Recurrence(recurrent=bool(beta >= d or borderline), exponent=float(beta),
                      borderline=bool(borderline))


# =================================================================== potentials

class _RadialBase:
    """Shared behaviour for potentials that are radial about their centre."""

    support = math.inf

    @property
    def center_array(self):
        return np.asarray(self.center, dtype=float)

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dimension)
        r = np.sqrt(np.sum((pts - self.center_array) ** 2, axis=1))
        return self.profile(r).reshape(shape)

    def centred(self):
        return type(self)(**{**self._fields(), "center": None})


@dataclass(frozen=True)
class RadialWell(_RadialBase):
    """V = height on the open ball |x - center| < radius, 0 elsewhere."""

    dimension: int
    height: float
    radius: float
    center: tuple = None
    kind: str = field(default="radial_well", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, self.dimension))
        if self.radius <= 0:
            raise DomainError("well radius must be positive")

    @property
    def support(self):
        return self.radius

    def _fields(self):
        return {"dimension": self.dimension, "height": self.height, "radius": self.radius}

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, self.height, 0.0)

    def fourier_profile(self, k):
        d, h, a = self.dimension, self.height, self.radius
        k = np.asarray(k, dtype=float)
        ka = k * a
        small = ka < 1e-4
        kk = np.where(small, 1.0, k)
        if d == 1:
            full = 2.0 * h * np.sin(kk * a) / kk
        elif d == 2:
            full = 2.0 * math.pi * h * a * bessel_j1(kk * a) / kk
        elif d == 3:
            full = 4.0 * math.pi * h * (np.sin(kk * a) - kk * a * np.cos(kk * a)) / kk**3
        else:
            raise DomainError("RadialWell transform implemented for d <= 3")
        zero = h * q.ball_volume(d) * a**d
        return np.where(small, zero, full) / (2.0 * math.pi) ** (d / 2.0)

    def integral(self):
        return self.height * q.ball_volume(self.dimension) * self.radius**self.dimension

    def to_dict(self):
        return {"kind": self.kind, **self._fields(), "center": list(self.center)}


@dataclass(frozen=True)
class GaussianBump(_RadialBase):
    """V = amplitude * exp(-|x - center|^2 / (2 width^2))."""

    dimension: int
    amplitude: float
    width: float
    center: tuple = None
    kind: str = field(default="gaussian_bump", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, self.dimension))
        if self.width <= 0:
            raise DomainError("Gaussian width must be positive")

    def _fields(self):
        return {"dimension": self.dimension, "amplitude": self.amplitude, "width": self.width}

    @property
    def scale(self):
        return self.width

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-0.5 * (r / self.width) ** 2)

    def fourier_profile(self, k):
        k = np.asarray(k, dtype=float)
        return self.amplitude * self.width**self.dimension * np.exp(-0.5 * (self.width * k) ** 2)

    def integral(self):
        return self.amplitude * (2.0 * math.pi * self.width**2) ** (self.dimension / 2.0)

    def to_dict(self):
        return {"kind": self.kind, **self._fields(), "center": list(self.center)}


@dataclass(frozen=True)
class ExponentialBump(_RadialBase):
    """V = amplitude * exp(-rate * |x - center|)."""

    dimension: int
    amplitude: float
    rate: float
    center: tuple = None
    kind: str = field(default="exponential_bump", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, self.dimension))
        if self.rate <= 0:
            raise DomainError("decay rate must be positive")

    def _fields(self):
        return {"dimension": self.dimension, "amplitude": self.amplitude, "rate": self.rate}

    @property
    def scale(self):
        return 1.0 / self.rate

    def profile(self, r):
        return self.amplitude * np.exp(-self.rate * np.asarray(r, dtype=float))

    def fourier_profile(self, k):
        d, A, b = self.dimension, self.amplitude, self.rate
        k = np.asarray(k, dtype=float)
        if d == 1:
            full = 2.0 * A * b / (b * b + k * k)
        elif d == 2:
            full = 2.0 * math.pi * A * b / (b * b + k * k) ** 1.5
        elif d == 3:
            full = 8.0 * math.pi * A * b / (b * b + k * k) ** 2
        else:
            raise DomainError("ExponentialBump transform implemented for d <= 3")
        return full / (2.0 * math.pi) ** (d / 2.0)

    def integral(self):
        d = self.dimension
        return self.amplitude * q.sphere_area(d) * math.gamma(d) / self.rate**d

    def to_dict(self):
        return {"kind": self.kind, **self._fields(), "center": list(self.center)}


_RADIAL_KINDS = (RadialWell, GaussianBump, ExponentialBump)


@dataclass(frozen=True)
class WeightedTranslates:
    """V(x) = sum_i weight_i * base(x - center_i), base centred at the origin."""

    base: RadialWell | GaussianBump | ExponentialBump
    translates: tuple
    kind: str = field(default="weighted_translates", init=False)

    def __post_init__(self):
        if not isinstance(self.base, _RADIAL_KINDS):
            raise DomainError("WeightedTranslates base must be a radial building block")
        d = self.base.dimension
        if any(self.base.center):
            raise DomainError("WeightedTranslates base must be centred at the origin")
        items = tuple((_as_vector(c, d), float(w)) for c, w in self.translates)
        object.__setattr__(self, "translates", items)

    @property
    def dimension(self):
        return self.base.dimension

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dimension)
        total = np.zeros(len(pts))
        for c, w in self.translates:
            r = np.sqrt(np.sum((pts - np.asarray(c)) ** 2, axis=1))
            total += w * self.base.profile(r)
        return total.reshape(shape)

    def radial_terms(self):
        return [(w, self.base, np.asarray(c)) for c, w in self.translates]

    def integral(self):
        return self.base.integral() * sum(w for _, w in self.translates)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(),
                "translates": [{"center": list(c), "weight": w} for c, w in self.translates]}


@dataclass(frozen=True)
class MeanZeroPair:
    """Sum of two Gaussian bumps whose integrals cancel."""

    first: GaussianBump
    second: GaussianBump
    kind: str = field(default="mean_zero_pair", init=False)

    def __post_init__(self):
        if self.first.dimension != self.second.dimension:
            raise DomainError("MeanZeroPair bumps must share a dimension")
        i1, i2 = self.first.integral(), self.second.integral()
        if abs(i1 + i2) > 1e-10 * max(abs(i1), abs(i2), 1e-300):
            raise DomainError(f"MeanZeroPair integrals do not cancel: {i1} + {i2}")

    @classmethod
    def balanced(cls, dimension, amplitude, width, second_width, center=None, second_center=None):
        """Pick the second amplitude so that the total integral vanishes."""
        first = GaussianBump(dimension, amplitude, width, center)
        a2 = -amplitude * (width / second_width) ** dimension
        return cls(first, GaussianBump(dimension, a2, second_width, second_center))

    @property
    def dimension(self):
        return self.first.dimension

    def evaluate(self, x):
        return self.first.evaluate(x) + self.second.evaluate(x)

    def radial_terms(self):
        return [(1.0, self.first.centred(), self.first.center_array),
                (1.0, self.second.centred(), self.second.center_array)]

    def integral(self):
        return self.first.integral() + self.second.integral()

    def to_dict(self):
        return {"kind": self.kind, "first": self.first.to_dict(), "second": self.second.to_dict()}


@dataclass(frozen=True)
class InverseSquareOnBalls:
    """V = |x|^-2 on a union of balls avoiding the origin, 0 elsewhere.

    ``balls`` lists (center, radius) explicitly. ``dyadic_start`` adds the
    family |x_n| = 2**n (along e1), R_n = 2**n / 3 for n >= dyadic_start,
    ``dyadic_count`` terms or infinitely many when it is None.
    """

    dimension: int
    balls: tuple = ()
    dyadic_start: Optional[int] = None
    dyadic_count: Optional[int] = None
    kind: str = field(default="inverse_square_on_balls", init=False)

    def __post_init__(self):
        d = self.dimension
        items = tuple((_as_vector(c, d), float(r)) for c, r in self.balls)
        object.__setattr__(self, "balls", items)
        for c, r in items:
            if r <= 0 or math.sqrt(sum(v * v for v in c)) <= r:
                raise DomainError("balls must have positive radius and exclude the origin")
        if self.dyadic_start is None and not items:
            raise DomainError("InverseSquareOnBalls needs explicit balls or a dyadic family")

    @property
    def infinite(self):
        return self.dyadic_start is not None and self.dyadic_count is None

    def dyadic_ball(self, n):
        c = [0.0] * self.dimension
        c[0] = 2.0**n
        return tuple(c), 2.0**n / 3.0

    def ball_list(self, limit=None):
        """Explicit balls plus the first ``limit`` (or all finite) dyadic ones."""
        out = list(self.balls)
        if self.dyadic_start is not None:
            count = self.dyadic_count if self.dyadic_count is not None else limit
            if count is None:
                raise DomainError("infinite dyadic family needs a term limit")
            if self.dyadic_count is not None and limit is not None:
                count = min(count, limit)
            out += [self.dyadic_ball(self.dyadic_start + i) for i in range(count)]
        return out

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dimension)
        rho = np.sqrt(np.sum(pts * pts, axis=1))
        inside = np.zeros(len(pts), dtype=bool)
        for c, r in self.balls:
            inside |= np.sum((pts - np.asarray(c)) ** 2, axis=1) < r * r
        if self.dyadic_start is not None:
            # a point can only sit in the ball with 2^n within a factor 3/2 of |x|
            with np.errstate(divide="ignore"):
                n_guess = np.floor(np.log2(np.maximum(rho, 1e-300)))
            for shift in (-1, 0, 1):
                n = n_guess + shift
                ok = n >= self.dyadic_start
                if self.dyadic_count is not None:
                    ok &= n < self.dyadic_start + self.dyadic_count
                cx = 2.0**n
                diff = pts.copy()
                diff[:, 0] -= cx
                inside |= ok & (np.sum(diff * diff, axis=1) < (cx / 3.0) ** 2)
        with np.errstate(divide="ignore"):
            vals = np.where(inside, 1.0 / np.maximum(rho, 1e-300) ** 2, 0.0)
        return vals.reshape(shape)

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension,
                "balls": [{"center": list(c), "radius": r} for c, r in self.balls],
                "dyadic_start": self.dyadic_start, "dyadic_count": self.dyadic_count}


@dataclass(frozen=True)
class Sampled:
    """Samples on the periodic grid x_j = -L + j*2L/N per axis; multilinear in between."""

    dimension: int
    half_width: float
    values: tuple
    kind: str = field(default="sampled", init=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != self.dimension:
            raise DomainError("Sampled values must be an array with one axis per dimension")
        object.__setattr__(self, "values", tuple(map(tuple, arr)) if arr.ndim == 2 else tuple(arr.tolist()))

    @property
    def array(self):
        return np.asarray(self.values, dtype=float)

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dimension)
        arr = self.array
        axes = [np.linspace(-self.half_width, self.half_width, n, endpoint=False) for n in arr.shape]
        interp = RegularGridInterpolator(axes, arr, bounds_error=False, fill_value=0.0)
        return interp(pts).reshape(shape)

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension, "half_width": self.half_width,
                "values": self.array.tolist()}


PotentialSpec = (RadialWell | GaussianBump | ExponentialBump | WeightedTranslates
                 | MeanZeroPair | InverseSquareOnBalls | Sampled)


def potential_eval(spec, x):
    """V at a point (float) or at an array of points; a 1D point may be given as [x]."""
    out = spec.evaluate(x)
    if np.ndim(out) == 0 or (spec.dimension == 1 and np.shape(x) == (1,)):
        return float(np.reshape(out, -1)[0])
    return out


def radial_terms(spec):
    """(weight, centred radial block, center) triples, or None if not decomposable."""
    if isinstance(spec, _RADIAL_KINDS):
        return [(1.0, spec.centred(), spec.center_array)]
    if isinstance(spec, (WeightedTranslates, MeanZeroPair)):
        return spec.radial_terms()
    return None


def fourier_transform(spec, k):
    """Unitary Fourier transform V^(k) (complex) for radial-block potentials."""
    terms = radial_terms(spec)
    if terms is None:
        raise NotImplementedError(f"no analytic transform for {spec.kind}")
    d = spec.dimension
    k = np.asarray(k, dtype=float)
    if d == 1 and k.ndim > 1 and k.shape[-1] == 1:
        k = k[..., 0]
    kvec = k[..., None] if d == 1 else k
    kabs = _norm(k, d)
    out = np.zeros(kabs.shape, dtype=complex)
    for w, block, c in terms:
        phase = np.exp(-1j * np.tensordot(kvec, c, axes=([-1], [0])))
        out += w * block.fourier_profile(kabs) * phase
    return out


def potential_integral(spec):
    """Closed-form integral of V where one exists."""
    if hasattr(spec, "integral"):
        return spec.integral()
    raise NotImplementedError(f"no closed-form integral for {spec.kind}")


# ================================================================= diagnostics

@dataclass(frozen=True)
class DiagnosticsReport:
    integral_V: float
    integral_absV: float
    clr_integral: float
    bargman: Optional[float]
    weight_1d: float
    weight_2d_log2: float
    lp_norm: float
    frac_weight: float
    discreteness_b: float
    delta0: float
    alpha: float
    divergent: tuple = ()

    def to_dict(self):
        out = {}
        for name in ("integral_V", "integral_absV", "clr_integral", "bargman", "weight_1d",
                     "weight_2d_log2", "lp_norm", "frac_weight", "discreteness_b"):
            val = getattr(self, name)
            out[name] = "divergent" if name in self.divergent else val
        out.update(delta0=self.delta0, alpha=self.alpha, divergent=list(self.divergent))
        return out


# absolute floor so that integrals which cancel to zero (mean-zero V) still settle
_ATOL = 1e-13


def _integrands(d, delta0, alpha):
    def pos(v):
        return np.maximum(v, 0.0)

    def blog(v):
        big = v > 1.0
        return np.where(big, v * np.log(np.where(big, v, 1.0)), 0.0)

    return {
        "integral_V": lambda v, rho: v,
        "integral_absV": lambda v, rho: np.abs(v),
        "clr_integral": lambda v, rho: pos(v) ** (d / 2.0),
        "weight_1d": lambda v, rho: (1.0 + rho * rho) * np.abs(v),
        "weight_2d_log2": lambda v, rho: np.log(2.0 + rho) ** 2 * np.abs(v),
        "lp_norm": lambda v, rho: np.abs(v) ** (1.0 + delta0),
        "frac_weight": lambda v, rho: (1.0 + rho ** (2.0 * alpha - 2.0)) * np.abs(v),
        "discreteness_b": lambda v, rho: pos(v) * np.log(2.0 + rho) + blog(v),
    }


def _line_integral(F, spec, rtol):
    """d = 1: integrate F(V(x), |x|) over the whole line."""
    breaks = {0.0}
    terms = radial_terms(spec)
    scale = 1.0
    if terms is not None:
        for _, block, c in terms:
            breaks.add(float(c[0]))
            if math.isfinite(block.support):
                breaks.update({float(c[0]) - block.support, float(c[0]) + block.support})
            else:
                scale = max(scale, block.scale)
    elif isinstance(spec, InverseSquareOnBalls) and not spec.infinite:
        for c, r in spec.ball_list():
            breaks.update({c[0] - r, c[0] + r})
    elif isinstance(spec, Sampled):
        breaks.update({-spec.half_width, spec.half_width})
    pts = sorted(breaks)
    lo, hi = pts[0], pts[-1]

    def f(x):
        return float(F(spec.evaluate(np.array([x]))[0:1], np.abs(np.array([x])))[0])

    core = q.quad(f, lo, hi, rtol=rtol, atol=_ATOL, points=pts, limit=800) if hi > lo else 0.0

    def tails(level):
        a = q.quad(f, hi, hi + level, rtol=rtol, atol=_ATOL, limit=800)
        b = q.quad(f, lo - level, lo, rtol=rtol, atol=_ATOL, limit=800)
        return a + b

    ref = q.refine_until_stable(tails, 8.0 * scale, rtol=rtol, atol=_ATOL)
    return core + ref.value, ref.divergent


def _block_integral(F, d, profile, support, offset, scale, rtol):
    """int over R^d of F(profile(|x - c|), |x|) for one radial block with |c| = offset."""
    sd = q.sphere_area(d)

    def shell(r):
        v = profile(np.array([r]))[0]
        if v == 0.0:
            return 0.0
        return sd * r ** (d - 1) * q.sphere_average(lambda rho: F(np.full(rho.shape, v), rho), r, offset, d)

    if math.isfinite(support):
        return q.quad(shell, 0.0, support, rtol=rtol, atol=_ATOL, points=[support]), False

    def partial(level):
        return q.quad(shell, 0.0, level, rtol=rtol, atol=_ATOL, limit=800)

    ref = q.refine_until_stable(partial, 8.0 * scale, rtol=rtol, atol=_ATOL)
    return ref.value, ref.divergent


def _ball_integral(F, d, center_norm, radius, nr=48, nt=64):
    """int over one ball of F(|x|^-2, |x|); tensor Gauss-Legendre (smooth: ball avoids 0)."""
    sd = q.sphere_area(d)
    r, wr = q.gauss_legendre(nr, 0.0, radius)
    total = 0.0
    for ri, wi in zip(r, wr):
        avg = q.sphere_average(lambda rho: F(rho ** -2.0, rho), ri, center_norm, d, nodes=nt)
        total += wi * sd * ri ** (d - 1) * avg
    return total


def diagnostics(spec, delta0=0.5, alpha=2.0, rtol=q.DEFAULT_RTOL):
    """All integrability diagnostics of ``spec`` (see :class:`DiagnosticsReport`).

    Radial blocks sharing a centre are merged; blocks with different centres
    must have disjoint compact supports (d >= 2). d = 1 integrates over the line.
    """
    d = spec.dimension
    funcs = _integrands(d, delta0, alpha)
    values = {}
    divergent = []

    if isinstance(spec, InverseSquareOnBalls) and d >= 2:
        def ball_sum(F, count):
            return sum(_ball_integral(F, d, math.sqrt(sum(v * v for v in c)), r)
                       for c, r in spec.ball_list(limit=count))

        for name, F in funcs.items():
            if spec.infinite:
                ref = q.refine_until_stable(lambda n: ball_sum(F, int(n)), 1, rtol=1e-10)
                values[name], div = ref.value, ref.divergent
            else:
                values[name], div = ball_sum(F, None), False
            if div:
                divergent.append(name)
    elif d == 1:
        if isinstance(spec, InverseSquareOnBalls) and spec.infinite:
            raise NotImplementedError("infinite ball families are supported for d >= 2")
        for name, F in funcs.items():
            values[name], div = _line_integral(F, spec, rtol)
            if div:
                divergent.append(name)
    else:
        groups = _center_groups(spec)
        for name, F in funcs.items():
            total, div_any = 0.0, False
            for offset, profile, support, scale in groups:
                val, div = _block_integral(F, d, profile, support, offset, scale, rtol)
                total += val
                div_any |= div
            values[name] = math.inf if div_any else total
            if div_any:
                divergent.append(name)

    bargman = None
    if d == 1:
        if isinstance(spec, InverseSquareOnBalls) and spec.infinite:
            bargman = math.inf
        else:
            half = _HalfLine(spec)
            bargman, div = _line_integral(lambda v, rho: rho * np.abs(v), half, rtol)
            if div:
                divergent.append("bargman")
                bargman = math.inf
    return DiagnosticsReport(bargman=bargman, delta0=delta0, alpha=alpha,
                             divergent=tuple(divergent), **values)


class _HalfLine:
    """V restricted to x > 0 (for the half-line Bargman weight)."""

    def __init__(self, spec):
        self.spec = spec
        self.dimension = 1
        self.kind = spec.kind

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.spec.evaluate(x), 0.0)


def _isinstance_half(spec):
    return isinstance(spec, _HalfLine)


def _center_groups(spec):
    terms = radial_terms(spec)
    if terms is None:
        raise NotImplementedError(f"diagnostics not implemented for {spec.kind} in d >= 2")
    groups = {}
    for w, block, c in terms:
        groups.setdefault(tuple(np.round(c, 14)), []).append((w, block))
    centers = list(groups)
    supports = {c: max(b.support for _, b in groups[c]) for c in centers}
    for i, ci in enumerate(centers):
        for cj in centers[i + 1:]:
            gap = math.dist(ci, cj)
            if not gap >= supports[ci] + supports[cj]:
                raise NotImplementedError(
                    "diagnostics need radial blocks with a common centre or disjoint supports")
    out = []
    for c in centers:
        members = groups[c]

        def profile(r, members=members):
            return sum(w * b.profile(r) for w, b in members)

        scale = max(getattr(b, "scale", b.support) for _, b in members)
        out.append((math.hypot(*c), profile, supports[c], scale))
    return out


# ============================================================== serialisation

def symbol_from_dict(data):
    kind = data.get("kind")
    if kind == "power_law":
        return PowerLaw(int(data["dimension"]), float(data["alpha"]))
    if kind == "levy_density":
        dens = data["density"]
        return LevyDensity(int(data["dimension"]),
                           RadialDensity(float(dens["coefficient"]), float(dens["exponent"]),
                                         float(dens["cutoff"]), float(dens.get("rate", 0.0))))
    if kind == "tabulated":
        return Tabulated(int(data["dimension"]), tuple(tuple(p) for p in data["samples"]))
    raise DomainError(f"unknown symbol kind {kind!r}; expected power_law, levy_density or tabulated")


def potential_from_dict(data):
    kind = data.get("kind")
    if kind == "radial_well":
        return RadialWell(int(data["dimension"]), float(data["height"]), float(data["radius"]),
                          data.get("center"))
    if kind == "gaussian_bump":
        return GaussianBump(int(data["dimension"]), float(data["amplitude"]), float(data["width"]),
                            data.get("center"))
    if kind == "exponential_bump":
        return ExponentialBump(int(data["dimension"]), float(data["amplitude"]), float(data["rate"]),
                               data.get("center"))
    if kind == "weighted_translates":
        base = potential_from_dict(data["base"])
        return WeightedTranslates(base, tuple((t["center"], t["weight"]) for t in data["translates"]))
    if kind == "mean_zero_pair":
        return MeanZeroPair(potential_from_dict(data["first"]), potential_from_dict(data["second"]))
    if kind == "inverse_square_on_balls":
        return InverseSquareOnBalls(int(data["dimension"]),
                                    tuple((b["center"], b["radius"]) for b in data.get("balls", [])),
                                    data.get("dyadic_start"), data.get("dyadic_count"))
    if kind == "sampled":
        return Sampled(int(data["dimension"]), float(data["half_width"]), data["values"])
    raise DomainError(
        f"unknown potential kind {kind!r}; expected radial_well, gaussian_bump, exponential_bump, "
        "weighted_translates, mean_zero_pair, inverse_square_on_balls or sampled")
