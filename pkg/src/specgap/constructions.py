"""Explicit constructions: Bessel-matched wells, an L^1 potential whose
essential spectrum fills the negative axis, the spots Rayleigh threshold and
the sparse-bump emptiness certificate.

Wells can be so narrow that delta underflows a double (ln delta ~ -1500 is
typical), so the matching and the norms below work with ln delta and
s = sqrt|lambda| delta in logarithmic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quadrature as q
from .errors import DomainError
from .specfun import EULER_GAMMA, J0_FIRST_ZERO, bessel_j01, bessel_k01

# below this s = sqrt|lambda| delta the leading small-argument forms of K0, s K1 are exact in double
_K_SMALL = 1e-100


# ------------------------------------------------------------ Bessel wells

def _lhs(tau):
    """tau J0'(tau) / J0(tau) = -tau J1 / J0 on (0, j01): decreasing from 0 to -inf."""
    j0, j1 = bessel_j01(tau)
    return -tau * j1 / j0


def _k_parts(log_s):
    """(K0(s), s K1(s)) for s = exp(log_s), stable for s far below the double range."""
    if log_s > math.log(_K_SMALL):
        s = math.exp(log_s)
        k0, k1 = bessel_k01(s)
        return k0, s * k1
    return math.log(2.0) - log_s - EULER_GAMMA, 1.0


def _rhs(log_s):
    """s K0'(s) / K0(s) = -s K1 / K0 (negative)."""
    k0, sk1 = _k_parts(log_s)
    return -sk1 / k0


@dataclass(frozen=True)
class WellSolution:
    """Disc well v = h on |x| < delta in the plane with an eigenvalue exactly at lam."""

    lam: float
    log_delta: float
    tau: float
    residual: float

    @property
    def kappa(self):
        return math.sqrt(-self.lam)

    @property
    def log_s(self):
        return 0.5 * math.log(-self.lam) + self.log_delta

    @property
    def delta(self):
        return math.exp(self.log_delta)

    @property
    def h_delta2(self):
        """h delta^2 = |lam| delta^2 + tau^2."""
        return -self.lam * math.exp(2.0 * self.log_delta) + self.tau**2

    @property
    def log_h(self):
        return math.log(self.h_delta2) - 2.0 * self.log_delta

    @property
    def h(self):
        try:
            return math.exp(self.log_h)
        except OverflowError:
            return math.inf

    def to_dict(self):
        h = self.h
        return {"lambda": self.lam, "delta": self.delta, "log_delta": self.log_delta, "tau": self.tau,
                "h": h if math.isfinite(h) else None, "log_h": self.log_h,
                "h_delta2": self.h_delta2, "residual": self.residual}


def well_match_log(lam, log_delta):
    """well_match with delta given as its logarithm (delta may underflow)."""
    if not lam < 0:
        raise DomainError(f"well eigenvalue must be negative, got {lam}")
    log_s = 0.5 * math.log(-lam) + log_delta
    if not log_s <= 1e-12 or not math.isfinite(log_s):
        raise DomainError(f"need 0 < delta <= 1/sqrt|lambda|, got sqrt|lambda| delta = exp({log_s})")
    target = _rhs(log_s)
    lo, hi = 0.0, J0_FIRST_ZERO
    # bisection to adjacent doubles: lhs(lo) > target >= lhs(hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _lhs(mid) > target:
            lo = mid
        else:
            hi = mid
    tau = lo if lo > 0 and abs(_lhs(lo) - target) <= abs(_lhs(hi) - target) else hi
    return WellSolution(float(lam), float(log_delta), float(tau), float(abs(_lhs(tau) - target)))


def well_match(lam, delta):
    """Depth h making lam < 0 an eigenvalue of -Laplace - h 1{|x| < delta} in R^2.

    tau = sqrt(h + lam) delta solves tau J0'(tau)/J0(tau) = s K0'(s)/K0(s),
    s = sqrt|lam| delta, by bisection on (0, j01); h = |lam| + tau^2 / delta^2.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return well_match_log(lam, math.log(delta))


def well_eigenfunction(sol, r):
    """psi(r) normalised to psi(delta) = 1: J0 inside, K0 outside."""
    r = np.asarray(r, dtype=float)
    delta, mu, kappa = sol.delta, sol.tau / sol.delta, sol.kappa
    inside = r < delta
    out = np.empty_like(r)
    j0_tau = bessel_j01(sol.tau)[0]
    if inside.any():
        out[inside] = bessel_j01(mu * r[inside])[0] / j0_tau
    if (~inside).any():
        k0_s = bessel_k01(kappa * delta)[0]
        out[~inside] = bessel_k01(kappa * r[~inside])[0] / k0_s
    return out


@dataclass(frozen=True)
class EigenfunctionResidual:
    interior: float
    exterior: float
    jump: float

    @property
    def worst(self):
        return max(self.interior, self.exterior, self.jump)

    def to_dict(self):
        return {"interior": self.interior, "exterior": self.exterior, "jump": self.jump}


def well_eigenfunction_residual(sol, samples=64, detail=False):
    """max |-psi'' - psi'/r - v psi - lam psi| over radial samples, and the slope jump at delta.

    psi'' comes from the Bessel recurrences J0'' = -J0 + J1/x, K0'' = K0 + K1/x
    at the specfun values. The jump |psi'(delta+) - psi'(delta-)| is reported
    times delta, i.e. as the mismatch in the matching equation itself.
    Needs a representable delta (not the log-only wells of the ess-spec build).
    """
    delta = sol.delta
    if not delta > 0:
        raise DomainError("delta underflows; the eigenfunction residual needs a representable well")
    h, lam = sol.h, sol.lam
    mu, kappa = sol.tau / delta, sol.kappa
    j0_tau = bessel_j01(sol.tau)[0]
    k0_s, k1_s = bessel_k01(kappa * delta)

    r_in = delta * (np.arange(1, samples + 1) - 0.5) / samples
    j0, j1 = bessel_j01(mu * r_in)
    psi = j0 / j0_tau
    d1 = -mu * j1 / j0_tau
    d2 = mu * mu * (-j0 + j1 / (mu * r_in)) / j0_tau
    res_in = np.max(np.abs(-d2 - d1 / r_in - h * psi - lam * psi))

    r_out = delta * (1.0 + np.geomspace(1e-3, 1e3, samples))
    k0, k1 = bessel_k01(kappa * r_out)
    psi = k0 / k0_s
    d1 = -kappa * k1 / k0_s
    d2 = kappa * kappa * (k0 + k1 / (kappa * r_out)) / k0_s
    res_out = np.max(np.abs(-d2 - d1 / r_out - lam * psi))

    slope_in = -sol.tau * bessel_j01(sol.tau)[1] / j0_tau
    slope_out = -kappa * delta * k1_s / k0_s
    out = EigenfunctionResidual(float(res_in), float(res_out), float(abs(slope_in - slope_out)))
    return out if detail else out.worst


# ------------------------------------------------ essential-spectrum potential

def van_der_corput(n, base=2):
    """Radical inverse of n >= 1 in the given base: dense in (0, 1)."""
    if n < 1:
        raise DomainError("enumeration index starts at 1")
    x, denom = 0.0, 1.0
    while n:
        n, digit = divmod(n, base)
        denom *= base
        x += digit / denom
    return x


def lambda_sequence(n, scale=1.0, base=2):
    """lam_n = -scale * vdc(n): dense in (-scale, 0)."""
    return -scale * van_der_corput(n, base)


def smoothstep(t):
    """Quintic 6t^5 - 15t^4 + 10t^3 on [0, 1] (0 below, 1 above) and two derivatives."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    s = t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    ds = 30.0 * t * t * (1.0 - t) ** 2
    dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return s, ds, dds


def start_index(eps):
    """Smallest n0 with sum_{n >= n0} n^-2 < eps."""
    if not eps > 0:
        raise DomainError("epsilon must be positive")
    n0 = 1
    tail = math.pi**2 / 6.0
    while not tail < eps:
        tail -= 1.0 / n0**2
        n0 += 1
    return n0


def _log_norm2(sol):
    """ln of ||psi||^2 with psi scaled so that psi = K0(kappa r) outside the well."""
    log_s = sol.log_s
    k0, sk1 = _k_parts(log_s)
    j0, j1 = bessel_j01(sol.tau)
    # pi delta^2 K0(s)^2 (J1/J0)^2 inside plus (pi / kappa^2)(s K1(s))^2 outside
    inner = math.log(math.pi) + 2.0 * sol.log_delta + 2.0 * math.log(k0) + 2.0 * math.log(abs(j1 / j0))
    outer = math.log(math.pi) - math.log(-sol.lam) + 2.0 * math.log(sk1)
    hi, lo = max(inner, outer), min(inner, outer)
    return hi + math.log1p(math.exp(lo - hi))


def _tail_mass(kappa, a):
    """int_a^inf K0(kappa r)^2 2 pi r dr."""
    x = kappa * a
    k0, k1 = bessel_k01(x)
    return math.pi / kappa**2 * x * x * (k1 * k1 - k0 * k0)


def relative_tail_mass(sol, radius):
    """Share of ||psi||^2 carried by |x| > radius (radius beyond the well)."""
    return _tail_mass(sol.kappa, radius) / math.exp(_log_norm2(sol))


@dataclass(frozen=True)
class WeylResidual:
    cutoff: float
    residual: float
    bound: float
    norm2_ratio: float

    def to_dict(self):
        return {"cutoff": self.cutoff, "residual": self.residual, "bound": self.bound,
                "norm_ratio": self.norm2_ratio}


def weyl_cutoff_residual(sol, cutoff):
    """||(-Laplace - v - lam)(psi chi)|| / ||psi chi|| for chi = 1 - smoothstep(r - cutoff + 1).

    Only the commutator 2 psi' chi' + psi (chi'' + chi'/r) on [R-1, R] survives,
    where psi is a pure K0 tail. ``bound`` is the a-priori estimate
    sqrt(2 pi R) (2 kappa K1 max|S'| + K0 (max|S''| + max|S'|/(R-1))) at R-1
    divided by ||psi chi||.
    """
    R = float(cutoff)
    if not R - 1.0 > 0 or math.log(R - 1.0) <= sol.log_delta:
        raise DomainError("the cutoff ramp [R-1, R] must lie outside the well")
    kappa = sol.kappa
    log_n2 = _log_norm2(sol)
    total = math.exp(log_n2)

    def commutator2(r):
        r = np.asarray(r, dtype=float)
        _, ds, dds = smoothstep(r - (R - 1.0))
        chi, dchi, ddchi = 1.0 - smoothstep(r - (R - 1.0))[0], -ds, -dds
        k0, k1 = bessel_k01(kappa * r)
        g = 2.0 * (-kappa * k1) * dchi + k0 * (ddchi + dchi / r)
        return g * g * 2.0 * math.pi * r

    def ramp_mass(r):
        chi = 1.0 - smoothstep(r - (R - 1.0))[0]
        k0 = bessel_k01(kappa * r)[0]
        return (k0 * chi) ** 2 * 2.0 * math.pi * r

    nodes, weights = q.gauss_legendre(96, R - 1.0, R)
    num = float(np.dot(weights, commutator2(nodes)))
    kept = float(np.dot(weights, ramp_mass(nodes)))
    norm2 = total - _tail_mass(kappa, R - 1.0) + kept
    k0a, k1a = bessel_k01(kappa * (R - 1.0))
    bound = math.sqrt(2.0 * math.pi * R) * (2.0 * kappa * k1a * 1.875 + k0a * (5.7735026918962584 + 1.875 / (R - 1.0)))
    return WeylResidual(R, math.sqrt(num / norm2), bound / math.sqrt(norm2), norm2 / total)


@dataclass(frozen=True)
class EssEntry:
    n: int
    well: WellSolution
    cutoff: float
    center: float
    tail_mass: float
    residual: float

    def to_dict(self):
        return {"n": self.n, **self.well.to_dict(), "R": self.cutoff, "center": [self.center, 0.0],
                "tail_mass": self.tail_mass, "weyl_residual": self.residual,
                "h_delta2_n2": self.well.h_delta2 * self.n**2}

    def row(self):
        return (self.n, self.well.lam, self.well.log_delta, self.well.log_h, self.cutoff, self.residual)


@dataclass
class EssSpecPotential:
    eps: float
    n0: int
    scale: float
    entries: list
    total_mass: float
    truncated: list = field(default_factory=list)

    def balls_disjoint(self):
        for a, b in zip(self.entries, self.entries[1:]):
            if not abs(b.center - a.center) > a.cutoff + b.cutoff:
                return False
        return True

    def to_dict(self):
        return {"epsilon": self.eps, "n0": self.n0, "lambda_scale": self.scale,
                "total_l1_mass": self.total_mass, "balls_disjoint": self.balls_disjoint(),
                "entries": [e.to_dict() for e in self.entries], "truncated": list(self.truncated)}

    CSV_HEADER = ("n", "lambda", "log_delta", "log_h", "R", "weyl_residual")

    def rows(self):
        return [e.row() for e in self.entries]


def narrow_well(lam, n):
    """Widest well (bisection on ln delta) with |lam| delta^2 and tau^2 both below n^-2 / (2 pi)."""
    target = 1.0 / (2.0 * math.pi * n * n)
    half_log_lam = 0.5 * math.log(-lam)

    def ok(log_delta):
        sol = well_match_log(lam, log_delta)
        return (-lam * math.exp(2.0 * log_delta) < target and sol.tau**2 < target), sol

    hi = -half_log_lam  # s = 1
    good, sol = ok(hi)
    if good:
        return sol
    lo = hi - 1.0
    while True:
        good, sol = ok(lo)
        if good:
            break
        hi, lo = lo, lo - 2.0 * (hi - lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= 1e-12 * abs(lo):
            break
        good, cand = ok(mid)
        if good:
            lo, sol = mid, cand
        else:
            hi = mid
    return sol


def choose_cutoff(sol, n, max_cutoff=1e4):
    """Smallest integer R >= 2 (ramp outside the well) with tail mass past R-1 below 1/n
    and Weyl residual below 1/(2n)."""
    R = max(2.0, math.floor(math.exp(sol.log_delta)) + 2.0)
    while R <= max_cutoff:
        if relative_tail_mass(sol, R - 1.0) < 1.0 / n:
            res = weyl_cutoff_residual(sol, R)
            if res.residual < 0.5 / n:
                return R, res
        R += 1.0
    raise DomainError(f"no cutoff up to {max_cutoff} meets the tail and residual targets for n = {n}")


def build_ess_spec_potential(eps, count=8, scale=1.0, n0=None, min_log_delta=-math.inf):
    """Wells n = n0 .. n0+count-1 tuned to lam_n = -scale vdc(n), on the e1 axis.

    Per entry pi h delta^2 < n^-2, so the L^1 mass stays below sum_{n >= n0} n^-2 < eps.
    Centres: x_{n0} = 0, x_{n+1} = x_n + R_n + R_{n+1} + 1. Entries whose ln delta
    falls below ``min_log_delta`` stop the build and are listed in ``truncated``.
    """
    if n0 is None:
        n0 = start_index(eps)
    entries, truncated = [], []
    center = 0.0
    prev = None
    for n in range(n0, n0 + count):
        lam = lambda_sequence(n, scale)
        sol = narrow_well(lam, n)
        if sol.log_delta < min_log_delta:
            truncated = list(range(n, n0 + count))
            break
        R, res = choose_cutoff(sol, n)
        if prev is not None:
            center = prev.center + prev.cutoff + R + 1.0
        entry = EssEntry(n, sol, R, center, relative_tail_mass(sol, R - 1.0), res.residual)
        entries.append(entry)
        prev = entry
    mass = sum(math.pi * e.well.h_delta2 for e in entries)
    return EssSpecPotential(float(eps), int(n0), float(scale), entries, float(mass), truncated)


def weyl_sequence_residual(entry, cutoff=None):
    """Weyl residual of the normalised, cut-off well eigenfunction of one entry.

    With ``cutoff`` None there is no truncation; the only defect is then the
    slope mismatch at r = delta, reported as the matching residual.
    """
    sol = entry.well if isinstance(entry, EssEntry) else entry
    if cutoff is None:
        return sol.residual
    return weyl_cutoff_residual(sol, cutoff).residual


# ------------------------------------------------------------ spots (d >= 3)

@dataclass(frozen=True)
class BumpProfile:
    """Radial bump psi(r) = amplitude (1 - r^2)^power on r < 1, 0 outside."""

    amplitude: float = 1.0
    power: float = 2.0

    def __post_init__(self):
        if not self.power > 1.0:
            raise DomainError("(1 - r^2)^p is C^1 across r = 1 only for p > 1")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 1.0, self.amplitude * np.clip(1.0 - r * r, 0.0, None) ** self.power, 0.0)

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        base = np.clip(1.0 - r * r, 0.0, None)
        return np.where(r < 1.0, -2.0 * self.power * self.amplitude * r * base ** (self.power - 1.0), 0.0)

    def to_dict(self):
        return {"kind": "poly_bump", "amplitude": self.amplitude, "power": self.power}


def _check_c1(value: Callable, slope: Callable):
    # the slope must shrink towards the edge: (1 - r)^(p-1) falls by 1e6^(p-1) between the probes
    near, far = (abs(float(slope(np.array([1.0 - h]))[0])) for h in (1e-12, 1e-6))
    if abs(float(value(np.array([1.0 - 1e-12]))[0])) > 1e-8 or (near > 1e-8 and near > 0.999 * far):
        raise DomainError("bump profile is not C^1 with support in the unit ball")


@dataclass(frozen=True)
class SpotsThreshold:
    dimension: int
    c1: float
    c2: float
    sigma_star: float
    quotients: tuple = ()
    sigma_test: Optional[float] = None

    def to_dict(self):
        return {"dimension": self.dimension, "C1": self.c1, "C2": self.c2, "sigma_star": self.sigma_star,
                "sigma_test": self.sigma_test,
                "scaled_rayleigh": [{"n": n, "R_n": R, "value": v} for n, R, v in self.quotients]}


def _radial_integral(f, d, rtol=1e-12):
    return q.sphere_area(d) * q.quad(lambda r: f(r) * r ** (d - 1), 0.0, 1.0, rtol=rtol, atol=1e-300)


def spots_threshold(profile=None, dimension=3, n_values=range(1, 11), sigma_factor=2.0):
    """C1 = -int |grad psi|^2, C2 = int_{|u|<1} psi^2 / |3 e1 + u|^2, sigma* = |C1| / C2.

    Then for each n the test function psi((x - x_n)/R_n), |x_n| = 2^n, R_n = 2^n/3,
    against V = |x|^-2 on the ball B_n is integrated in physical coordinates and
    divided by R_n^(d-2): (kinetic - sigma potential) / R_n^(d-2) at sigma = factor sigma*.
    """
    d = int(dimension)
    if d < 3:
        raise DomainError("the spots construction needs d >= 3")
    profile = BumpProfile() if profile is None else profile
    _check_c1(profile.value, profile.slope)

    def slope2(r):
        return float(profile.slope(np.array([r]))[0]) ** 2

    def weighted(r, offset, scale):
        # psi^2 times the sphere average of |offset e1 + scale u|^-2 over |u| = r
        psi2 = float(profile.value(np.array([r]))[0]) ** 2
        avg = q.sphere_average(lambda rho: rho**-2.0, scale * r, offset, d)
        return psi2 * avg

    c1 = -_radial_integral(slope2, d)
    c2 = _radial_integral(lambda r: weighted(r, 3.0, 1.0), d)
    sigma_star = abs(c1) / c2
    sigma = sigma_factor * sigma_star
    quotients = []
    for n in n_values:
        Rn = 2.0**n / 3.0
        # physical coordinates: x = x_n + R_n u, dx = R_n^d du, grad = R_n^-1 grad_u
        kinetic = _radial_integral(slope2, d) * Rn ** (d - 2)
        potential = _radial_integral(lambda r: weighted(r, 2.0**n, Rn), d) * Rn**d
        quotients.append((int(n), Rn, (kinetic - sigma * potential) / Rn ** (d - 2)))
    return SpotsThreshold(d, float(c1), float(c2), float(sigma_star), tuple(quotients), float(sigma))


# ------------------------------------------------------- sparse bumps (d >= 3)

def green_constant(d):
    """c(d) = Gamma(d/2 - 1) / (4 pi^(d/2)): the Laplace Green function is c(d)|x|^(2-d)."""
    return math.gamma(d / 2.0 - 1.0) / (4.0 * math.pi ** (d / 2.0))


def self_interaction_constant(d):
    """c1(d) = sup_x c(d) int_{|y|<1} |x - y|^(2-d) dy.

    The Newtonian potential of the uniform ball is radially decreasing, so the sup
    is the value at the centre, integrated here by quadrature.
    """
    return green_constant(d) * _radial_integral(lambda r: r ** (2.0 - d), d)


def gamma_entry(n, m, d):
    denom = abs(2.0**m - 2.0**n) ** (d - 2) - 2.0
    if not denom > 0:
        raise DomainError(f"Gamma denominator not positive at n={n}, m={m}")
    return q.ball_volume(d) * green_constant(d) / denom


def _tail_bound(N, d):
    """Bound on sum_{n > N} Gamma_{n,m} for any m <= N: |2^n - 2^m| >= 2^(n-1) and 1/(x-2) <= 2/x."""
    vc = q.ball_volume(d) * green_constant(d)
    r = 2.0 ** -(d - 2)
    return 2.0 * vc * 2.0 ** (-N * (d - 2)) / (1.0 - r)


def _far_row_bound(m, d):
    """Bound on the whole row sum for m beyond the explicit range."""
    vc = q.ball_volume(d) * green_constant(d)
    return 2.0 * vc * ((m - 3) * 2.0 ** (-(m - 1) * (d - 2)) + 2.0 ** (-m * (d - 2)) / (1.0 - 2.0 ** -(d - 2)))


def gamma_row_sup(d, n_terms):
    """(rho, tail): rho bounds sup_m sum_{n >= 3, n != m} Gamma_{n,m} using rows up to n_terms."""
    top = 3 + int(n_terms)
    idx = np.arange(3, top)
    rows = []
    for m in idx:
        rows.append(sum(gamma_entry(int(n), int(m), d) for n in idx if n != m))
    tail = _tail_bound(top - 1, d)
    rho = max(max(rows) + tail, _far_row_bound(top, d))
    return float(rho), float(tail)


@dataclass(frozen=True)
class SparseBumpCertificate:
    dimension: int
    n0: int
    n_terms: int
    rho: float
    tail: float
    gamma_sup: float
    kappa: float
    verdict: str

    def to_dict(self):
        return {"dimension": self.dimension, "n0": self.n0, "n_terms": self.n_terms, "rho": self.rho,
                "tail_bound": self.tail, "gamma_sup": self.gamma_sup, "kappa": self.kappa,
                "verdict": self.verdict}


def sparse_bump_certificate(dimension=3, n0=None, n_terms=40):
    """Emptiness test for V = sum_{n >= n0} V0(x - x_n) / ln n, |x_n| = 2^n.

    kappa = 2 rho / ln n0 is the l^inf contraction factor left once the self term
    gamma_sup = c1(d)/ln n0 < 1/2 is absorbed; verdict Empty iff both are below
    their thresholds. Without n0, the smallest n0 >= 3 with verdict Empty is reported.
    """
    d = int(dimension)
    if d < 3:
        raise DomainError("sparse bumps need d >= 3")
    rho, tail = gamma_row_sup(d, n_terms)
    c1 = self_interaction_constant(d)

    def certify(k):
        gamma_sup = c1 / math.log(k)
        kappa = 2.0 * rho / math.log(k)
        verdict = "Empty" if gamma_sup < 0.5 and kappa < 1.0 else "Inconclusive"
        return SparseBumpCertificate(d, int(k), int(n_terms), rho, tail, gamma_sup, kappa, verdict)

    if n0 is not None:
        if n0 < 3:
            raise DomainError("n0 must be at least 3")
        return certify(int(n0))
    k = 3
    while True:
        cert = certify(k)
        if cert.verdict == "Empty":
            return cert
        k += 1


@dataclass(frozen=True)
class BetaDivergence:
    beta: float
    bump_integral: float
    partial_sums: tuple
    comparison_start: Optional[float]
    divergent: bool
    log_terms_to_exceed: Optional[float]

    def to_dict(self):
        return {"beta": self.beta, "bump_integral": self.bump_integral,
                "partial_sums": [{"N": n, "sum": s} for n, s in self.partial_sums],
                "comparison_start": self.comparison_start, "divergent": self.divergent,
                "log_terms_to_exceed": self.log_terms_to_exceed}


def _comparison_start(beta):
    """n* with (ln n)^beta <= n for every n >= n*: from t >= beta ln t in t = ln n."""
    lo = max(beta, 1.0)
    if lo >= beta * math.log(lo):
        return math.exp(lo)
    hi = 2.0 * lo
    while hi < beta * math.log(hi):
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid >= beta * math.log(mid):
            hi = mid
        else:
            lo = mid
    return math.exp(hi)


def beta_divergence_check(beta, profile=None, dimension=3, n0=3, n_max=None, checkpoints=(1000, 1000000),
                          bound=1e6):
    """Is int V^beta infinite for V = sum_{n0}^{n_max} V0(x - x_n) / ln n?

    The bumps are disjoint, so int V^beta = I_beta sum (ln n)^-beta with
    I_beta = int V0^beta. For the infinite family, (ln n)^-beta >= 1/n from
    n* on, and the harmonic tail certifies divergence; ``log_terms_to_exceed``
    is ln N for an N whose partial sum provably passes ``bound``.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    d = int(dimension)
    profile = BumpProfile() if profile is None else profile
    ib = _radial_integral(lambda r: float(profile.value(np.array([r]))[0]) ** beta, d)
    n0 = max(int(n0), 2)
    stops = sorted(int(c) for c in checkpoints if c >= n0)
    if n_max is not None:
        if n_max < n0:
            raise DomainError("n_max must be at least n0")
        stops = sorted({min(c, int(n_max)) for c in stops} | {int(n_max)})
    sums = []
    if stops:
        n = np.arange(n0, stops[-1] + 1, dtype=float)
        cum = np.cumsum(np.log(n) ** -beta) * ib
        sums = [(int(s), float(cum[s - n0])) for s in stops]
    if n_max is not None:
        return BetaDivergence(float(beta), float(ib), tuple(sums), None, False, None)
    start = max(_comparison_start(beta), float(n0))
    # sum_{n=a}^{N} 1/n >= ln((N+1)/a) with a = ceil(n*)
    a = math.ceil(start)
    log_n = math.log(a) + bound / ib if ib > 0 else None
    return BetaDivergence(float(beta), float(ib), tuple(sums), float(start), ib > 0, log_n)
