"""Lanczos eigensolvers, the Birman-Schwinger function mu_+(lambda) and its root.

``lanczos`` is a plain symmetric Lanczos with full reorthogonalisation and an
optional metric (for operators self-adjoint in a weighted inner product).
``lowest_eigenpairs`` runs it on the shifted inverse (H - s)^(-1), each solve
done by conjugate gradients preconditioned with (A - s)^(-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operator_grid as og
from .errors import DomainError, NoRootError

DEFAULT_SEED = 20240531


@dataclass
class LanczosResult:
    values: np.ndarray
    vectors: list
    iterations: int
    converged: bool
    residual_bounds: np.ndarray


def lanczos(apply, shape, count=1, which="largest", tol=1e-10, max_iter=300, seed=DEFAULT_SEED,
            dot=None, metric=None, start=None, check_every=5):
    """Extreme eigenpairs of a self-adjoint operator.

    ``dot(u, v)`` is the Euclidean-type inner product (default: real dot).
    With ``metric`` (a positive operator B) the operator is assumed self-adjoint
    in <u, B v>; then ``apply`` must return (Op q, B Op q) given (q, B q).
    Convergence: Ritz residual bound |beta_m s_m| <= tol * max(|theta|, 1).
    """
    if dot is None:
        def dot(u, v):
            return float(np.vdot(u, v).real)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(shape) if start is None else np.array(start, dtype=float)
    bq = metric(q) if metric is not None else q
    nrm = math.sqrt(dot(q, bq))
    q, bq = q / nrm, bq / nrm
    Q, BQ = [q], [bq]
    alphas, betas = [], []
    theta = s = None
    converged = False
    for j in range(max_iter):
        if metric is not None:
            w, bw = apply(Q[j], BQ[j])
        else:
            w = apply(Q[j])
            bw = w
        a = dot(Q[j], bw)
        alphas.append(a)
        w = w - a * Q[j]
        bw = bw - a * BQ[j] if metric is not None else w
        if j > 0:
            w = w - betas[-1] * Q[j - 1]
            if metric is not None:
                bw = bw - betas[-1] * BQ[j - 1]
            else:
                bw = w
        for _ in range(2):  # full reorthogonalisation, twice is enough
            for qi, bqi in zip(Q, BQ):
                c = dot(bqi, w)
                w = w - c * qi
                if metric is not None:
                    bw = bw - c * bqi
            if metric is None:
                bw = w
        b = math.sqrt(max(dot(w, bw), 0.0))
        m = j + 1
        done = b < 1e-14 * max(1.0, abs(a)) or m == int(np.prod(shape))
        if m >= count and (m % check_every == 0 or done or j == max_iter - 1):
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, s = np.linalg.eigh(T)
            order = np.argsort(theta)[::-1] if which == "largest" else np.argsort(theta)
            theta, s = theta[order][:count], s[:, order][:, :count]
            bounds = np.abs(b * s[-1, :])
            if done or np.all(bounds <= tol * np.maximum(np.abs(theta), 1.0)):
                converged = True
                break
        if done:
            break
        betas.append(b)
        Q.append(w / b)
        BQ.append(bw / b)
    if theta is None:
        T = np.diag(alphas) + np.diag(betas[:len(alphas) - 1], 1) + np.diag(betas[:len(alphas) - 1], -1)
        theta, s = np.linalg.eigh(T)
        order = np.argsort(theta)[::-1] if which == "largest" else np.argsort(theta)
        theta, s = theta[order][:count], s[:, order][:, :count]
        bounds = np.full(len(theta), np.inf)
    m = s.shape[0]
    vectors = [sum(s[i, c] * Q[i] for i in range(m)) for c in range(s.shape[1])]
    return LanczosResult(np.asarray(theta), vectors, m, converged, np.asarray(bounds))


# ------------------------------------------------------------------ spectra

@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    vectors: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"eigenvalues": [float(v) for v in self.eigenvalues],
                "residuals": [float(r) for r in self.residuals],
                "iterations": int(self.iterations), "converged": bool(self.converged)}


def _pcg(H, shift, rhs, tol, max_iter=500):
    """Solve (H - shift) x = rhs by CG with preconditioner (A - shift)^(-1)."""
    grid = H.grid
    pre = 1.0 / (H.symbol - shift)

    def op(x):
        return og.apply_hamiltonian(H, x) - shift * x

    x = og.apply_multiplier(grid, pre, rhs)
    r = rhs - op(x)
    z = og.apply_multiplier(grid, pre, r)
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    bnorm = float(np.linalg.norm(rhs))
    for _ in range(max_iter):
        if float(np.linalg.norm(r)) <= tol * bnorm:
            break
        Ap = op(p)
        step = rz / float(np.vdot(p, Ap).real)
        x = x + step * p
        r = r - step * Ap
        z = og.apply_multiplier(grid, pre, r)
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def lowest_eigenpairs(H, count=1, tol=1e-8, seed=DEFAULT_SEED, max_iter=300):
    """The ``count`` smallest eigenvalues of H with residuals ||(H - lam) psi|| / ||psi||.

    Shift-and-invert: Lanczos on (H - s)^(-1), s = -sigma max V_+ - 1 below the
    spectrum; lam = s + 1/theta. ``converged`` requires every residual <= tol.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    shift = H.lower_bound() - 1.0
    inner_tol = min(1e-3 * tol, 1e-11)

    def apply(q):
        return _pcg(H, shift, q, inner_tol)

    res = lanczos(apply, H.grid.shape, count=count, which="largest", tol=1e-3 * tol,
                  max_iter=max_iter, seed=seed)
    eig, resid, vecs = [], [], []
    for theta, v in zip(res.values, res.vectors):
        lam = shift + 1.0 / theta
        hv = og.apply_hamiltonian(H, v)
        nv = H.grid.norm(v)
        lam = H.grid.inner(v, hv).real / nv**2  # Rayleigh quotient of the Ritz vector
        eig.append(lam)
        resid.append(H.grid.norm(hv - lam * v) / nv)
        vecs.append(v / nv)
    order = np.argsort(eig)
    eig = np.asarray(eig)[order]
    resid = np.asarray(resid)[order]
    vecs = [vecs[i] for i in order]
    return SpectralReport(eig, resid, res.iterations, bool(np.all(resid <= tol)), vecs)


def weyl_residual(H, phi, lam):
    """||(H - lam) phi|| / ||phi||."""
    nrm = H.grid.norm(phi)
    if not nrm > 0:
        raise DomainError("Weyl residual of the zero vector")
    return H.grid.norm(og.apply_hamiltonian(H, phi) - lam * np.asarray(phi)) / nrm


# ------------------------------------------------------- Birman-Schwinger

def bs_spectral_radius(H, lam, tol=1e-10, seed=DEFAULT_SEED, max_iter=400):
    """Largest eigenvalue mu_+(lam) of K_lam (can be <= 0 when V <= 0).

    ``H`` is a GridHamiltonian (periodic K_lam) or an operator_grid.FreeSpaceBS.
    """
    if not lam < 0:
        raise DomainError(f"mu_+ needs lambda < 0, got {lam}")
    if not np.any(H.potential != 0.0):
        return 0.0
    if isinstance(H, og.FreeSpaceBS):
        return _free_space_mu(H, lam, tol, seed, max_iter)
    mult = og.resolvent_sqrt_multiplier(H, lam)
    res = lanczos(lambda f: og.apply_bs_operator(H, lam, f, mult), H.grid.shape, which="largest",
                  tol=tol, max_iter=max_iter, seed=seed)
    return float(res.values[0])


def _free_space_mu(F, lam, tol, seed, max_iter):
    G = F.resolvent(lam)
    v = F.potential
    vol = F.grid.cell_volume
    # S = V G is self-adjoint in <f, G g>; carry q and G q along (one convolution per step)

    def apply(q, gq):
        w = v * gq
        return w, G.apply(w)

    def dot(u, w):
        return float(np.vdot(u, w).real) * vol

    res = lanczos(apply, F.grid.shape, which="largest", tol=tol, max_iter=max_iter, seed=seed,
                  dot=dot, metric=G.apply)
    return float(res.values[0])


@dataclass
class BsRootResult:
    lam: float
    mu: float
    bracket: tuple
    evaluations: int
    sigma: float

    def to_dict(self):
        return {"lambda": self.lam, "mu": self.mu, "bracket": list(self.bracket),
                "evaluations": self.evaluations, "sigma": self.sigma}


def bs_root(H, sigma, bracket=None, tol=1e-8, max_sweep=60, seed=DEFAULT_SEED):
    """Ground-state energy lam < 0 from mu_+(lam) = 1/sigma.

    The number of eigenvalues of H below lam equals the number of eigenvalues
    of sigma K_lam above 1, so [mu_+(lam) >= 1/sigma] flips exactly once, at the
    ground state. Without a bracket the sweep is lam_j = -2^-j a, a = sigma max V_+.
    The bracket is then refined (Illinois regula falsi, bisection fallback)
    until |mu_+ - 1/sigma| <= tol.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    target = 1.0 / sigma
    evals = 0

    def f(lam):
        nonlocal evals
        evals += 1
        return bs_spectral_radius(H, lam, seed=seed) - target

    if bracket is None:
        a = sigma * H.max_positive_potential
        if a <= 0:
            raise NoRootError("V_+ = 0: mu_+ <= 0 < 1/sigma, no negative eigenvalue")
        lo, flo = -a, f(-a)
        if flo >= 0:
            raise NoRootError("mu_+ already exceeds 1/sigma at the spectral lower bound")
        hi = fhi = None
        for j in range(1, max_sweep + 1):
            lam = -a * 2.0**-j
            val = f(lam)
            if val >= 0:
                hi, fhi = lam, val
                break
            lo, flo = lam, val
        if hi is None:
            raise NoRootError(f"no bracket for mu_+ = 1/sigma on (-{a}, -{a * 2.0**-max_sweep:.3g})")
    else:
        lo, hi = sorted(bracket)
        flo, fhi = f(lo), f(hi)
        if not (flo < 0 <= fhi):
            raise NoRootError(f"bracket [{lo}, {hi}] does not straddle mu_+ = 1/sigma")
    if fhi == 0:
        return BsRootResult(hi, target, (lo, hi), evals, sigma)
    side = 0
    lam, val = hi, fhi
    for _ in range(200):
        lam = (lo * fhi - hi * flo) / (fhi - flo)
        if not lo < lam < hi or (hi - lo) < 1e-15 * abs(lo):
            lam = 0.5 * (lo + hi)
        val = f(lam)
        if abs(val) <= tol:
            break
        if val < 0:
            lo, flo = lam, val
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = lam, val
            if side == 1:
                flo *= 0.5
            side = 1
        if hi - lo <= 1e-15 * abs(lam):
            break
    return BsRootResult(float(lam), float(val + target), (float(lo), float(hi)), evals, sigma)
