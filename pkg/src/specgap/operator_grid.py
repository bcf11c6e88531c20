"""Periodic-box spectral discretisation of H = A - sigma V.

States are plain numpy arrays with one axis per dimension (N or N x N);
inner products carry the volume weight dx**d. A is applied as a Fourier
multiplier, V pointwise.

:class:`FreeSpaceResolvent` is the non-periodic companion used for weak
coupling: the exact whole-space resolvent of -Laplacian (alpha = 2) acting on
functions supported in the box, via a truncated-kernel FFT convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import core_model as cm
from .errors import DomainError, ShapeMismatch
from .specfun import bessel_j0, bessel_j1, bessel_k01


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_j = -L + j dx, dx = 2L/N, on each of ``dimension`` axes."""

    dimension: int
    half_width: float
    points: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError("grids are implemented for d = 1 and d = 2")
        n = self.points
        if n < 2 or n & (n - 1):
            raise DomainError(f"points per axis must be a power of two, got {n}")
        if self.half_width <= 0:
            raise DomainError("half width must be positive")

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.points

    @property
    def shape(self):
        return (self.points,) * self.dimension

    @property
    def cell_volume(self):
        return self.spacing**self.dimension

    @cached_property
    def axis(self):
        return -self.half_width + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self):
        """k_j = pi j / L in FFT order (0, 1, ..., N/2 - 1, -N/2, ..., -1)."""
        return 2.0 * math.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def mesh(self):
        """Coordinates with a trailing axis of length d (shape N or N x N x 2)."""
        if self.dimension == 1:
            return self.axis.copy()
        xx, yy = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    @cached_property
    def k_norm(self):
        k = self.wavenumbers
        if self.dimension == 1:
            return np.abs(k)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        return np.hypot(kx, ky)

    def inner(self, f, g):
        """<f, g> = dx^d sum conj(f) g."""
        return complex(np.vdot(f, g)) * self.cell_volume

    def norm(self, f):
        return math.sqrt(max(self.inner(f, f).real, 0.0))

    def to_dict(self):
        return {"dimension": self.dimension, "half_width": self.half_width, "points": self.points}


def _transform(f):
    return np.fft.fftn(f)


def _inverse(fh, real):
    out = np.fft.ifftn(fh)
    return out.real if real else out


def apply_multiplier(grid, mult, f):
    """ifft(mult * fft(f)); real input with an even multiplier stays real."""
    f = np.asarray(f)
    return _inverse(mult * _transform(f), np.isrealobj(f))


def cell_averaged(grid, spec, sub=16):
    """Average V over each grid cell (midpoint sub-sampling, ``sub`` per axis).

    1D radial wells are averaged exactly. Cell averages keep the potential's
    mass and move discontinuity errors to second order in dx.
    """
    h = grid.spacing
    if grid.dimension == 1 and isinstance(spec, cm.RadialWell):
        lo = grid.axis - 0.5 * h
        c = spec.center[0]
        overlap = np.clip(np.minimum(lo + h, c + spec.radius) - np.maximum(lo, c - spec.radius), 0.0, h)
        return spec.height * overlap / h
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    acc = np.zeros(grid.shape)
    if grid.dimension == 1:
        for o in offs:
            acc += spec.evaluate(grid.axis + o * h)
    else:
        for ox in offs:
            for oy in offs:
                acc += spec.evaluate(grid.mesh + np.array([ox * h, oy * h]))
    return acc / sub**grid.dimension


def _discontinuous(spec):
    if isinstance(spec, (cm.RadialWell, cm.InverseSquareOnBalls)):
        return True
    if isinstance(spec, cm.WeightedTranslates):
        return isinstance(spec.base, cm.RadialWell)
    return False


def sample_potential(grid, spec, mode="auto"):
    """V on the grid: point values, cell averages, or 'auto' (averages for jumps)."""
    if isinstance(spec, cm.Sampled):
        arr = spec.array
        if arr.shape != grid.shape:
            raise ShapeMismatch(f"sampled potential has shape {arr.shape}, grid has {grid.shape}")
        return arr.copy()
    if spec.dimension != grid.dimension:
        raise ShapeMismatch(f"potential dimension {spec.dimension} != grid dimension {grid.dimension}")
    if mode == "auto":
        mode = "cell" if _discontinuous(spec) else "point"
    if mode == "cell":
        return cell_averaged(grid, spec)
    if mode == "point":
        return np.asarray(spec.evaluate(grid.mesh), dtype=float).reshape(grid.shape)
    raise DomainError(f"unknown sampling mode {mode!r}")


@dataclass(frozen=True, eq=False)
class GridHamiltonian:
    """H = A - sigma V on a periodic grid; ``symbol`` is a(k) in FFT order."""

    grid: Grid
    symbol: np.ndarray
    potential: np.ndarray
    sigma: float
    scenario: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.symbol.shape != self.grid.shape or self.potential.shape != self.grid.shape:
            raise ShapeMismatch(
                f"symbol {self.symbol.shape} / potential {self.potential.shape} vs grid {self.grid.shape}")
        if np.any(self.symbol < 0) or not np.all(np.isfinite(self.potential)):
            raise DomainError("symbol samples must be >= 0 and potential samples finite")
        if self.sigma < 0:
            raise DomainError("coupling sigma must be >= 0")
        self.symbol.setflags(write=False)
        self.potential.setflags(write=False)

    @classmethod
    def build(cls, grid, symbol_spec, potential_spec, sigma, sampling="auto"):
        if symbol_spec.dimension != grid.dimension:
            raise ShapeMismatch(f"symbol dimension {symbol_spec.dimension} != grid dimension {grid.dimension}")
        a = np.asarray(symbol_spec.radial(grid.k_norm), dtype=float)
        v = sample_potential(grid, potential_spec, sampling)
        scenario = {"grid": grid.to_dict(), "symbol": symbol_spec.to_dict(),
                    "potential": potential_spec.to_dict(), "sigma": sigma, "sampling": sampling}
        return cls(grid, a, v, float(sigma), scenario)

    def with_sigma(self, sigma):
        sc = dict(self.scenario, sigma=sigma) if self.scenario else {}
        return GridHamiltonian(self.grid, self.symbol, self.potential, float(sigma), sc)

    @property
    def max_positive_potential(self):
        return float(max(self.potential.max(), 0.0))

    def lower_bound(self):
        """H >= -sigma max V_+ since A >= 0."""
        return -self.sigma * self.max_positive_potential


def _check(H, f):
    f = np.asarray(f)
    if f.shape != H.grid.shape:
        raise ShapeMismatch(f"state has shape {f.shape}, grid has {H.grid.shape}")
    return f


def apply_hamiltonian(H, psi):
    psi = _check(H, psi)
    return apply_multiplier(H.grid, H.symbol, psi) - H.sigma * H.potential * psi


def resolvent_sqrt_multiplier(H, lam):
    if not lam < 0:
        raise DomainError(f"Birman-Schwinger operator needs lambda < 0, got {lam}")
    return 1.0 / np.sqrt(H.symbol - lam)


def apply_bs_operator(H, lam, f, mult=None):
    """K_lam f = (A - lam)^(-1/2) V (A - lam)^(-1/2) f."""
    f = _check(H, f)
    if mult is None:
        mult = resolvent_sqrt_multiplier(H, lam)
    g = apply_multiplier(H.grid, mult, f)
    return apply_multiplier(H.grid, mult, H.potential * g)


def rayleigh_quotient(H, psi):
    psi = _check(H, psi)
    nn = H.grid.inner(psi, psi).real
    if not nn > 0:
        raise DomainError("Rayleigh quotient of the zero vector")
    return H.grid.inner(psi, apply_hamiltonian(H, psi)).real / nn


def plane_wave(grid, index):
    """exp(i k.x) for the grid wavenumber with FFT index ``index`` (int or pair)."""
    idx = (index,) if np.isscalar(index) else tuple(index)
    k = [grid.wavenumbers[i] for i in idx]
    if grid.dimension == 1:
        return np.exp(1j * k[0] * grid.axis), k[0]
    mesh = grid.mesh
    return np.exp(1j * (k[0] * mesh[..., 0] + k[1] * mesh[..., 1])), np.hypot(*k)


# ------------------------------------------------------------ free space

def truncated_kernel_hat(k, kappa, reach, dimension):
    """Fourier transform of G_kappa * 1_{|x| < reach}, G_kappa the free resolvent kernel.

    d = 1: G = exp(-kappa|x|)/(2 kappa). d = 2: G = K0(kappa|x|)/(2 pi).
    Non-unitary convention: hat f(k) = int f(x) exp(-i k.x) dx.
    """
    k = np.asarray(k, dtype=float)
    D = reach
    if dimension == 1:
        decay = math.exp(-kappa * D)
        return (kappa - decay * (kappa * np.cos(k * D) - k * np.sin(k * D))) / (kappa * (k * k + kappa * kappa))
    k0, k1 = bessel_k01(kappa * D)
    return (1.0 + D * k * bessel_j1(k * D) * k0 - D * kappa * bessel_j0(k * D) * k1) / (k * k + kappa * kappa)


class FreeSpaceResolvent:
    """(-Laplacian + kappa^2)^(-1) on R^d restricted to functions living in the grid box.

    The truncated kernel is spectrally exact for band-limited data: its
    transform is sampled on a padded grid, cropped to offsets in [-2L, 2L)
    and applied as a circular convolution on a doubled grid.
    """

    def __init__(self, grid, kappa, pad=4):
        if not kappa > 0:
            raise DomainError("free-space resolvent needs kappa > 0")
        self.grid = grid
        self.kappa = float(kappa)
        d, n, h = grid.dimension, grid.points, grid.spacing
        reach = 2.0 * math.sqrt(d) * grid.half_width * 1.0001
        big = pad * 2 * n
        if big * h < 2.0 * grid.half_width + reach:
            raise DomainError("padding too small for the truncated kernel")
        kb = 2.0 * math.pi * np.fft.fftfreq(big, d=h)
        if d == 1:
            knorm = np.abs(kb)
        else:
            kx, ky = np.meshgrid(kb, kb, indexing="ij")
            knorm = np.hypot(kx, ky)
        kernel_big = np.fft.ifftn(truncated_kernel_hat(knorm, self.kappa, reach, d)).real / h**d
        # offsets -n .. n-1 in FFT order on the 2n convolution grid
        idx = np.r_[0:n, big - n:big]
        kern = kernel_big[np.ix_(*([idx] * d))]
        self._kernel_hat = np.fft.fftn(kern)
        self._n = n

    def apply(self, f):
        n = self._n
        d = self.grid.dimension
        padded = np.zeros((2 * n,) * d)
        padded[(slice(0, n),) * d] = f
        conv = np.fft.ifftn(np.fft.fftn(padded) * self._kernel_hat).real
        return conv[(slice(0, n),) * d] * self.grid.cell_volume


@dataclass(eq=False)
class FreeSpaceBS:
    """Birman-Schwinger family for -Laplacian - sigma V on R^d, V sampled in the box.

    K_lam has the same non-zero spectrum as S = V G_lam, which is self-adjoint in
    the inner product <f, G_lam g>; eigensolve works with S in that metric.
    """

    grid: Grid
    potential: np.ndarray
    pad: int = 4
    scenario: dict = field(default_factory=dict)

    @classmethod
    def build(cls, grid, potential_spec, sampling="auto", pad=4):
        v = sample_potential(grid, potential_spec, sampling)
        return cls(grid, v, pad, {"grid": grid.to_dict(), "potential": potential_spec.to_dict(),
                                  "sampling": sampling, "free_space": True})

    @property
    def max_positive_potential(self):
        return float(max(self.potential.max(), 0.0))

    def resolvent(self, lam):
        if not lam < 0:
            raise DomainError(f"Birman-Schwinger operator needs lambda < 0, got {lam}")
        return FreeSpaceResolvent(self.grid, math.sqrt(-lam), self.pad)
