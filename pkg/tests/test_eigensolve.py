import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specgap import core_model as cm
from specgap import eigensolve as es
from specgap import operator_grid as og
from specgap.errors import DomainError, NoRootError


def square_well_oracle(h=1.0, delta=1.0, sigma=1.0):
    """Even ground state of -u'' - sigma h 1_{|x|<delta} u: q tan(q delta) = kappa."""
    lo, hi = -sigma * h + 1e-15, -1e-15
    f = lambda lam: math.sqrt(sigma * h + lam) * math.tan(math.sqrt(sigma * h + lam) * delta) - math.sqrt(-lam)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


WELL_LAMBDA = square_well_oracle()


def _well(L=20.0, N=512, sigma=1.0):
    return og.GridHamiltonian.build(og.Grid(1, L, N), cm.PowerLaw(1, 2.0), cm.RadialWell(1, 1.0, 1.0), sigma)


def test_oracle_value():
    assert WELL_LAMBDA == pytest.approx(-0.45375316586032824805, abs=1e-13)


def test_lanczos_diagonal():
    diag = np.linspace(-3.0, 5.0, 200)
    res = es.lanczos(lambda v: diag * v, (200,), count=3, which="largest", tol=1e-12, max_iter=200)
    assert res.converged
    assert np.allclose(np.sort(res.values)[::-1], diag[::-1][:3], atol=1e-9)
    low = es.lanczos(lambda v: diag * v, (200,), count=2, which="smallest", tol=1e-12, max_iter=200)
    assert np.allclose(np.sort(low.values), diag[:2], atol=1e-9)


def test_lowest_eigenpairs_square_well():
    rep = es.lowest_eigenpairs(_well(), 1, tol=1e-9)
    assert rep.converged
    assert rep.eigenvalues[0] == pytest.approx(WELL_LAMBDA, rel=1e-3)


@pytest.mark.parametrize("tol", [1e-6, 1e-8])
def test_rayleigh_quotient_matches_eigenvalue(tol):
    H = _well(sigma=3.0)
    rep = es.lowest_eigenpairs(H, 2, tol=tol)
    for lam, vec, res in zip(rep.eigenvalues, rep.vectors, rep.residuals):
        assert abs(og.rayleigh_quotient(H, vec) - lam) <= 10 * tol
        assert es.weyl_residual(H, vec, lam) == pytest.approx(res, rel=1e-6, abs=1e-12)
        assert res <= tol


def test_negative_count_monotone_in_sigma():
    base = cm.RadialWell(1, 1.0, 1.0)
    dw = cm.WeightedTranslates(base, (([-3.0], 1.0), ([3.0], 1.0)))
    grid = og.Grid(1, 30.0, 512)
    counts = []
    for sigma in (0.5, 1.0, 2.0, 4.0):
        H = og.GridHamiltonian.build(grid, cm.PowerLaw(1, 2.0), dw, sigma)
        rep = es.lowest_eigenpairs(H, 5, tol=1e-8)
        counts.append(int(np.sum(rep.eigenvalues < -1e-6)))
    assert counts == sorted(counts) and counts[-1] > counts[0]


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=0.3, max_value=3.0))
def test_mu_plus_nonincreasing(height):
    H = og.GridHamiltonian.build(og.Grid(1, 20.0, 256), cm.PowerLaw(1, 1.5), cm.RadialWell(1, height, 1.0), 1.0)
    lams = -np.geomspace(1e-3, 5.0, 9)
    mus = [es.bs_spectral_radius(H, lam) for lam in lams]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(mus, mus[1:]))


def test_bs_root_matches_oracle_and_lanczos():
    H = _well()
    r = es.bs_root(H, 1.0)
    assert 1.0 / r.mu == pytest.approx(1.0, abs=1e-7)
    lz = es.lowest_eigenpairs(H, 1, tol=1e-10).eigenvalues[0]
    assert r.lam == pytest.approx(lz, abs=1e-6)
    assert r.lam == pytest.approx(WELL_LAMBDA, rel=1e-3)
    assert r.bracket[0] <= r.lam <= r.bracket[1]


def test_bs_root_free_space_exact_well():
    # free-space Birman-Schwinger: no periodic images, so the grid error is only dx
    F = og.FreeSpaceBS.build(og.Grid(1, 4.0, 512), cm.RadialWell(1, 1.0, 1.0))
    r = es.bs_root(F, 1.0)
    assert r.lam == pytest.approx(WELL_LAMBDA, rel=1e-3)


def test_bs_root_explicit_bracket_and_errors():
    H = _well()
    r = es.bs_root(H, 1.0, bracket=(-0.9, -0.1))
    assert r.lam == pytest.approx(WELL_LAMBDA, rel=1e-3)
    with pytest.raises(NoRootError):
        es.bs_root(H, 1.0, bracket=(-0.3, -0.1))
    neg = og.GridHamiltonian.build(H.grid, cm.PowerLaw(1, 2.0), cm.RadialWell(1, -1.0, 1.0), 1.0)
    with pytest.raises(NoRootError):
        es.bs_root(neg, 1.0)
    with pytest.raises(DomainError):
        es.bs_root(H, 0.0)
    with pytest.raises(DomainError):
        es.bs_spectral_radius(H, 0.5)


def test_mu_zero_for_zero_potential():
    H = og.GridHamiltonian.build(og.Grid(1, 5.0, 64), cm.PowerLaw(1, 2.0), cm.GaussianBump(1, 0.0, 1.0), 1.0)
    assert es.bs_spectral_radius(H, -1.0) == 0.0


def test_seeded_determinism():
    H = _well(sigma=2.0)
    a = es.lowest_eigenpairs(H, 2, seed=7)
    b = es.lowest_eigenpairs(H, 2, seed=7)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert es.bs_root(H, 2.0).to_dict() == es.bs_root(H, 2.0).to_dict()


def test_report_serialisation():
    rep = es.lowest_eigenpairs(_well(), 1)
    d = rep.to_dict()
    assert set(d) == {"eigenvalues", "residuals", "iterations", "converged"}
    assert isinstance(d["eigenvalues"][0], float)
