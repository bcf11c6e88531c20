import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from specgap import constructions as cs
from specgap.errors import DomainError
from specgap.specfun import J0_FIRST_ZERO

# mpmath at 30 digits
TAU_REF = 1.4329255093882258849  # well_match(-1, 1)
H_REF = 3.0532755154555066286
C2_SPOTS_REF = 0.0520301165066037782
SIGMA_STAR_REF = 98.1419045099914616


def test_well_match_reference():
    sol = cs.well_match(-1.0, 1.0)
    assert sol.tau == pytest.approx(TAU_REF, abs=1e-14)
    assert sol.h == pytest.approx(H_REF, rel=1e-13)
    assert sol.residual <= 1e-12


def test_well_match_against_scipy_bessels():
    # independent route: brentq on the matching function with scipy's J and K
    for lam, delta in ((-0.3, 0.5), (-4.0, 0.2), (-0.01, 3.0)):
        s = math.sqrt(-lam) * delta
        rhs = -s * special.k1(s) / special.k0(s)
        f = lambda t: -t * special.j1(t) / special.j0(t) - rhs
        tau = optimize_root(f, 1e-12, 2.404825557695773 - 1e-12)
        assert cs.well_match(lam, delta).tau == pytest.approx(tau, rel=1e-11)


def optimize_root(f, a, b):
    from scipy import optimize
    return optimize.brentq(f, a, b, xtol=1e-16, rtol=1e-15)


admissible = st.tuples(st.floats(min_value=-2.0, max_value=1.0), st.floats(min_value=0.01, max_value=1.0))


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_matching_and_ode_residuals(pair):
    u, frac = pair
    lam = -(10.0**u)
    delta = frac / math.sqrt(-lam)
    sol = cs.well_match(lam, delta)
    assert sol.residual <= 1e-10
    assert 0 < sol.tau < J0_FIRST_ZERO
    assert cs.well_eigenfunction_residual(sol) <= 1e-8


def test_eigenfunction_continuous_at_edge():
    sol = cs.well_match(-0.5, 0.8)
    r = np.array([0.8 * (1 - 1e-12), 0.8 * (1 + 1e-12)])
    psi = cs.well_eigenfunction(sol, r)
    assert psi == pytest.approx([1.0, 1.0], abs=1e-10)


def test_tau_log_bracket():
    svals = np.geomspace(1e-12, 1e-1, 23)
    prods = [cs.well_match_log(-1.0, math.log(s)).tau ** 2 * math.log(1 / s) for s in svals]
    taus = [cs.well_match_log(-1.0, math.log(s)).tau for s in svals]
    assert all(1.5 <= p <= 2.0 for p in prods)
    assert all(a < b for a, b in zip(taus, taus[1:]))  # tau -> 0 as s -> 0


def test_well_match_domain():
    with pytest.raises(DomainError):
        cs.well_match(0.5, 1.0)
    with pytest.raises(DomainError):
        cs.well_match(-1.0, 2.0)
    with pytest.raises(DomainError):
        cs.well_match(-1.0, 0.0)


def test_log_space_extreme_well():
    sol = cs.well_match_log(-0.5, -1500.0)
    assert sol.delta == 0.0 and sol.residual <= 1e-12
    assert sol.tau**2 * (1500.0 + 0.5 * math.log(2.0)) == pytest.approx(2.0, abs=0.01)
    with pytest.raises(DomainError):
        cs.well_eigenfunction_residual(sol)


def test_van_der_corput():
    assert [cs.van_der_corput(n) for n in range(1, 8)] == [0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875]
    assert cs.lambda_sequence(3, scale=2.0) == -1.5
    with pytest.raises(DomainError):
        cs.van_der_corput(0)


def test_smoothstep():
    t = np.linspace(-0.5, 1.5, 401)
    s, ds, dds = cs.smoothstep(t)
    assert np.all(np.diff(s) >= 0) and s[0] == 0 and s[-1] == 1
    for edge in (0.0, 1.0):
        _, d1, d2 = cs.smoothstep(np.array([edge]))
        assert d1[0] == 0 and d2[0] == 0
    # derivatives consistent with finite differences
    tt = np.linspace(0.1, 0.9, 9)
    h = 1e-6
    fd = (cs.smoothstep(tt + h)[0] - cs.smoothstep(tt - h)[0]) / (2 * h)
    assert np.allclose(fd, cs.smoothstep(tt)[1], atol=1e-8)


def test_start_index():
    assert cs.start_index(0.1) == 11
    tail = math.pi**2 / 6 - sum(1 / n**2 for n in range(1, 11))
    assert tail < 0.1 < tail + 1 / 100


def test_relative_tail_mass_against_quadrature():
    sol = cs.well_match(-0.7, 0.4)
    kappa = sol.kappa
    delta = sol.delta

    def psi2r(r):
        return float(cs.well_eigenfunction(sol, np.array([r]))[0]) ** 2 * 2 * math.pi * r

    psi_edge = special.k0(kappa * delta)
    inner = integrate.quad(psi2r, 0, delta, epsrel=1e-12)[0]
    outer = integrate.quad(psi2r, delta, 60.0, epsrel=1e-12, limit=200)[0]
    tail = integrate.quad(psi2r, 3.0, 60.0, epsrel=1e-12, limit=200)[0]
    assert cs.relative_tail_mass(sol, 3.0) == pytest.approx(tail / (inner + outer), rel=1e-9)
    assert math.exp(cs._log_norm2(sol)) == pytest.approx((inner + outer) * psi_edge**2, rel=1e-9)


def test_weyl_residual_decreases_with_cutoff():
    sol = cs.well_match(-0.5, 0.3)
    res = [cs.weyl_cutoff_residual(sol, R).residual for R in (4.0, 8.0, 16.0, 32.0)]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert res[-1] < 0.05


def test_small_ess_spec_build():
    E = cs.build_ess_spec_potential(0.1, count=3)
    assert E.n0 == 11 and len(E.entries) == 3
    assert E.total_mass < 0.1 and E.balls_disjoint()
    for e in E.entries:
        assert e.well.lam == cs.lambda_sequence(e.n)
        assert e.well.h_delta2 * e.n**2 < 1
        assert math.pi * e.well.h_delta2 < e.n**-2
        assert e.tail_mass < 1 / e.n and e.residual < 0.5 / e.n
        assert cs.weyl_sequence_residual(e, e.cutoff) == pytest.approx(e.residual, rel=1e-12)
        assert cs.weyl_sequence_residual(e) == e.well.residual
    assert len(E.rows()) == 3 and len(E.rows()[0]) == len(E.CSV_HEADER)


def test_ess_spec_truncation():
    E = cs.build_ess_spec_potential(0.1, count=3, min_log_delta=-1.0)
    assert E.entries == [] and E.truncated == [11, 12, 13]


def test_spots_reference_values():
    S = cs.spots_threshold()
    assert S.c1 == pytest.approx(-512 * math.pi / 315, rel=1e-12)
    assert S.c2 == pytest.approx(C2_SPOTS_REF, rel=1e-10)
    assert S.sigma_star == pytest.approx(SIGMA_STAR_REF, rel=1e-10)


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=1.5, max_value=4.0), st.floats(min_value=0.5, max_value=3.0))
def test_spots_scaling_identity(power, amplitude):
    S = cs.spots_threshold(cs.BumpProfile(amplitude, power), n_values=range(1, 6))
    vals = [v for _, _, v in S.quotients]
    assert all(v < 0 for v in vals)
    assert np.ptp(vals) <= 1e-9 * abs(vals[0])


def test_bump_profile_needs_c1():
    with pytest.raises(DomainError):
        cs.BumpProfile(1.0, 1.0)
    with pytest.raises(DomainError):
        cs.spots_threshold(dimension=2)


def test_green_constant():
    assert cs.green_constant(3) == pytest.approx(1 / (4 * math.pi), rel=1e-15)
    # c1(3): Newtonian potential of the unit ball at its centre is 2 pi / (4 pi) = 1/2
    assert cs.self_interaction_constant(3) == pytest.approx(0.5, rel=1e-10)


def test_gamma_entry():
    v = 4 * math.pi / 3
    assert cs.gamma_entry(3, 5, 3) == pytest.approx(v / (4 * math.pi) / (24 - 2), rel=1e-14)
    with pytest.raises(DomainError):
        cs.gamma_entry(1, 2, 3)


@pytest.mark.parametrize("d", [3, 4])
def test_gamma_row_sums_stable_under_doubling(d):
    r1, t1 = cs.gamma_row_sup(d, 20)
    r2, t2 = cs.gamma_row_sup(d, 40)
    assert abs(r1 - r2) <= t1
    assert t2 < t1


def test_sparse_certificate():
    c = cs.sparse_bump_certificate(3, n0=3)
    assert c.verdict == "Empty"
    assert c.kappa == pytest.approx(2 * c.rho / math.log(3), rel=1e-15)
    assert c.gamma_sup == pytest.approx(0.5 / math.log(3), rel=1e-10)
    auto = cs.sparse_bump_certificate(4)
    assert auto.verdict == "Empty"
    if auto.n0 > 3:
        assert cs.sparse_bump_certificate(4, n0=auto.n0 - 1).verdict == "Inconclusive"
    with pytest.raises(DomainError):
        cs.sparse_bump_certificate(3, n0=2)


@pytest.mark.parametrize("beta,ref", [
    (0.5, 1.67551608191455639),
    (1.0, 0.957437761094032225),
    (1.5, 0.638291840729354817),
    (2.0, 0.464212247803167139),
])
def test_beta_bump_integral(beta, ref):
    b = cs.beta_divergence_check(beta)
    assert b.bump_integral == pytest.approx(ref, rel=1e-10)
    assert b.divergent
    n = b.comparison_start
    assert math.log(n) ** beta <= n * (1 + 1e-12)


def test_beta_partial_sums_and_finite_family():
    b = cs.beta_divergence_check(1.0, checkpoints=(100, 1000))
    direct = b.bump_integral * sum(1 / math.log(n) for n in range(3, 1001))
    assert b.partial_sums[-1] == (1000, pytest.approx(direct, rel=1e-12))
    fin = cs.beta_divergence_check(1.0, n_max=50)
    assert not fin.divergent and fin.comparison_start is None
    with pytest.raises(DomainError):
        cs.beta_divergence_check(1.0, n_max=2)
    with pytest.raises(DomainError):
        cs.beta_divergence_check(0.0)
