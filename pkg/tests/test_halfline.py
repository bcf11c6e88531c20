import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special

from specgap import core_model as cm
from specgap import halfline_shooting as hl
from specgap.errors import ContractionError, DomainError, MissingZeroCrossing

EXP = cm.ExponentialBump(1, 1.0, 1.0)


def exp_crossing(sigma):
    """psi'' + sigma e^-x psi = 0 is Bessel's equation in t = 2 sqrt(sigma) e^(-x/2)."""
    t0 = 2.0 * math.sqrt(sigma)
    f = lambda t: special.y1(t0) * special.j0(t) - special.j1(t0) * special.y0(t)
    t = optimize.brentq(f, 1e-300, t0 * (1 - 1e-9), xtol=1e-300, rtol=1e-15)
    return 2.0 * math.log(t0 / t)


@pytest.mark.parametrize("sigma", [0.01, 0.1, 0.5])
def test_crossing_against_bessel_solution(sigma):
    tr = hl.integrate_ivp(EXP, sigma)
    assert tr.x0 == pytest.approx(exp_crossing(sigma), rel=1e-8)
    assert tr.extrapolated == (tr.x0 > tr.x_max)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1.4))
def test_jost_against_bessel_solution(sigma):
    # psi_1 = J0(2 sqrt(sigma) e^(-x/2))
    t0 = 2.0 * math.sqrt(sigma)
    j = hl.jost_solution(EXP, sigma)
    assert j.psi1_0 == pytest.approx(special.j0(t0), abs=1e-10)
    assert j.dpsi1_0 == pytest.approx(math.sqrt(sigma) * special.j1(t0), abs=1e-10)
    assert j.B == -j.dpsi1_0 and j.A == pytest.approx(1.0 / j.psi1_0)


def test_rk4_fourth_order():
    ref = hl.integrate_ivp(EXP, 0.5, x_max=4.0, rtol=1e-13)
    end = ref.dense(4.0)[0]
    errs = []
    for h in (0.1, 0.05, 0.025):
        tr = hl.integrate_ivp(EXP, 0.5, x_max=4.0, method="rk4", step=h)
        errs.append(abs(tr.psi[-1] - end))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(3.7 < p < 4.3 for p in orders)


@pytest.mark.parametrize("V", [
    EXP,
    cm.GaussianBump(1, 1.0, 0.5, [2.0]),
    cm.MeanZeroPair.balanced(1, 1.0, 0.5, 1.0, center=[5.0], second_center=[6.5]),
])
def test_wronskian_conserved(V):
    j = hl.jost_solution(V, 0.05)
    xs, w = hl.jost_wronskian(V, 0.05, j, 12.0)
    assert np.max(np.abs(w - w[0])) <= 1e-8 * abs(w[0])
    assert w[0] == pytest.approx(1.0, rel=1e-10)


def test_expansion_coefficients_exponential():
    c = hl.expansion_coefficients(EXP)
    assert c.a == pytest.approx(1.0, rel=1e-9)
    assert c.b == pytest.approx(1.0, rel=1e-9)
    assert c.c2 == pytest.approx(0.5, rel=1e-8)


def test_expansion_coefficients_gaussian_closed_form():
    V = cm.GaussianBump(1, 1.0, 0.5, [2.0])
    c = hl.expansion_coefficients(V)
    s = 0.5
    b = s * math.sqrt(math.pi / 2) * (1 + math.erf(2.0 / (s * math.sqrt(2))))
    a = s * s * math.exp(-8.0) + 2.0 * b
    assert c.b == pytest.approx(b, rel=1e-9)
    assert c.a == pytest.approx(a, rel=1e-9)


def test_sigma_fit_first_order():
    fit = hl.fit_sigma_expansion(EXP)
    assert fit.a_fit == pytest.approx(1.0, abs=1e-4)
    assert fit.b_fit == pytest.approx(1.0, abs=1e-4)
    # psi_1'(0) = sqrt(s) J1(2 sqrt s) = s - s^2/2 + ...: the -ab + c^2 reading
    assert fit.supported_sign == "-ab+c2"
    assert fit.second_order == pytest.approx(-0.5, abs=5e-3)


@settings(max_examples=6, deadline=None)
@given(st.floats(min_value=1e-3, max_value=5e-2))
def test_B_negative_for_nonnegative_mean(sigma):
    for V in (EXP, cm.GaussianBump(1, 1.0, 0.5, [2.0])):
        j = hl.jost_solution(V, sigma)
        assert j.B < 0
        assert hl.integrate_ivp(V, sigma).x0 is not None


def test_truncated_form_values():
    tr = hl.integrate_ivp(EXP, 0.01)
    form = hl.truncated_form_value(EXP, 0.01, tr)
    assert abs(form.form_sigma) <= 1e-6 * form.kinetic
    assert form.form_double < 0
    raw = hl.truncated_form_value(EXP, 0.01, tr, resample=None)
    assert raw.form_sigma == pytest.approx(form.form_sigma, abs=1e-5 * form.kinetic)


def test_no_crossing_for_repulsive_potential():
    V = cm.GaussianBump(1, -1.0, 1.0)
    tr = hl.integrate_ivp(V, 0.1)
    assert tr.x0 is None
    with pytest.raises(MissingZeroCrossing):
        hl.truncated_form_value(V, 0.1, tr)


def test_default_x_max():
    x = hl.default_x_max(EXP)
    assert x == 32.0  # int_x^inf x e^-x = (x + 1) e^-x < 1e-12 first at a dyadic x
    assert hl.default_x_max(cm.GaussianBump(1, 1.0, 1.0, [3.0])) <= 16.0


def test_shift_used_for_strong_coupling():
    # sigma int x e^-x = sigma: no contraction from the origin once sigma >= 1
    j = hl.jost_solution(EXP, 1.2)
    assert j.shift > 0 and j.alpha_contraction < 1
    assert j.psi1_0 == pytest.approx(special.j0(2.0 * math.sqrt(1.2)), abs=1e-9)
    # J0(2 sqrt 3) < 0: psi_1 has a zero on the half-line
    with pytest.raises(ContractionError):
        hl.jost_solution(EXP, 3.0)


def test_domain_checks():
    with pytest.raises(DomainError):
        hl.integrate_ivp(cm.GaussianBump(2, 1.0, 1.0), 0.1)
    with pytest.raises(DomainError):
        hl.integrate_ivp(EXP, 0.1, method="rk4")
    with pytest.raises(DomainError):
        hl.integrate_ivp(EXP, 0.1, method="euler")


def test_trace_rows_and_certificate():
    tr = hl.integrate_ivp(EXP, 0.5)
    rows = tr.to_rows()
    assert rows[0] == (0.0, 1.0, 0.0)
    cert = tr.certificate_dict()
    assert cert["x0"] == tr.x0 and cert["x0_beyond_x_max"] is False
